"""Named initial profiles for the equilibrium variables."""
import numpy as np

from .errors import ContractError

PRESETS = ("constant", "sine", "gaussian-bump")

# background states; the combustion mass fraction sits mid-range
_BASE = {"elasticity": (0.0, 0.0), "combustion": (0.0, 0.0, 0.5)}


def background(model):
    return np.asarray(_BASE.get(model.name, (0.0,) * model.n), dtype=float)


def initial_profile(model, preset="sine", amplitude=0.1, wavenumber=1, x_lo=0.0, x_hi=1.0):
    """Return ``x -> u0(x)`` with values of shape ``x.shape + (n,)``.

    ``sine`` puts ``amplitude * sin(2 pi k xi + i pi/3)`` on component ``i``
    (``xi`` the position scaled to the unit interval), ``gaussian-bump`` a
    bump of width 0.1 centred in the domain, ``constant`` a uniform shift.
    All are added to the model's background state.
    """
    if preset not in PRESETS:
        raise ContractError(f"unknown initial condition {preset!r}; expected one of {PRESETS}")
    base = background(model)
    n = model.n
    L = x_hi - x_lo
    phase = np.arange(n) * np.pi / 3.0

    def ic(x):
        xi = (np.asarray(x, dtype=float) - x_lo) / L
        if preset == "sine":
            bump = np.sin(2.0 * np.pi * wavenumber * xi[..., None] + phase)
        elif preset == "gaussian-bump":
            bump = np.exp(-(((xi - 0.5) / 0.1) ** 2))[..., None] * np.ones(n)
        else:
            bump = np.ones(xi.shape + (n,))
        return base + amplitude * bump

    return ic
