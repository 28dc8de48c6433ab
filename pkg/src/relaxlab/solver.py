"""First-order finite-volume integrator on a periodic 1-d grid.

The relaxation system is advanced by Strang splitting: half a relaxation
substep (integrated exactly), one SSP-RK2 transport step with the Rusanov
flux and explicit source, and another half relaxation substep.  The same
transport step applied to ``u_t + f(u)_x = g(u)`` gives the equilibrium
reference solver.
"""
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import (BlowUpError, ContractError, SmoothnessLostError, StepSizeError,
                     UnsupportedModelError)
from .framework import dissipation, equilibrium_entropy, equilibrium_flux, equilibrium_source

DEFAULT_CFL = 0.45
SMOOTHNESS_GROWTH = 1e3
_GL3_NODES, _GL3_WEIGHTS = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid of ``cells`` cells on ``[x_lo, x_hi]``."""
    x_lo: float = 0.0
    x_hi: float = 1.0
    cells: int = 256
    boundary: str = "periodic"

    def __post_init__(self):
        if not self.x_hi > self.x_lo:
            raise ContractError("grid requires x_hi > x_lo")
        if int(self.cells) != self.cells or self.cells < 8:
            raise ContractError("grid requires cells >= 8")
        if self.boundary != "periodic":
            raise ContractError("only periodic boundaries are supported")

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / self.cells

    @property
    def centers(self):
        return self.x_lo + (np.arange(self.cells) + 0.5) * self.dx

    def refined(self, factor):
        return GridSpec(self.x_lo, self.x_hi, self.cells * int(factor), self.boundary)


@dataclass
class StateField:
    """Cell averages ``data[i, k]`` of ``width`` components at ``time``."""
    grid: GridSpec
    data: np.ndarray
    time: float = 0.0
    names: tuple = ()

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[0] != self.grid.cells:
            raise ContractError(
                f"field data must have shape ({self.grid.cells}, width), got {self.data.shape}")
        if self.time < 0:
            raise ContractError("field time must be >= 0")

    @property
    def width(self):
        return self.data.shape[1]

    def copy(self, data=None, time=None):
        return StateField(self.grid, self.data.copy() if data is None else data,
                          self.time if time is None else time, self.names)


@dataclass(frozen=True)
class TimeControl:
    t_end: float
    cfl: float = DEFAULT_CFL
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not self.t_end > 0:
            raise ContractError("t_end must be > 0")
        if not 0.0 < self.cfl <= 1.0:
            raise ContractError("cfl must lie in (0, 1]")
        if self.max_steps < 1:
            raise ContractError("max_steps must be >= 1")


@dataclass
class SimulationRun:
    """Snapshots at the requested output times plus a scalar time series.

    ``series`` maps ``t``, ``dt``, ``total_entropy``, ``total_dissipation``
    (and ``min_Z``/``max_Z`` for models with a bounded component) to arrays,
    one entry per recorded step; the first entry is the initial state.
    """
    model: object
    kind: str
    snapshots: list
    series: dict
    eps: Optional[float] = None
    steps: int = 0

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    def snapshot_at(self, t, tol=1e-12):
        for s in self.snapshots:
            if abs(s.time - t) <= tol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t!r}")


# --- systems --------------------------------------------------------------

@dataclass(frozen=True)
class _System:
    flux: Callable
    source: Callable
    speed: Callable
    entropy: Callable
    dissipation: Optional[Callable]
    names: tuple
    parts: Optional[Callable] = None  # U -> (flux, source), sharing work

    def flux_and_source(self, U):
        if self.parts is not None:
            return self.parts(U)
        return self.flux(U), self.source(U)


def _relaxation_system(model):
    return _System(model.flux, model.source, model.speed, model.entropy,
                   lambda U: dissipation(model, U), model.component_names)


def _equilibrium_speed(model):
    if model.equilibrium_wave_speed is not None:
        return model.equilibrium_wave_speed
    from .numerics import jacobian

    def speed(u):
        J = jacobian(lambda w: equilibrium_flux(model, w), u)
        return np.max(np.abs(np.linalg.eigvals(J)), axis=-1)
    return speed


def _equilibrium_system(model, speed=None):
    if speed is None:
        speed = _equilibrium_speed(model)
    elif np.isscalar(speed):
        value = float(speed)
        speed = lambda u: np.full(u.shape[:-1], value)  # noqa: E731
    names = tuple(model.component_names[i] for i in range(model.n)) \
        if np.allclose(model.projection[:, : model.n], np.eye(model.n)) \
        else tuple(f"u{i}" for i in range(model.n))
    P = model.projection.T

    def parts(u):
        M = model.maxwellian(u)
        return model.flux(M) @ P, model.source(M) @ P

    return _System(lambda u: equilibrium_flux(model, u),
                   lambda u: equilibrium_source(model, u), speed,
                   lambda u: equilibrium_entropy(model, u), None, names, parts)


def _system_for(model, width):
    if width == model.N:
        return _relaxation_system(model)
    if width == model.n:
        return _equilibrium_system(model)
    raise ContractError(f"field width {width} matches neither n={model.n} nor N={model.N}")


# --- elementary operations ------------------------------------------------

def numerical_flux(model, U_L, U_R, speed):
    """Rusanov flux ``(F(U_L) + F(U_R))/2 - speed (U_R - U_L)/2``.

    Works for relaxation states (width N) and equilibrium states (width n).
    """
    U_L = np.asarray(U_L, dtype=float)
    U_R = np.asarray(U_R, dtype=float)
    if U_L.shape != U_R.shape:
        raise ContractError("left and right states must have the same shape")
    flux = _system_for(model, U_L.shape[-1]).flux
    speed = np.asarray(speed, dtype=float)
    if np.any(speed < 0):
        raise ContractError("speed must be non-negative")
    s = speed[..., None] if speed.ndim else speed
    return 0.5 * (flux(U_L) + flux(U_R)) - 0.5 * s * (U_R - U_L)


def max_wave_speed(model, field):
    """Largest per-cell wave-speed bound over the field."""
    sys = _system_for(model, field.width)
    return float(np.max(sys.speed(field.data)))


def _rhs(sys, U, dx, s=None):
    if s is None:
        s = np.asarray(sys.speed(U), dtype=float)
    F, G = sys.flux_and_source(U)
    return kernels.rusanov_divergence(U, F, s, dx) + G


def _transport(sys, U, dt, dx, cfl):
    s = np.asarray(sys.speed(U), dtype=float)
    smax = float(np.max(s))
    if cfl is not None and smax > 0 and dt > cfl * dx / smax * (1.0 + 1e-12):
        raise StepSizeError(
            f"dt={dt:.6g} exceeds the CFL bound {cfl * dx / smax:.6g} "
            f"(cfl={cfl}, speed={smax:.6g})")
    U1 = U + dt * _rhs(sys, U, dx, np.broadcast_to(s, U.shape[:1]))
    return 0.5 * U + 0.5 * (U1 + dt * _rhs(sys, U1, dx))


def hyperbolic_step(model, field, dt, cfl=DEFAULT_CFL):
    """One SSP-RK2 step of the transport part with explicit source.

    Raises :class:`StepSizeError` if ``dt`` exceeds ``cfl * dx / speed``.
    """
    if not dt > 0:
        raise ContractError("dt must be > 0")
    sys = _system_for(model, field.width)
    data = _transport(sys, field.data, dt, field.grid.dx, cfl)
    return field.copy(data=data, time=field.time + dt)


def _relax(model, U, dt, eps):
    target = model.maxwellian(U @ model.projection.T)[:, model.relaxed]
    return kernels.relax_exact(U, target, model.relaxed, np.exp(-dt / eps))


def relaxation_substep(model, field, dt, eps):
    """Integrate ``U_t = R(U)/eps`` exactly over ``dt``.

    The relaxed components obey ``alpha' = (h - alpha)/eps`` with ``h`` frozen
    (it depends only on the conserved part, which does not move), hence
    ``alpha <- h + (alpha - h) exp(-dt/eps)``.
    """
    if not model.relaxed:
        raise UnsupportedModelError(
            f"{model.name}: relaxation term is not declared affine in the relaxed components")
    if field.width != model.N:
        raise ContractError("relaxation_substep needs a relaxation-state field")
    if not eps > 0 or dt < 0:
        raise ContractError("relaxation_substep needs eps > 0 and dt >= 0")
    return field.copy(data=_relax(model, field.data, dt, eps))


# --- initial data ---------------------------------------------------------

def cell_average(grid, ic, width=None):
    """Cell averages of ``ic`` by 3-point Gauss-Legendre quadrature per cell.

    A callable produced by :func:`relaxlab.diagnostics.well_prepared_ic`
    carries its equilibrium profile and Maxwellian; its averages are taken as
    ``M(average of u0)`` so the discrete data sit exactly on the manifold.
    """
    inner = getattr(ic, "equilibrium_ic", None)
    if inner is not None:
        return ic.maxwellian(cell_average(grid, inner))
    x = grid.centers[:, None] + 0.5 * grid.dx * _GL3_NODES
    vals = np.asarray(ic(x), dtype=float)
    if vals.ndim == 2:  # scalar profile
        vals = vals[..., None]
    avg = 0.5 * np.einsum("ijk,j->ik", vals, _GL3_WEIGHTS)
    if width is not None and avg.shape[1] != width:
        raise ContractError(f"initial condition has {avg.shape[1]} components, expected {width}")
    return avg


def _initial_field(grid, ic, width, names):
    if isinstance(ic, StateField):
        if ic.grid != grid or ic.width != width:
            raise ContractError("initial field does not match grid/width")
        return ic.copy(time=0.0)
    if isinstance(ic, np.ndarray):
        return StateField(grid, ic, 0.0, names)
    return StateField(grid, cell_average(grid, ic, width), 0.0, names)


def _output_times(tc, output_times):
    if output_times is None:
        out = np.linspace(0.0, tc.t_end, 21)
    else:
        out = np.asarray(sorted(set(float(t) for t in output_times)))
    if out.size and (out[0] < 0 or out[-1] > tc.t_end * (1 + 1e-12)):
        raise ContractError("output times must lie in [0, t_end]")
    return out


# --- drivers --------------------------------------------------------------

class _Recorder:
    def __init__(self, sys, model, dx, mode):
        self.sys, self.dx, self.mode = sys, dx, mode
        self.bounded = dict(model.clamp or {}) if sys.dissipation is not None else {
            k: v for k, v in (model.clamp or {}).items() if k < model.n}
        self.rows = {k: [] for k in ("t", "dt", "total_entropy", "total_dissipation")}
        for k in self.bounded:
            name = sys.names[k] if k < len(sys.names) else str(k)
            self.rows[f"min_{name}"] = []
            self.rows[f"max_{name}"] = []

    def record(self, t, dt, U):
        r = self.rows
        r["t"].append(t)
        r["dt"].append(dt)
        r["total_entropy"].append(self.dx * float(np.sum(self.sys.entropy(U))))
        dis = 0.0 if self.sys.dissipation is None else \
            self.dx * float(np.sum(self.sys.dissipation(U)))
        r["total_dissipation"].append(dis)
        for k in self.bounded:
            name = self.sys.names[k] if k < len(self.sys.names) else str(k)
            r[f"min_{name}"].append(float(U[:, k].min()))
            r[f"max_{name}"].append(float(U[:, k].max()))

    def result(self):
        return {k: np.asarray(v) for k, v in self.rows.items()}


def _check_finite(U, t):
    if not np.all(np.isfinite(U)):
        bad = np.argwhere(~np.isfinite(U))
        raise BlowUpError(t, int(bad[0, 0]))


def _integrate(model, sys, field, tc, output_times, step, series, monitor=None):
    if series not in ("step", "snapshots", "none"):
        raise ContractError("series must be 'step', 'snapshots' or 'none'")
    outs = _output_times(tc, output_times)
    dx = field.grid.dx
    rec = _Recorder(sys, model, dx, series)
    U, t = field.data, 0.0
    snaps = []
    if series != "none":
        rec.record(0.0, 0.0, U)
    k = 0
    if outs.size and outs[0] == 0.0:
        snaps.append(field.copy(data=U.copy(), time=0.0))
        k = 1
    steps = 0
    t_stop = outs[-1] if outs.size else tc.t_end
    while t < t_stop:
        if steps >= tc.max_steps:
            raise StepSizeError(f"max_steps={tc.max_steps} reached at t={t:.6g}")
        s = float(np.max(sys.speed(U)))
        dt = tc.cfl * dx / s if s > 0 else t_stop - t
        target = outs[k] if k < outs.size else t_stop
        hit = dt >= (target - t) * (1.0 - 1e-12)
        if hit:
            dt = target - t
        U = step(U, dt)
        t = target if hit else t + dt
        steps += 1
        _check_finite(U, t)
        if monitor is not None:
            monitor(U, t)
        at_output = hit and k < outs.size
        if series == "step" or (series == "snapshots" and at_output):
            rec.record(t, dt, U)
        if at_output:
            snaps.append(field.copy(data=U.copy(), time=t))
            k += 1
    return snaps, rec.result(), steps


def run_relaxation(model, grid, ic, tc, eps, output_times=None, series="step"):
    """Integrate the relaxation system with Strang splitting.

    Parameters
    ----------
    model : ModelDescriptor
    grid : GridSpec
    ic : callable, ndarray or StateField
        ``x -> U0(x)`` (cell-averaged by quadrature), or ready cell averages.
    tc : TimeControl
    eps : float
        Relaxation time, ``> 0``.  The time step is set by the CFL condition
        alone; the stiff part is integrated exactly.
    output_times : sequence of float, optional
        Snapshot times in ``[0, t_end]`` (hit exactly); 21 uniform times by
        default.
    series : {"step", "snapshots", "none"}
        When to record entropy, dissipation and bounds.
    """
    if not eps > 0:
        raise ContractError("eps must be > 0")
    if not model.relaxed:
        raise UnsupportedModelError(f"{model.name}: no exactly integrable relaxation term")
    sys = _relaxation_system(model)
    field = _initial_field(grid, ic, model.N, model.component_names)
    dx = grid.dx
    cfl = tc.cfl

    def step(U, dt):
        U = _relax(model, U, 0.5 * dt, eps)
        U = _transport(sys, U, dt, dx, cfl)
        return _relax(model, U, 0.5 * dt, eps)

    snaps, ser, n = _integrate(model, sys, field, tc, output_times, step, series)
    return SimulationRun(model, "relaxation", snaps, ser, eps, n)


def run_equilibrium(model, grid, ic_u, tc, output_times=None, series="step", speed=None,
                    growth_limit=SMOOTHNESS_GROWTH):
    """Integrate ``u_t + f(u)_x = g(u)`` with the same transport scheme.

    ``speed`` overrides the wave-speed bound used by the Rusanov flux (a
    constant or callable); by default the model's equilibrium speed.  Raises
    :class:`SmoothnessLostError` once the largest difference quotient grows by
    more than ``growth_limit`` relative to the initial data.
    """
    sys = _equilibrium_system(model, speed)
    field = _initial_field(grid, ic_u, model.n, sys.names)
    dx = grid.dx
    cfl = tc.cfl
    base = max(kernels.max_jump(field.data, dx), 1e-9)

    def step(U, dt):
        return _transport(sys, U, dt, dx, cfl)

    def monitor(U, t):
        growth = kernels.max_jump(U, dx) / base
        if growth > growth_limit:
            raise SmoothnessLostError(t, growth)

    snaps, ser, n = _integrate(model, sys, field, tc, output_times, step, series, monitor)
    return SimulationRun(model, "equilibrium", snaps, ser, None, n)


# --- export ---------------------------------------------------------------

def snapshot_filename(time, prefix=""):
    return f"{prefix}t{time:.6g}.csv"


def write_snapshot_csv(field, directory, prefix=""):
    """Write one row per cell (``x`` then the components); returns the path."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, snapshot_filename(field.time, prefix))
    names = field.names or tuple(f"c{i}" for i in range(field.width))
    table = np.column_stack([field.grid.centers, field.data])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(("x",) + tuple(names)) + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    return path


def read_snapshot_csv(path, grid):
    """Inverse of :func:`write_snapshot_csv` (time parsed from the name)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    stem = os.path.basename(path).rsplit(".csv", 1)[0]
    time = float(stem[stem.rindex("t") + 1:])
    return StateField(grid, table[:, 1:], time, tuple(header[1:]))


def write_series_csv(run, path):
    cols = list(run.series)
    table = np.column_stack([run.series[c] for c in cols])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    return path
