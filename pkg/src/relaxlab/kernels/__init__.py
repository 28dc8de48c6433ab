"""Hot loops of the finite-volume scheme.

The compiled core (``_cy``) is used when it was built; otherwise the numpy
versions in ``_py`` are used.  ``RELAXLAB_KERNELS=python`` forces the
fallback and ``RELAXLAB_KERNELS=cython`` makes a missing core an error.
"""
import os

from . import _py

BACKEND = "python"
_choice = os.environ.get("RELAXLAB_KERNELS", "auto").lower()
if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"RELAXLAB_KERNELS must be auto, python or cython, not {_choice!r}")

_impl = _py
if _choice != "python":
    try:
        from . import _cy as _impl
        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _py

rusanov_divergence = _impl.rusanov_divergence
relax_exact = _impl.relax_exact
max_jump = _impl.max_jump


def backends():
    """Available kernel modules by name (for tests and benchmarks)."""
    out = {"python": _py}
    try:
        from . import _cy
        out["cython"] = _cy
    except ImportError:
        pass
    return out


def use(name):
    """Rebind the module-level kernels to backend ``name``; returns the
    previous backend name."""
    global rusanov_divergence, relax_exact, max_jump, BACKEND
    avail = backends()
    if name not in avail:
        raise ValueError(f"kernel backend {name!r} is not available ({sorted(avail)})")
    prev, impl = BACKEND, avail[name]
    rusanov_divergence = impl.rusanov_divergence
    relax_exact = impl.relax_exact
    max_jump = impl.max_jump
    BACKEND = name
    return prev
