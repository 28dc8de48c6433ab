"""Vectorized numerical building blocks.

Everything here works on numpy arrays with arbitrary leading (batch)
dimensions so that a model can be evaluated on a whole grid at once.

- central finite differences (gradients and Jacobians)
- safeguarded Newton/bisection for monotone scalar equations
- damped Newton for gradient maps with symmetric positive Jacobians
- adaptive composite Gauss-Legendre quadrature and a cached antiderivative
"""
import threading

import numpy as np

from .errors import NumericalError

MAXITER = 100
ROOT_RTOL = 1e-12
QUAD_TOL = 1e-11

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def fd_step(x):
    """Central-difference step ``max(1e-5, 1e-7*|x|)`` per component."""
    return np.maximum(1e-5, 1e-7 * np.abs(x))


def jacobian(fun, x):
    """Central finite-difference Jacobian of a vector map.

    Parameters
    ----------
    fun : callable
        Maps ``(..., k)`` arrays to ``(..., p)`` arrays.
    x : ndarray, shape (..., k)

    Returns
    -------
    ndarray, shape (..., p, k)
    """
    x = np.asarray(x, dtype=float)
    k = x.shape[-1]
    h = fd_step(x)
    eye = np.eye(k)
    # leading axis enumerates the perturbed component
    shift = h[None, ...] * eye.reshape((k,) + (1,) * (x.ndim - 1) + (k,))
    fp = fun(x[None, ...] + shift)
    fm = fun(x[None, ...] - shift)
    hk = np.moveaxis(h, -1, 0)[..., None]
    cols = (fp - fm) / (2.0 * hk)
    return np.moveaxis(cols, 0, -1)


def gradient(fun, x):
    """Central finite-difference gradient of a scalar map, shape (..., k)."""
    return jacobian(lambda y: np.asarray(fun(y))[..., None], x)[..., 0, :]


def solve_monotone(fun, dfun, target, x0=None, slope_min=None,
                   rtol=ROOT_RTOL, maxiter=MAXITER):
    """Solve ``fun(x) = target`` elementwise for a strictly monotone ``fun``.

    Newton iterations are safeguarded by a bisection bracket; any Newton
    iterate leaving the bracket is replaced by the bracket midpoint.  When
    ``slope_min`` (a lower bound on ``|fun'|``) is known the initial bracket
    follows from the mean value theorem, otherwise it is grown by doubling.

    Convergence means ``|fun(x) - target| <= rtol * max(1, |target|)``.
    """
    target = np.asarray(target, dtype=float)
    x = np.zeros_like(target) if x0 is None else np.array(x0, dtype=float)
    x = np.broadcast_to(x, target.shape).copy()
    r = fun(x) - target
    scale = rtol * np.maximum(1.0, np.abs(target))
    if np.all(np.abs(r) <= scale):
        return x

    if slope_min is not None:
        width = np.abs(r) / slope_min * 1.01 + 1e-12
        lo, hi = x - width, x + width
    else:
        width = np.maximum(1.0, np.abs(x))
        lo, hi = x - width, x + width
        for _ in range(200):
            same = np.sign(fun(lo) - target) == np.sign(fun(hi) - target)
            if not same.any():
                break
            width = np.where(same, 2.0 * width, width)
            lo, hi = np.where(same, x - width, lo), np.where(same, x + width, hi)
        else:
            raise NumericalError("could not bracket a root of a monotone map")
    r_lo = fun(lo) - target

    for _ in range(maxiter):
        active = np.abs(r) > scale
        if not active.any():
            return x
        d = dfun(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / d
        outside = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(outside, 0.5 * (lo + hi), xn)
        xn = np.where(active, xn, x)
        rn = fun(xn) - target
        same_as_lo = np.sign(rn) == np.sign(r_lo)
        upd = active & same_as_lo
        lo = np.where(upd, xn, lo)
        r_lo = np.where(upd, rn, r_lo)
        hi = np.where(active & ~same_as_lo, xn, hi)
        x, r = xn, rn
        # bracket collapsed to roundoff: the iterate is as good as it gets
        tiny = (hi - lo) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(x))
        scale = np.where(tiny, np.maximum(scale, np.abs(r)), scale)
    bad = np.abs(r) > scale
    if bad.any():
        raise NumericalError(
            f"safeguarded Newton did not converge in {maxiter} iterations "
            f"(max residual {np.max(np.abs(r)):.3e})"
        )
    return x


def solve_gradient_map(grad, hess, target, x0=None, rtol=ROOT_RTOL,
                       maxiter=MAXITER):
    """Solve ``grad(x) = target`` for a gradient map with SPD Jacobian ``hess``.

    Damped Newton with backtracking on the merit ``|grad(x) - target|``.
    Batched over leading dimensions; ``target`` has shape (..., n).
    """
    target = np.asarray(target, dtype=float)
    x = np.zeros_like(target) if x0 is None else np.array(x0, dtype=float)
    x = np.broadcast_to(x, target.shape).copy()
    r = grad(x) - target
    norm = np.linalg.norm(r, axis=-1)
    scale = rtol * np.maximum(1.0, np.linalg.norm(target, axis=-1))
    for _ in range(maxiter):
        active = norm > scale
        if not active.any():
            return x
        step = -np.linalg.solve(hess(x), r[..., None])[..., 0]
        lam = np.ones(norm.shape)
        trial = x + step
        rt = grad(trial) - target
        nt = np.linalg.norm(rt, axis=-1)
        for _ in range(40):
            reject = active & (nt > (1.0 - 1e-4 * lam) * norm) & (lam > 1e-10)
            if not reject.any():
                break
            lam = np.where(reject, 0.5 * lam, lam)
            trial = np.where(reject[..., None], x + lam[..., None] * step, trial)
            rt_new = grad(trial) - target
            rt = np.where(reject[..., None], rt_new, rt)
            nt = np.linalg.norm(rt, axis=-1)
        keep = active[..., None]
        x = np.where(keep, trial, x)
        r = np.where(keep, rt, r)
        norm = np.where(active, nt, norm)
    if np.any(norm > scale):
        raise NumericalError(
            f"damped Newton did not converge in {maxiter} iterations "
            f"(max residual {np.max(norm):.3e})"
        )
    return x


def _gl_panel(f, a, b, args):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * _GL_NODES
    vals = f(x, *[arg.reshape(arg.shape[:1] + (1,) + arg.shape[1:]) for arg in args])
    return half * (vals @ _GL_WEIGHTS)


def gauss_legendre(f, a, b, args=(), tol=QUAD_TOL, max_depth=40):
    """Adaptive composite 7-point Gauss-Legendre quadrature, vectorized.

    Integrates ``f(x, *args)`` over ``[a, b]`` for 1-d arrays of endpoints.
    ``f`` receives ``x`` of shape (m, 7) and each extra argument of shape
    (m, ...) with a singleton axis inserted after the batch axis, so scalar
    arguments broadcast against ``x`` and vector arguments gain a node axis.  A panel is
    accepted once one- and two-panel estimates agree to ``tol``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    args = tuple(np.broadcast_to(np.asarray(arg, dtype=float),
                                 a.shape + np.shape(arg)[a.ndim:]) for arg in args)
    shape = a.shape
    a, b = a.ravel(), b.ravel()
    args = tuple(arg.reshape((a.size,) + arg.shape[len(shape):]) for arg in args)
    out = np.empty(a.size)
    whole = _gl_panel(f, a, b, args)
    _adapt(f, a, b, args, whole, tol, max_depth, np.arange(a.size), out)
    return out.reshape(shape)


def _adapt(f, a, b, args, whole, tol, depth, idx, out):
    m = 0.5 * (a + b)
    left = _gl_panel(f, a, m, args)
    right = _gl_panel(f, m, b, args)
    split = left + right
    # roundoff floor keeps tiny tolerances from forcing endless refinement
    done = np.abs(split - whole) <= np.maximum(tol, 64 * np.finfo(float).eps * np.abs(split))
    out[idx[done]] = split[done]
    if done.all():
        return
    if depth == 0:
        raise NumericalError("adaptive Gauss-Legendre quadrature hit its depth cap")
    rest = ~done
    sub = tuple(arg[rest] for arg in args)
    out_l = np.empty(rest.sum())
    out_r = np.empty(rest.sum())
    local = np.arange(rest.sum())
    _adapt(f, a[rest], m[rest], sub, left[rest], 0.5 * tol, depth - 1, local, out_l)
    _adapt(f, m[rest], b[rest], sub, right[rest], 0.5 * tol, depth - 1, local, out_r)
    out[idx[rest]] = out_l + out_r


class CachedAntiderivative:
    """Antiderivative ``x -> int_0^x f`` with memoized knot values.

    Knots sit on a uniform grid ``k * spacing``; their cumulative integrals
    are computed once, panel by panel, and the grid grows lazily to cover
    every requested argument.  Evaluation adds one short adaptive panel from
    the nearest knot.  Growth is serialized by a lock; reads of already
    built knots need no locking because the knot arrays are replaced, never
    mutated in place.
    """

    def __init__(self, f, spacing=0.125, tol=QUAD_TOL):
        self.f = f
        self.spacing = float(spacing)
        self.tol = tol
        self._lock = threading.Lock()
        self._pos = np.zeros(1)  # int_0^{k h}, k = 0..K
        self._neg = np.zeros(1)  # int_0^{-k h}

    def _grow(self, values, sign, kmax):
        h = self.spacing
        k0 = values.size - 1
        ks = np.arange(k0, kmax)
        a = sign * ks * h
        b = sign * (ks + 1) * h
        pieces = gauss_legendre(lambda x: self.f(x), a, b, tol=self.tol / 4)
        return np.concatenate([values, values[-1] + np.cumsum(pieces)])

    def _ensure(self, kpos, kneg):
        if kpos < self._pos.size and kneg < self._neg.size:
            return
        with self._lock:
            if kpos >= self._pos.size:
                self._pos = self._grow(self._pos, 1.0, max(kpos, 2 * self._pos.size))
            if kneg >= self._neg.size:
                self._neg = self._grow(self._neg, -1.0, max(kneg, 2 * self._neg.size))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise NumericalError("antiderivative evaluated at a non-finite point")
        k = np.rint(x / self.spacing).astype(np.int64)
        self._ensure(int(max(k.max(initial=0), 0)), int(max(-k.min(initial=0), 0)))
        pos, neg = self._pos, self._neg
        base = np.where(k >= 0, pos[np.clip(k, 0, None)], neg[np.clip(-k, 0, None)])
        knot = k * self.spacing
        flat = x.ravel()
        rest = gauss_legendre(lambda t: self.f(t), knot.ravel(), flat, tol=self.tol)
        return base + rest.reshape(x.shape)
