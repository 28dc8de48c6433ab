"""Flux relaxation for symmetrizable systems ``u_t + DPhi(u)_x = g(u)``.

Relaxation system, state ``(u, alpha)`` in R^{2n}::

    u_t + (alpha + DE(u))_x = g(u)
    alpha_t = (h(u) - alpha) / eps,     h(u) = DPhi(u) - DE(u) = -DSigma(u)

with ``Sigma = E - Phi`` uniformly convex.  The entropy is
``H = E(u) + alpha . u + J(alpha)`` where ``DJ = j`` and ``j(alpha) = -v`` for
the ``v`` solving ``DSigma(v) = -alpha``.
"""
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .. import numerics
from ..errors import ContractError, ModelConstructionError
from ..framework import Constants, ModelDescriptor, SampleBox


def _logcosh(x):
    return np.logaddexp(x, -x) - np.log(2.0)


def _sech2(x):
    return 1.0 / np.cosh(x) ** 2


def _phi(u):
    return 0.5 * np.sum(u ** 2, axis=-1) + 0.1 * np.sum(_logcosh(2.0 * u), axis=-1)


def _phi_grad(u):
    return u + 0.2 * np.tanh(2.0 * u)


def _phi_hess_diag(u):
    return 1.0 + 0.4 * _sech2(2.0 * u)


def _efun(u):
    return np.sum(u ** 2, axis=-1) + 0.05 * np.sum(_logcosh(u), axis=-1)


def _efun_grad(u):
    return 2.0 * u + 0.05 * np.tanh(u)


def _efun_hess_diag(u):
    return 2.0 + 0.05 * _sech2(u)


def _diag(d):
    return d[..., :, None] * np.eye(d.shape[-1])


def _damping(u):
    return -0.1 * np.tanh(u)


@dataclass(frozen=True)
class SymmetricParams:
    """Potentials, structural constants and source.

    ``Phi_hess`` and ``Efun_hess`` return full ``(..., n, n)`` matrices.
    """
    n: int = 2
    Phi: Callable = _phi
    Phi_grad: Callable = _phi_grad
    Phi_hess: Callable = lambda u: _diag(_phi_hess_diag(u))
    Efun: Callable = _efun
    Efun_grad: Callable = _efun_grad
    Efun_hess: Callable = lambda u: _diag(_efun_hess_diag(u))
    gamma: float = 0.9
    Gamma: float = 1.5
    E: float = 2.0
    delta: float = 0.05
    g: Callable = _damping
    u_range: tuple = (-2.0, 2.0)


class _Symmetric:
    def __init__(self, p):
        self.p = p
        self.n = int(p.n)

    def Sigma(self, u):
        return self.p.Efun(u) - self.p.Phi(u)

    def Sigma_grad(self, u):
        return self.p.Efun_grad(u) - self.p.Phi_grad(u)

    def Sigma_hess(self, u):
        return self.p.Efun_hess(u) - self.p.Phi_hess(u)

    def h(self, u):
        return -self.Sigma_grad(u)

    def j(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        p = self.p
        guess = -alpha / (p.E + 0.5 * (p.delta - p.gamma - p.Gamma))
        v = numerics.solve_gradient_map(self.Sigma_grad, self.Sigma_hess, -alpha, x0=guess)
        return -v

    def j_jacobian(self, alpha):
        """``D j(alpha) = D^2 Sigma(-j(alpha))^{-1}`` (symmetric positive)."""
        return np.linalg.inv(self.Sigma_hess(-self.j(alpha)))

    def J(self, alpha):
        """``int_0^1 j(t alpha) . alpha dt`` along the ray from the origin."""
        alpha = np.asarray(alpha, dtype=float)
        flat = alpha.reshape(-1, self.n)

        def integrand(t, a):
            return np.sum(self.j(t[..., None] * a) * a, axis=-1)

        m = flat.shape[0]
        vals = numerics.gauss_legendre(integrand, np.zeros(m), np.ones(m), args=(flat,))
        return vals.reshape(alpha.shape[:-1])

    def J_axis(self, alpha):
        """Same potential integrated along axis-parallel segments."""
        alpha = np.asarray(alpha, dtype=float)
        flat = alpha.reshape(-1, self.n)
        m = flat.shape[0]
        total = np.zeros(m)
        corner = np.zeros_like(flat)
        for k in range(self.n):
            def integrand(t, c, a, k=k):
                pt = np.broadcast_to(c, t.shape + (self.n,)).copy()
                pt[..., k] = t * a[..., k]
                return self.j(pt)[..., k] * a[..., k]
            total += numerics.gauss_legendre(integrand, np.zeros(m), np.ones(m),
                                             args=(corner.copy(), flat))
            corner[:, k] = flat[:, k]
        return total.reshape(alpha.shape[:-1])

    def split(self, U):
        return U[..., : self.n], U[..., self.n:]

    # --- relaxation system -------------------------------------------------
    def flux(self, U):
        u, a = self.split(U)
        return np.concatenate([a + self.p.Efun_grad(u), np.zeros_like(a)], axis=-1)

    def relaxation(self, U):
        u, a = self.split(U)
        return np.concatenate([np.zeros_like(u), self.h(u) - a], axis=-1)

    def source(self, U):
        u, a = self.split(U)
        return np.concatenate([self.p.g(u) + 0.0 * u, np.zeros_like(a)], axis=-1)

    def maxwellian(self, u):
        return np.concatenate([u, self.h(u)], axis=-1)

    def entropy(self, U):
        u, a = self.split(U)
        return self.p.Efun(u) + np.sum(a * u, axis=-1) + self.J(a)

    def entropy_flux(self, U):
        u, a = self.split(U)
        return 0.5 * np.sum((a + self.p.Efun_grad(u)) ** 2, axis=-1)

    def entropy_grad(self, U):
        u, a = self.split(U)
        return np.concatenate([self.p.Efun_grad(u) + a, u + self.j(a)], axis=-1)

    def entropy_hess(self, U):
        u, a = self.split(U)
        n = self.n
        H = np.zeros(U.shape + (2 * n,))
        eye = np.eye(n)
        H[..., :n, :n] = self.p.Efun_hess(u)
        H[..., :n, n:] = eye
        H[..., n:, :n] = eye
        H[..., n:, n:] = self.j_jacobian(a)
        return H

    def wave_speed(self, U):
        # DF = [[D^2 E, I], [0, 0]] is block triangular
        u, _ = self.split(U)
        return np.linalg.eigvalsh(self.p.Efun_hess(u))[..., -1]

    # --- equilibrium -------------------------------------------------------
    def eq_entropy_grad(self, u):
        return self.p.Phi_grad(u)

    def eq_entropy_hess(self, u):
        return self.p.Phi_hess(u)

    def eq_wave_speed(self, u):
        return np.abs(np.linalg.eigvalsh(self.p.Phi_hess(u))).max(axis=-1)


def hessian_bounds(gamma, Gamma, E, delta):
    """``(mu, mu_prime)`` for ``H(u, alpha) = E(u) + alpha . u + J(alpha)``.

    The lower bound comes from completing the square in the quadratic form of
    ``[[D^2 E, I], [I, D^2 J]]``; the upper one from the block norms.
    """
    mu = 0.5 * (gamma - delta) * min(
        1.0, 1.0 / ((E + 0.5 * (delta - gamma)) * (E + delta - gamma)))
    mu_prime = max(E + delta + 1.0, 1.0 / (E - Gamma) + 1.0)
    return mu, mu_prime


def _check(p, impl):
    if not p.E > p.Gamma > p.gamma > p.delta > 0.0:
        raise ModelConstructionError("E > Gamma > gamma > delta > 0",
                                     value=(p.E, p.Gamma, p.gamma, p.delta))
    n = p.n
    box = SampleBox((p.u_range[0],) * n, (p.u_range[1],) * n, count=2000, seed=7)
    u = box.sample()
    ep = np.linalg.eigvalsh(p.Phi_hess(u))
    ee = np.linalg.eigvalsh(p.Efun_hess(u))
    checks = [
        ("gamma < D^2 Phi", ep[:, 0] - p.gamma, True),
        ("D^2 Phi < Gamma", p.Gamma - ep[:, -1], True),
        ("E <= D^2 E", ee[:, 0] - p.E, False),
        ("D^2 E <= E + delta", p.E + p.delta - ee[:, -1], False),
    ]
    for name, margin, strict in checks:
        k = int(np.argmin(margin))
        bad = margin[k] <= 0.0 if strict else margin[k] < -1e-12
        if bad:
            raise ModelConstructionError(name, witness=u[k], value=float(margin[k]))
    g0 = np.asarray(p.g(np.zeros(n)), dtype=float)
    if g0.shape != (n,):
        raise ContractError(f"source g must map R^{n} to R^{n}")


def build_symmetric(params=None, **overrides):
    """Build the flux-relaxation model for a symmetrizable system."""
    p = params or SymmetricParams()
    if overrides:
        p = replace(p, **overrides)
    if p.n < 1:
        raise ContractError("n >= 1 required")
    impl = _Symmetric(p)
    _check(p, impl)
    mu, mu_prime = hessian_bounds(p.gamma, p.Gamma, p.E, p.delta)
    consts = Constants(gamma=p.gamma, Gamma=p.Gamma, E=p.E, mu=mu, mu_prime=mu_prime,
                       nu=1.0 / (p.E + p.delta - p.gamma),
                       flux_bound=float(np.hypot(p.E + p.delta, 1.0)))
    n = p.n
    u0, u1 = p.u_range
    a_half = max(abs(u0), abs(u1)) * (p.E + p.delta - p.gamma)
    box = SampleBox((u0,) * n + (-a_half,) * n, (u1,) * n + (a_half,) * n)
    eq_box = SampleBox((u0,) * n, (u1,) * n)
    names = tuple(f"u{i}" for i in range(n)) + tuple(f"alpha{i}" for i in range(n))
    return ModelDescriptor(
        name="symmetric", n=n, N=2 * n,
        flux=impl.flux, relaxation=impl.relaxation, source=impl.source,
        maxwellian=impl.maxwellian,
        projection=np.hstack([np.eye(n), np.zeros((n, n))]),
        entropy=impl.entropy, entropy_flux=impl.entropy_flux,
        entropy_grad=impl.entropy_grad, entropy_hess=impl.entropy_hess,
        constants=consts, component_names=names, relaxed=tuple(range(n, 2 * n)),
        wave_speed=impl.wave_speed, equilibrium_wave_speed=impl.eq_wave_speed,
        eq_entropy_grad=impl.eq_entropy_grad, eq_entropy_hess=impl.eq_entropy_hess,
        claimed=("H1", "H2", "H3", "H4", "H5", "H6", "H7", "H9"),
        box=box, eq_box=eq_box, params=impl,
    )


def symmetric_j(model_or_params, alpha):
    """``j(alpha) = -v`` where ``DSigma(v) = -alpha``."""
    return _impl(model_or_params).j(alpha)


def symmetric_J(model_or_params, alpha, path="radial"):
    """Potential ``J`` with ``DJ = j`` and ``J(0) = 0``.

    ``path`` selects the integration path: ``"radial"`` (the ray from 0) or
    ``"axis"`` (axis-parallel segments), which must agree since ``Dj`` is
    symmetric.
    """
    impl = _impl(model_or_params)
    if path == "radial":
        return impl.J(alpha)
    if path == "axis":
        return impl.J_axis(alpha)
    raise ContractError(f"unknown path {path!r}")


def _impl(obj):
    if isinstance(obj, ModelDescriptor):
        return obj.params
    if isinstance(obj, SymmetricParams):
        return _Symmetric(obj)
    if isinstance(obj, _Symmetric):
        return obj
    raise ContractError("expected a symmetric model or SymmetricParams")
