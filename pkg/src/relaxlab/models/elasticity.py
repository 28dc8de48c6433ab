"""Stress relaxation for the isothermal elasticity (p-) system.

Equilibrium system, state ``(u, v)`` (strain, velocity)::

    u_t - v_x = 0,   v_t - sigma(u)_x = g2

Relaxation system, state ``(u, v, alpha)``::

    u_t - v_x = 0
    v_t - (alpha + E u)_x = g2
    alpha_t = (h(u) - alpha) / eps,     h(u) = sigma(u) - E u

with entropy ``H = v^2/2 + E u^2/2 + alpha u - int_0^alpha h^{-1}``.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .. import numerics
from ..errors import ContractError, ModelConstructionError
from ..framework import Constants, ModelDescriptor, SampleBox


def _default_sigma(u):
    return u + 0.5 * np.sin(u)


def _default_sigma_prime(u):
    return 1.0 + 0.5 * np.cos(u)


def _default_Sigma(u):
    return 0.5 * u ** 2 + 0.5 * (1.0 - np.cos(u))


def _damping(v):
    return -v


@dataclass(frozen=True)
class ElasticityParams:
    """Stress law, structural constants and source.

    ``source_kind`` is ``"weakly_dissipative"`` (``g2`` takes ``v``),
    ``"lipschitz"`` (``g2`` takes ``(u, v)``) or ``"none"``.
    ``Sigma`` is an optional closed-form stored energy, used only by checks.
    """
    sigma: Callable = _default_sigma
    sigma_prime: Callable = _default_sigma_prime
    gamma: float = 0.5
    Gamma: float = 1.5
    E: float = 2.0
    source_kind: str = "weakly_dissipative"
    g2: Optional[Callable] = _damping
    Sigma: Optional[Callable] = _default_Sigma
    u_range: tuple = (-2.0, 2.0)
    v_range: tuple = (-2.0, 2.0)


class _Elasticity:
    def __init__(self, p):
        self.p = p
        self.E = float(p.E)
        E = self.E
        # int_0^w tau h'(tau) dtau == int_0^{h(w)} h^{-1}(xi) dxi
        self._moment = numerics.CachedAntiderivative(
            lambda t: t * (p.sigma_prime(t) - E), spacing=0.125)

    def h(self, u):
        return self.p.sigma(u) - self.E * u

    def h_prime(self, u):
        return self.p.sigma_prime(u) - self.E

    def h_inverse(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        p = self.p
        guess = -alpha / (self.E - 0.5 * (p.gamma + p.Gamma))
        return numerics.solve_monotone(self.h, self.h_prime, alpha, x0=guess,
                                       slope_min=self.E - p.Gamma)

    def int_h_inverse(self, alpha):
        """``int_0^alpha h^{-1}(xi) dxi`` via the substitution ``xi = h(tau)``."""
        return self._moment(self.h_inverse(alpha))

    def g2(self, U):
        p = self.p
        if p.source_kind == "none":
            return np.zeros(U.shape[:-1])
        if p.source_kind == "weakly_dissipative":
            return p.g2(U[..., 1])
        return p.g2(U[..., 0], U[..., 1])

    # --- relaxation system -------------------------------------------------
    def flux(self, U):
        u, v, a = U[..., 0], U[..., 1], U[..., 2]
        return np.stack([-v, -(a + self.E * u), np.zeros_like(u)], axis=-1)

    def relaxation(self, U):
        u, a = U[..., 0], U[..., 2]
        z = np.zeros_like(u)
        return np.stack([z, z, self.h(u) - a], axis=-1)

    def source(self, U):
        z = np.zeros(U.shape[:-1])
        return np.stack([z, self.g2(U) + z, z], axis=-1)

    def maxwellian(self, w):
        u, v = w[..., 0], w[..., 1]
        return np.stack([u, v, self.h(u)], axis=-1)

    def entropy(self, U):
        u, v, a = U[..., 0], U[..., 1], U[..., 2]
        return 0.5 * v ** 2 + 0.5 * self.E * u ** 2 + a * u - self.int_h_inverse(a)

    def entropy_flux(self, U):
        u, v, a = U[..., 0], U[..., 1], U[..., 2]
        return -(a + self.E * u) * v

    def entropy_grad(self, U):
        u, v, a = U[..., 0], U[..., 1], U[..., 2]
        return np.stack([self.E * u + a, v, u - self.h_inverse(a)], axis=-1)

    def entropy_hess(self, U):
        a = U[..., 2]
        caa = 1.0 / (self.E - self.p.sigma_prime(self.h_inverse(a)))
        H = np.zeros(U.shape + (3,))
        H[..., 0, 0] = self.E
        H[..., 0, 2] = H[..., 2, 0] = 1.0
        H[..., 1, 1] = 1.0
        H[..., 2, 2] = caa
        return H

    def wave_speed(self, U):
        return np.full(U.shape[:-1], np.sqrt(self.E))

    # --- equilibrium -------------------------------------------------------
    def eq_entropy_grad(self, w):
        return np.stack([self.p.sigma(w[..., 0]), w[..., 1]], axis=-1)

    def eq_entropy_hess(self, w):
        H = np.zeros(w.shape + (2,))
        H[..., 0, 0] = self.p.sigma_prime(w[..., 0])
        H[..., 1, 1] = 1.0
        return H

    def eq_wave_speed(self, w):
        return np.sqrt(np.maximum(self.p.sigma_prime(w[..., 0]), 0.0))


def hessian_bounds(gamma, Gamma, E):
    """Entropy Hessian bounds ``(mu, mu_prime)``.

    The lower bound follows from splitting ``H`` into
    ``v^2/2 + gamma u^2/4 + psi(alpha) + (alpha + E_hat u)^2 / (2 E_hat)`` with
    ``psi'' >= gamma / (2 (E - gamma) E_hat)``, ``E_hat = E - gamma/2``.  The
    upper bound is the largest eigenvalue of ``[[E, 1], [1, 1/(E - Gamma)]]``.
    """
    E_hat = E - 0.5 * gamma
    psi2 = gamma / (2.0 * (E - gamma) * E_hat)
    mu = min(1.0, 0.5 * gamma, psi2)
    c = 1.0 / (E - Gamma)
    lam = 0.5 * (E + c) + np.sqrt(0.25 * (E - c) ** 2 + 1.0)
    return mu, max(1.0, float(lam))


def _check(p):
    if not p.E > p.Gamma:
        raise ModelConstructionError("E > Gamma", value=(p.E, p.Gamma))
    if not 0.0 < p.gamma < p.Gamma:
        raise ModelConstructionError("0 < gamma < Gamma", value=(p.gamma, p.Gamma))
    if p.source_kind not in ("weakly_dissipative", "lipschitz", "none"):
        raise ContractError(f"unknown source_kind {p.source_kind!r}")
    if p.source_kind != "none" and p.g2 is None:
        raise ContractError("a source g2 is required unless source_kind='none'")
    s0 = float(p.sigma(np.array(0.0)))
    if abs(s0) > 1e-14:
        raise ModelConstructionError("sigma(0) = 0", witness=0.0, value=s0)
    # alpha range of the box maps back to strains up to |alpha|/(E - Gamma)
    reach = max(map(abs, p.u_range)) * (p.E - p.gamma) / (p.E - p.Gamma) + 1.0
    u = np.linspace(-reach, reach, 4001)
    sp = p.sigma_prime(u)
    k = int(np.argmin(sp))
    if sp[k] < p.gamma:
        raise ModelConstructionError("gamma <= sigma'(u)", witness=float(u[k]),
                                     value=float(sp[k]))
    k = int(np.argmax(sp))
    if sp[k] > p.Gamma:
        raise ModelConstructionError("sigma'(u) <= Gamma", witness=float(u[k]),
                                     value=float(sp[k]))


def build_elasticity(params=None, **overrides):
    """Build the stress-relaxation model for the elasticity system.

    Keyword overrides replace fields of ``params`` (default parameters if
    omitted).  Structural inequalities are checked on a strain grid and a
    :class:`~relaxlab.errors.ModelConstructionError` names the first one
    that fails.
    """
    p = params or ElasticityParams()
    if overrides:
        from dataclasses import replace
        p = replace(p, **overrides)
    _check(p)
    m = _Elasticity(p)
    mu, mu_prime = hessian_bounds(p.gamma, p.Gamma, p.E)
    consts = Constants(gamma=p.gamma, Gamma=p.Gamma, E=p.E, mu=mu,
                       mu_prime=mu_prime, nu=1.0 / p.E,
                       flux_bound=float(np.hypot(p.E, 1.0)))
    claimed = ("H1", "H2", "H3", "H4", "H5", "H6", "H7")
    if p.source_kind == "weakly_dissipative":
        claimed += ("H8", "H9")
    else:
        claimed += ("H9",)
    (u0, u1), (v0, v1) = p.u_range, p.v_range
    a_half = max(abs(u0), abs(u1)) * (p.E - p.gamma)
    box = SampleBox((u0, v0, -a_half), (u1, v1, a_half))
    eq_box = SampleBox((u0, v0), (u1, v1))
    return ModelDescriptor(
        name="elasticity", n=2, N=3,
        flux=m.flux, relaxation=m.relaxation, source=m.source,
        maxwellian=m.maxwellian, projection=[[1, 0, 0], [0, 1, 0]],
        entropy=m.entropy, entropy_flux=m.entropy_flux,
        entropy_grad=m.entropy_grad, entropy_hess=m.entropy_hess,
        constants=consts, component_names=("u", "v", "alpha"), relaxed=(2,),
        wave_speed=m.wave_speed, equilibrium_wave_speed=m.eq_wave_speed,
        eq_entropy_grad=m.eq_entropy_grad, eq_entropy_hess=m.eq_entropy_hess,
        source_free=p.source_kind == "none", claimed=claimed,
        box=box, eq_box=eq_box, params=m,
    )


def elasticity_h_inverse(model_or_params, alpha):
    """Inverse of ``h(u) = sigma(u) - E u``; accepts a built model or params."""
    return _impl(model_or_params).h_inverse(alpha)


def _impl(obj):
    if isinstance(obj, ModelDescriptor):
        return obj.params
    if isinstance(obj, ElasticityParams):
        return _Elasticity(obj)
    if isinstance(obj, _Elasticity):
        return obj
    raise ContractError("expected an elasticity model or ElasticityParams")
