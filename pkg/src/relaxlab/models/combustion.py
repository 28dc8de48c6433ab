"""Pressure relaxation for isentropic combustion.

Equilibrium system, state ``(v, u, Z)`` (specific volume, velocity, mass
fraction of reactant)::

    v_t - u_x = 0,   u_t + P(v, Z)_x = 0,   Z_t = -K phi(Theta(v, Z)) Z

Relaxation system, state ``(v, u, Z, alpha)``::

    v_t - u_x = 0,   u_t - (alpha + E v)_x = 0,   Z_t = -K phi(Theta) Z
    alpha_t = (h(v, Z) - alpha) / eps,     h(v, Z) = -P(v, Z) - E v

with entropy ``H = u^2/2 - int_{h(0,Z)}^alpha j(xi, Z) dxi + alpha v
+ E v^2/2 + B(Z)`` where ``j(., Z)`` inverts ``h(., Z)``.
"""
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import erf

from .. import numerics
from ..errors import ContractError, ModelConstructionError
from ..framework import Constants, ModelDescriptor, SampleBox

_SQRT_PI_2 = 0.5 * np.sqrt(np.pi)
A_DEFAULT = 1.0
C_DEFAULT = 0.2
PHI_WIDTH = 0.05


def _P(v, Z):
    return -A_DEFAULT * v + C_DEFAULT * Z * np.exp(-v ** 2)


def _P_v(v, Z):
    return -A_DEFAULT - 2.0 * C_DEFAULT * Z * v * np.exp(-v ** 2)


def _P_Z(v, Z):
    return C_DEFAULT * np.exp(-v ** 2) + 0.0 * Z


def _P_int(v, Z):
    return -0.5 * A_DEFAULT * v ** 2 + C_DEFAULT * Z * _SQRT_PI_2 * erf(v)


def _P_Z_int(v, Z):
    return C_DEFAULT * _SQRT_PI_2 * erf(v) + 0.0 * Z


def _P_ZZ_int(v, Z):
    return np.zeros(np.broadcast(v, Z).shape)


def _Theta(v, Z):
    return 1.0 + 0.5 * np.tanh(v) + 0.3 * Z


def _phi(theta):
    # smoothed max(0, theta - 1)
    return PHI_WIDTH * np.logaddexp(0.0, (theta - 1.0) / PHI_WIDTH)


@dataclass(frozen=True)
class CombustionParams:
    """Constitutive laws and constants.

    ``P_Z_int(v, Z) = int_0^v P_Z`` and ``P_ZZ_int(v, Z) = int_0^v P_ZZ`` are
    optional closed forms (quadrature otherwise); ``P_int`` is only used by
    the entropy-consistency checks.  ``B`` defaults to ``(m + 1) Z^2 / 2``
    with ``m`` computed from the other constants.
    """
    P: Callable = _P
    P_v: Callable = _P_v
    P_Z: Callable = _P_Z
    P_int: Optional[Callable] = _P_int
    P_Z_int: Optional[Callable] = _P_Z_int
    P_ZZ_int: Optional[Callable] = _P_ZZ_int
    Theta: Callable = _Theta
    phi: Callable = _phi
    K: float = 1.0
    gamma: float = 0.5
    Gamma: float = 1.5
    E: float = 2.0
    Cbar: float = 1.0
    B: Optional[Callable] = None
    B_prime: Optional[Callable] = None
    B_second: Optional[Callable] = None
    v_range: tuple = (-2.0, 2.0)
    u_range: tuple = (-2.0, 2.0)


def convexity_constants(gamma, Gamma, E, Cbar):
    """Return ``(E_hat, m_hat, m, Lambda)`` of the combustion entropy.

    ``m`` is the lower bound required of ``B''`` and ``Lambda`` bounds the
    ``(alpha, Z)`` Hessian block ``D^2 psi`` from both sides.
    """
    E_hat = E - 0.5 * gamma
    m_hat = ((Cbar ** 2 / (E - Gamma)) ** 2 + 1.0) * 2.0 * (E - gamma) * E_hat / gamma
    m = m_hat + Cbar * (1.0 + Cbar / (E - Gamma))
    Lam = 2.0 * m + (Gamma - 0.5 * gamma) / ((E - Gamma) * E_hat) + Cbar ** 2 / (E - Gamma)
    return E_hat, m_hat, m, Lam


class _Combustion:
    def __init__(self, p):
        self.E = float(p.E)
        self.E_hat, self.m_hat, self.m, self.Lam = convexity_constants(
            p.gamma, p.Gamma, p.E, p.Cbar)
        if p.B is None:
            b = self.m + 1.0
            p = replace(p, B=lambda Z: 0.5 * b * Z ** 2, B_prime=lambda Z: b * Z,
                        B_second=lambda Z: b + 0.0 * Z)
        self.p = p

    def h(self, v, Z):
        return -self.p.P(v, Z) - self.E * v

    def h_v(self, v, Z):
        return -self.p.P_v(v, Z) - self.E

    def j(self, alpha, Z):
        alpha, Z = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(Z, float))
        p = self.p
        guess = -(alpha + p.P(0.0, Z)) / (self.E - 0.5 * (p.gamma + p.Gamma))
        return numerics.solve_monotone(lambda v: self.h(v, Z), lambda v: self.h_v(v, Z),
                                       alpha, x0=guess, slope_min=self.E - p.Gamma)

    def _int0(self, closed, integrand, x, Z):
        if closed is not None:
            return closed(x, Z)
        x, Z = np.broadcast_arrays(x, Z)
        return numerics.gauss_legendre(integrand, np.zeros(x.size), x.ravel(),
                                       args=(Z.ravel(),)).reshape(x.shape)

    def int_j(self, alpha, Z):
        """``int_{h(0,Z)}^alpha j(xi, Z) dxi`` via ``xi = h(tau, Z)``."""
        w = self.j(alpha, Z)
        w, Z = np.broadcast_arrays(w, np.asarray(Z, float))
        vals = numerics.gauss_legendre(lambda t, z: t * self.h_v(t, z),
                                       np.zeros(w.size), w.ravel(), args=(Z.ravel(),))
        return vals.reshape(w.shape)

    def P_Z_int(self, x, Z):
        return self._int0(self.p.P_Z_int, self.p.P_Z, x, Z)

    def P_ZZ_int(self, x, Z):
        if self.p.P_ZZ_int is not None:
            return self.p.P_ZZ_int(x, Z)
        return self._int0(None, lambda t, z: numerics.gradient(
            lambda q: self.p.P_Z(t, q[..., 0]), z[..., None])[..., 0], x, Z)

    def P_int(self, x, Z):
        return self._int0(self.p.P_int, self.p.P, x, Z)

    def reaction(self, v, Z):
        p = self.p
        return -p.K * p.phi(p.Theta(v, Z)) * Z

    # --- relaxation system -------------------------------------------------
    def flux(self, U):
        v, u, a = U[..., 0], U[..., 1], U[..., 3]
        z = np.zeros_like(v)
        return np.stack([-u, -(a + self.E * v), z, z], axis=-1)

    def relaxation(self, U):
        v, Z, a = U[..., 0], U[..., 2], U[..., 3]
        z = np.zeros_like(v)
        return np.stack([z, z, z, self.h(v, Z) - a], axis=-1)

    def source(self, U):
        v, Z = U[..., 0], U[..., 2]
        z = np.zeros_like(v)
        return np.stack([z, z, self.reaction(v, Z), z], axis=-1)

    def maxwellian(self, w):
        v, u, Z = w[..., 0], w[..., 1], w[..., 2]
        return np.stack([v, u, Z, self.h(v, Z)], axis=-1)

    def entropy(self, U):
        v, u, Z, a = U[..., 0], U[..., 1], U[..., 2], U[..., 3]
        return (0.5 * u ** 2 - self.int_j(a, Z) + a * v + 0.5 * self.E * v ** 2
                + self.p.B(Z))

    def entropy_flux(self, U):
        v, u, a = U[..., 0], U[..., 1], U[..., 3]
        return -(a + self.E * v) * u

    def entropy_grad(self, U):
        v, u, Z, a = U[..., 0], U[..., 1], U[..., 2], U[..., 3]
        w = self.j(a, Z)
        dZ = -self.P_Z_int(w, Z) + self.p.B_prime(Z)
        return np.stack([a + self.E * v, u, dZ, v - w], axis=-1)

    def entropy_hess(self, U):
        Z, a = U[..., 2], U[..., 3]
        w = self.j(a, Z)
        denom = self.E + self.p.P_v(w, Z)  # = -h_v > 0
        PZ = self.p.P_Z(w, Z)
        H = np.zeros(U.shape + (4,))
        H[..., 0, 0] = self.E
        H[..., 0, 3] = H[..., 3, 0] = 1.0
        H[..., 1, 1] = 1.0
        H[..., 3, 3] = 1.0 / denom
        H[..., 2, 3] = H[..., 3, 2] = PZ / denom
        H[..., 2, 2] = self.p.B_second(Z) + PZ ** 2 / denom - self.P_ZZ_int(w, Z)
        return H

    def wave_speed(self, U):
        return np.full(U.shape[:-1], np.sqrt(self.E))

    # --- equilibrium -------------------------------------------------------
    def eq_entropy_grad(self, w):
        v, u, Z = w[..., 0], w[..., 1], w[..., 2]
        return np.stack([-self.p.P(v, Z), u,
                         -self.P_Z_int(v, Z) + self.p.B_prime(Z)], axis=-1)

    def eq_wave_speed(self, w):
        return np.sqrt(np.maximum(-self.p.P_v(w[..., 0], w[..., 2]), 0.0))


def hessian_bounds(gamma, Gamma, E, Cbar):
    """``(mu, mu_prime)`` from ``H = u^2/2 + gamma v^2/4 + psi(alpha, Z)
    + (alpha + E_hat v)^2 / (2 E_hat)`` and ``Lambda^-1 <= D^2 psi <= Lambda``."""
    E_hat, _, _, Lam = convexity_constants(gamma, Gamma, E, Cbar)
    mu = min(1.0, 0.5 * gamma, 1.0 / Lam)
    mu_prime = max(1.0, 0.5 * gamma + 2.0 * E_hat, Lam + 2.0 / E_hat)
    return mu, mu_prime


def _check(c):
    p = c.p
    if not p.E > p.Gamma > p.gamma > 0.0:
        raise ModelConstructionError("E > Gamma > gamma > 0", value=(p.E, p.Gamma, p.gamma))
    # the determinant bound behind 1/Lambda uses Cbar^4 >= Cbar^2
    if not p.Cbar >= 1.0:
        raise ModelConstructionError("Cbar >= 1", value=p.Cbar)
    reach = max(map(abs, p.v_range)) * (p.E - p.gamma) / (p.E - p.Gamma) + 1.0
    v, Z = np.meshgrid(np.linspace(-reach, reach, 801), np.linspace(0.0, 1.0, 41))
    Pv = -p.P_v(v, Z)
    k = np.unravel_index(np.argmin(Pv), Pv.shape)
    if Pv[k] <= p.gamma:
        raise ModelConstructionError("gamma < -P_v(v, Z)", (float(v[k]), float(Z[k])),
                                     float(Pv[k]))
    k = np.unravel_index(np.argmax(Pv), Pv.shape)
    if Pv[k] >= p.Gamma:
        raise ModelConstructionError("-P_v(v, Z) < Gamma", (float(v[k]), float(Z[k])),
                                     float(Pv[k]))
    PZ = np.abs(p.P_Z(v, Z))
    k = np.unravel_index(np.argmax(PZ), PZ.shape)
    if PZ[k] >= p.Cbar:
        raise ModelConstructionError("|P_Z(v, Z)| < Cbar", (float(v[k]), float(Z[k])),
                                     float(PZ[k]))
    PZZ = np.abs(c.P_ZZ_int(v, Z))
    k = np.unravel_index(np.argmax(PZZ), PZZ.shape)
    if PZZ[k] >= p.Cbar:
        raise ModelConstructionError("|int_0^v P_ZZ| < Cbar", (float(v[k]), float(Z[k])),
                                     float(PZZ[k]))
    Zs = np.linspace(0.0, 1.0, 101)
    B2 = p.B_second(Zs)
    k = int(np.argmin(B2))
    if B2[k] <= c.m:
        raise ModelConstructionError(f"B''(Z) > m = {c.m:.6g}", float(Zs[k]), float(B2[k]))
    if p.K < 0:
        raise ModelConstructionError("K >= 0", value=p.K)


def build_combustion(params=None, **overrides):
    """Build the pressure-relaxation model for isentropic combustion."""
    p = params or CombustionParams()
    if overrides:
        p = replace(p, **overrides)
    if p.B is not None and (p.B_prime is None or p.B_second is None):
        raise ContractError("a custom B needs B_prime and B_second")
    c = _Combustion(p)
    _check(c)
    mu, mu_prime = hessian_bounds(p.gamma, p.Gamma, p.E, p.Cbar)
    consts = Constants(gamma=p.gamma, Gamma=p.Gamma, E=p.E, mu=mu, mu_prime=mu_prime,
                       nu=1.0 / (p.E - p.gamma), flux_bound=float(np.hypot(p.E, 1.0)))
    (v0, v1), (u0, u1) = p.v_range, p.u_range
    a_half = max(abs(v0), abs(v1)) * (p.E - p.gamma) + p.Cbar
    box = SampleBox((v0, u0, 0.0, -a_half), (v1, u1, 1.0, a_half))
    eq_box = SampleBox((v0, u0, 0.0), (v1, u1, 1.0))
    return ModelDescriptor(
        name="combustion", n=3, N=4,
        flux=c.flux, relaxation=c.relaxation, source=c.source,
        maxwellian=c.maxwellian,
        projection=[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]],
        entropy=c.entropy, entropy_flux=c.entropy_flux,
        entropy_grad=c.entropy_grad, entropy_hess=c.entropy_hess,
        constants=consts, component_names=("v", "u", "Z", "alpha"), relaxed=(3,),
        wave_speed=c.wave_speed, equilibrium_wave_speed=c.eq_wave_speed,
        eq_entropy_grad=c.eq_entropy_grad, source_free=p.K == 0.0,
        claimed=("H1", "H2", "H3", "H4", "H5", "H6", "H7", "H9"),
        box=box, eq_box=eq_box, clamp={2: (0.0, 1.0)}, params=c,
    )


def combustion_j(model_or_params, alpha, Z):
    """Inverse of ``h(., Z)``: the ``v`` with ``h(v, Z) = alpha``."""
    Z = np.asarray(Z, dtype=float)
    if np.any((Z < 0.0) | (Z > 1.0)):
        raise ContractError("combustion_j requires Z in [0, 1]")
    return _impl(model_or_params).j(alpha, Z)


def _impl(obj):
    if isinstance(obj, ModelDescriptor):
        return obj.params
    if isinstance(obj, CombustionParams):
        return _Combustion(obj)
    if isinstance(obj, _Combustion):
        return obj
    raise ContractError("expected a combustion model or CombustionParams")
