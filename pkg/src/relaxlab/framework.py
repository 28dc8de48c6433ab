"""Relaxation-system descriptors, relative-entropy functionals and
numeric validators for the structural hypotheses H1-H9.

A relaxation system

    U_t + F(U)_x = R(U)/eps + G(U),   U in R^N,

relaxes onto the Maxwellian manifold ``U = M(u)``, ``u = P U`` in R^n, and
its eps -> 0 limit is the balance law ``u_t + f(u)_x = g(u)`` with
``f(u) = P F(M(u))`` and ``g(u) = P G(M(u))``.

All callables on a :class:`ModelDescriptor` are vectorized: they accept
arrays of shape ``(..., N)`` (or ``(..., n)`` for the Maxwellian) and keep
the leading batch dimensions.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from . import numerics
from .errors import ContractError

HYPOTHESES = ("H1", "H2", "H3", "H4", "H5", "H6", "H7", "H7star", "H8", "H9")
INEQUALITY_SLACK = 1e-10
RANK_RTOL = 1e-7

# hypotheses whose samples live in the conserved (u) space
_U_SPACE = {"H1", "H2", "H6"}


@dataclass(frozen=True)
class Constants:
    """Structural constants of a relaxation system (``None`` when unknown).

    ``Gamma`` is the upper stress/pressure-slope bound, ``gamma`` the lower
    one; ``mu``/``mu_prime`` bound the entropy Hessian, ``nu`` is the relative
    dissipation rate and ``flux_bound`` bounds ``|DF|``.
    """
    gamma: Optional[float] = None
    Gamma: Optional[float] = None
    E: Optional[float] = None
    mu: Optional[float] = None
    mu_prime: Optional[float] = None
    nu: Optional[float] = None
    flux_bound: Optional[float] = None


@dataclass(frozen=True)
class SampleBox:
    """Axis-aligned box sampled by a scrambled Halton sequence."""
    lo: tuple
    hi: tuple
    count: int = 10_000
    seed: int = 0

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ContractError("SampleBox bounds must be 1-d arrays of equal length")
        if not np.all(lo < hi):
            raise ContractError("SampleBox requires lo < hi componentwise")
        if self.count < 1:
            raise ContractError("SampleBox requires count >= 1")
        object.__setattr__(self, "lo", tuple(lo))
        object.__setattr__(self, "hi", tuple(hi))

    @property
    def dim(self):
        return len(self.lo)

    def sample(self, extra_dims=0):
        """Return ``count`` points; with ``extra_dims`` the Halton sequence has
        that many further unit-interval coordinates appended (used for pairs)."""
        d = self.dim + extra_dims
        engine = qmc.Halton(d=d, scramble=True, seed=self.seed)
        pts = engine.random(self.count)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        out = pts.copy()
        out[:, : self.dim] = lo + (hi - lo) * pts[:, : self.dim]
        return out

    def scaled(self, factor):
        """Box with the same centre and half-widths multiplied by ``factor``."""
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        c, w = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return replace(self, lo=tuple(c - factor * w), hi=tuple(c + factor * w))


@dataclass(frozen=True, eq=False)
class ModelDescriptor:
    """A complete relaxation system.

    ``relaxed`` lists the components driven by the stiff term; for every
    built-in model ``R(U)[relaxed] = M(P U)[relaxed] - U[relaxed]`` and the
    other components of ``R`` vanish, which lets the solver integrate the
    stiff part exactly.  An empty tuple means no such structure is declared.
    """
    name: str
    n: int
    N: int
    flux: Callable
    relaxation: Callable
    source: Callable
    maxwellian: Callable
    projection: np.ndarray
    entropy: Callable
    entropy_flux: Callable
    entropy_grad: Callable
    entropy_hess: Optional[Callable] = None
    constants: Constants = Constants()
    component_names: tuple = ()
    relaxed: tuple = ()
    wave_speed: Optional[Callable] = None
    equilibrium_wave_speed: Optional[Callable] = None
    eq_entropy_grad: Optional[Callable] = None
    eq_entropy_hess: Optional[Callable] = None
    source_free: bool = False
    claimed: tuple = ("H1", "H2", "H3", "H4", "H5", "H6", "H7")
    box: Optional[SampleBox] = None
    eq_box: Optional[SampleBox] = None
    clamp: Optional[dict] = None
    params: object = field(default=None, repr=False)

    def __post_init__(self):
        P = np.array(self.projection, dtype=float)
        P.setflags(write=False)
        object.__setattr__(self, "projection", P)
        if not self.N > self.n >= 1:
            raise ContractError("relaxation requires N > n >= 1")
        if P.shape != (self.n, self.N):
            raise ContractError(f"projection must be {self.n}x{self.N}, got {P.shape}")
        sv = np.linalg.svd(P, compute_uv=False)
        if sv.min() <= RANK_RTOL * sv.max():
            raise ContractError("projection must have full row rank n")
        if not self.component_names:
            object.__setattr__(self, "component_names",
                               tuple(f"U{i}" for i in range(self.N)))
        for hid in self.claimed:
            if hid not in HYPOTHESES:
                raise ContractError(f"unknown hypothesis id {hid!r}")

    def hessian(self, U):
        """Entropy Hessian, by finite differences of the gradient if no closed
        form was supplied."""
        if self.entropy_hess is not None:
            return self.entropy_hess(U)
        return numerics.jacobian(self.entropy_grad, U)

    def speed(self, U):
        """Per-state bound on the spectral radius of DF."""
        if self.wave_speed is not None:
            return self.wave_speed(U)
        J = numerics.jacobian(self.flux, U)
        return np.max(np.abs(np.linalg.eigvals(J)), axis=-1)

    def clamp_states(self, U):
        if not self.clamp:
            return U
        U = np.array(U, dtype=float)
        for i, (lo, hi) in self.clamp.items():
            U[..., i] = np.clip(U[..., i], lo, hi)
        return U


def _check_state(model, U, width):
    U = np.asarray(U, dtype=float)
    if U.shape[-1:] != (width,):
        raise ContractError(
            f"{model.name}: expected states with {width} components, got shape {U.shape}")
    return U


def project(model, U):
    """Conserved part ``P U`` of a relaxation state."""
    U = _check_state(model, U, model.N)
    if not np.all(np.isfinite(U)):
        raise ContractError("project requires finite states")
    return U @ model.projection.T


def equilibrium_flux(model, u):
    """Equilibrium flux ``f(u) = P F(M(u))``."""
    u = _check_state(model, u, model.n)
    return model.flux(model.maxwellian(u)) @ model.projection.T


def equilibrium_source(model, u):
    """Equilibrium source ``g(u) = P G(M(u))``."""
    u = _check_state(model, u, model.n)
    return model.source(model.maxwellian(u)) @ model.projection.T


def equilibrium_entropy(model, u):
    """``eta(u) = H(M(u))``."""
    return model.entropy(model.maxwellian(_check_state(model, u, model.n)))


def equilibrium_entropy_flux(model, u):
    """``q(u) = Q(M(u))``."""
    return model.entropy_flux(model.maxwellian(_check_state(model, u, model.n)))


def equilibrium_entropy_grad(model, u, closed_form=True):
    """``D_u eta(u)``; the chain rule ``DH(M(u)) DM(u)`` unless a closed form
    is available and requested."""
    u = _check_state(model, u, model.n)
    if closed_form and model.eq_entropy_grad is not None:
        return model.eq_entropy_grad(u)
    DM = numerics.jacobian(model.maxwellian, u)
    return np.einsum("...i,...ij->...j", model.entropy_grad(model.maxwellian(u)), DM)


def equilibrium_entropy_hess(model, u):
    u = _check_state(model, u, model.n)
    if model.eq_entropy_hess is not None:
        return model.eq_entropy_hess(u)
    return numerics.jacobian(lambda w: equilibrium_entropy_grad(model, w), u)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def relative_entropy(model, U, u_bar):
    """``H(U) - H(M(u_bar)) - DH(M(u_bar)) (U - M(u_bar))``."""
    U = _check_state(model, U, model.N)
    Mb = model.maxwellian(_check_state(model, u_bar, model.n))
    return model.entropy(U) - model.entropy(Mb) - _dot(model.entropy_grad(Mb), U - Mb)


def relative_entropy_flux(model, U, u_bar):
    """``Q(U) - Q(M(u_bar)) - DH(M(u_bar)) (F(U) - F(M(u_bar)))``."""
    U = _check_state(model, U, model.N)
    Mb = model.maxwellian(_check_state(model, u_bar, model.n))
    return (model.entropy_flux(U) - model.entropy_flux(Mb)
            - _dot(model.entropy_grad(Mb), model.flux(U) - model.flux(Mb)))


def dissipation(model, U):
    """Entropy dissipation ``-DH(U) R(U)``."""
    U = _check_state(model, U, model.N)
    return -_dot(model.entropy_grad(U), model.relaxation(U))


def dissipation_relative(model, U):
    """Dissipation in the manifold-relative form
    ``-[DH(U) - DH(M(PU))] [R(U) - R(M(PU))]``."""
    U = _check_state(model, U, model.N)
    M = model.maxwellian(project(model, U))
    return -_dot(model.entropy_grad(U) - model.entropy_grad(M),
                 model.relaxation(U) - model.relaxation(M))


def source_bracket(model, U, u_bar):
    """``-[DH(U) - DH(M(u_bar))] [G(U) - G(M(u_bar))]``."""
    U = _check_state(model, U, model.N)
    Mb = model.maxwellian(_check_state(model, u_bar, model.n))
    return -_dot(model.entropy_grad(U) - model.entropy_grad(Mb),
                 model.source(U) - model.source(Mb))


def relative_flux_constant(model):
    """Constant ``c2`` in ``|Q^r| <= c2 |U - M(u_bar)|^2``: ``mu' * |DF| * N``."""
    c = model.constants
    if c.mu_prime is None or c.flux_bound is None:
        raise ContractError(f"{model.name}: mu_prime and flux_bound are required")
    return c.mu_prime * c.flux_bound * model.N


@dataclass
class HypothesisReport:
    """Outcome of one sampled hypothesis check.

    ``worst_violation`` is the largest residual over the samples: a norm for
    identity-type hypotheses, ``rhs - lhs`` for inequalities (so negative
    values mean the inequality holds with room to spare), and the estimated
    Lipschitz constant for H9.  The check passed iff
    ``worst_violation <= threshold`` (plus any extra conditions recorded in
    ``details``).
    """
    hypothesis_id: str
    passed: bool
    worst_violation: float
    witness: np.ndarray
    samples_used: int
    threshold: float = 0.0
    details: dict = field(default_factory=dict)


def _worst(values, points):
    # argmax picks the lowest sample index among ties
    k = int(np.argmax(values))
    return float(values[k]), np.array(points[k])


def _box_for(model, hid, box):
    want = model.n if hid in _U_SPACE else model.N
    if box is None:
        box = model.eq_box if hid in _U_SPACE else model.box
        if box is None:
            raise ContractError(f"{model.name}: no default box for {hid}")
    if box.dim != want:
        raise ContractError(
            f"{hid} samples {'u' if want == model.n else 'U'}-space (dim {want}), "
            f"box has dim {box.dim}")
    return box


def validate_hypothesis(model, hid, box=None, tol=1e-6, slack=INEQUALITY_SLACK):
    """Check one structural hypothesis at quasi-random samples.

    Parameters
    ----------
    model : ModelDescriptor
    hid : str
        One of ``H1``..``H9`` or ``H7star``.
    box : SampleBox, optional
        Sampling box in u-space for H1, H2, H6 and in U-space otherwise;
        defaults to the model's own boxes.
    tol : float
        Tolerance for identity-type residuals.
    slack : float
        Allowed violation of inequality-type hypotheses.

    Returns
    -------
    HypothesisReport
    """
    if hid not in HYPOTHESES:
        raise ContractError(f"unknown hypothesis id {hid!r}")
    box = _box_for(model, hid, box)
    return _VALIDATORS[hid](model, box, tol, slack)


def _samples(model, box, extra=0):
    pts = box.sample(extra)
    if box.dim == model.N:
        pts[:, : model.N] = model.clamp_states(pts[:, : model.N])
    return pts


def _h1(model, box, tol, slack):
    u = _samples(model, box)
    M = model.maxwellian(u)
    res = np.maximum(np.max(np.abs(model.relaxation(M)), axis=-1),
                     np.max(np.abs(M @ model.projection.T - u), axis=-1))
    worst, wit = _worst(res, u)
    return HypothesisReport("H1", worst <= tol, worst, wit, len(u), tol)


def _h2(model, box, tol, slack):
    u = _samples(model, box)
    J = numerics.jacobian(model.relaxation, model.maxwellian(u))
    sv = np.linalg.svd(J, compute_uv=False)
    rank = np.sum(sv > RANK_RTOL * sv[..., :1], axis=-1)
    nullity = model.N - rank
    res = np.abs(nullity - model.n).astype(float)
    worst, wit = _worst(res, u)
    details = {"nullity": int(nullity[0]), "rank": int(rank[0]),
               "nullity_min": int(nullity.min()), "nullity_max": int(nullity.max())}
    return HypothesisReport("H2", worst == 0.0, worst, wit, len(u), 0.0, details)


def _h3(model, box, tol, slack):
    U = _samples(model, box)
    u = U @ model.projection.T
    res = np.maximum(np.max(np.abs(model.relaxation(U) @ model.projection.T), axis=-1),
                     np.max(np.abs(model.maxwellian(u) @ model.projection.T - u), axis=-1))
    worst, wit = _worst(res, U)
    return HypothesisReport("H3", worst <= tol, worst, wit, len(U), tol)


def _h4(model, box, tol, slack):
    U = _samples(model, box)
    DF = numerics.jacobian(model.flux, U)
    DQ = numerics.gradient(model.entropy_flux, U)
    lhs = np.einsum("...i,...ij->...j", model.entropy_grad(U), DF)
    res = np.max(np.abs(lhs - DQ), axis=-1)
    eig = np.linalg.eigvalsh(model.hessian(U))
    lo, hi = eig[..., 0], eig[..., -1]
    c = model.constants
    mu = c.mu if c.mu is not None else 0.0
    convex_ok = lo.min() >= mu - slack and lo.min() > 0.0
    if c.mu_prime is not None:
        convex_ok = convex_ok and hi.max() <= c.mu_prime + slack
    worst, wit = _worst(res, U)
    details = {"min_eig": float(lo.min()), "max_eig": float(hi.max()),
               "mu": c.mu, "mu_prime": c.mu_prime}
    return HypothesisReport("H4", bool(worst <= tol and convex_ok), worst, wit,
                            len(U), tol, details)


def _h5(model, box, tol, slack):
    U = _samples(model, box)
    worst, wit = _worst(-dissipation(model, U), U)
    return HypothesisReport("H5", worst <= slack, worst, wit, len(U), slack)


def _h6(model, box, tol, slack):
    u = _samples(model, box)
    deta = equilibrium_entropy_grad(model, u, closed_form=False)
    Df = numerics.jacobian(lambda w: equilibrium_flux(model, w), u)
    Dq = numerics.gradient(lambda w: equilibrium_entropy_flux(model, w), u)
    res = np.max(np.abs(np.einsum("...i,...ij->...j", deta, Df) - Dq), axis=-1)
    worst, wit = _worst(res, u)
    return HypothesisReport("H6", worst <= tol, worst, wit, len(u), tol)


def _relative_dissipation_terms(model, U):
    M = model.maxwellian(U @ model.projection.T)
    lhs = dissipation_relative(model, U)
    dist2 = np.sum((U - M) ** 2, axis=-1)
    return lhs, dist2


def _h7(model, box, tol, slack):
    nu = model.constants.nu
    if nu is None:
        raise ContractError(f"{model.name}: H7 needs constants.nu")
    U = _samples(model, box)
    lhs, dist2 = _relative_dissipation_terms(model, U)
    worst, wit = _worst(nu * dist2 - lhs, U)
    return HypothesisReport("H7", worst <= slack, worst, wit, len(U), slack, {"nu": nu})


def _h7star(model, box, tol, slack):
    U = _samples(model, box)
    lhs, dist2 = _relative_dissipation_terms(model, U)
    off = dist2 > 1e-20
    ratio = lhs[off] / dist2[off]
    nu_r = float(ratio.min()) if ratio.size else np.inf
    worst, wit = _worst(-lhs, U)
    passed = bool(nu_r > 0.0 and worst <= slack)
    return HypothesisReport("H7star", passed, worst, wit, len(U), slack, {"nu_r": nu_r})


def _pairs(model, box):
    pts = _samples(model, box, extra=model.N)
    U = pts[:, : model.N]
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    V = model.clamp_states(lo + (hi - lo) * pts[:, model.N:])
    return U, V


def _h8(model, box, tol, slack):
    U, V = _pairs(model, box)
    ubar = V @ model.projection.T
    worst, wit = _worst(-source_bracket(model, U, ubar), U)
    return HypothesisReport("H8", worst <= slack, worst, wit, len(U), slack)


def _h9(model, box, tol, slack):
    U, V = _pairs(model, box)
    dist = np.linalg.norm(U - V, axis=-1)
    dG = np.linalg.norm(model.source(U) - model.source(V), axis=-1)
    quot = np.where(dist > 1e-12, dG / np.where(dist > 1e-12, dist, 1.0), 0.0)
    L, wit = _worst(quot, U)
    return HypothesisReport("H9", bool(np.isfinite(L)), L, wit, len(U), np.inf,
                            {"lipschitz": L})


_VALIDATORS = {"H1": _h1, "H2": _h2, "H3": _h3, "H4": _h4, "H5": _h5, "H6": _h6,
               "H7": _h7, "H7star": _h7star, "H8": _h8, "H9": _h9}


def validate_model(model, hypotheses=None, count=None, seed=None, tol=1e-6,
                   slack=INEQUALITY_SLACK):
    """Run every claimed hypothesis on the model's default boxes."""
    reports = []
    for hid in hypotheses or model.claimed:
        box = model.eq_box if hid in _U_SPACE else model.box
        if count is not None or seed is not None:
            box = replace(box, count=count or box.count,
                          seed=box.seed if seed is None else seed)
        reports.append(validate_hypothesis(model, hid, box, tol, slack))
    return reports
