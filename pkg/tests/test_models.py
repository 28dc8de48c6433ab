import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize

from relaxlab import numerics
from relaxlab.errors import ContractError, ModelConstructionError
from relaxlab.framework import equilibrium_entropy, equilibrium_entropy_flux
from relaxlab.models import (CombustionParams, ElasticityParams, SymmetricParams,
                             build_combustion, build_elasticity, build_model, build_symmetric,
                             combustion_j, elasticity_h_inverse, symmetric_J, symmetric_j)
from relaxlab.models import combustion as comb
from relaxlab.models import elasticity as elas
from relaxlab.models import symmetric as sym


def sigma(u):
    return u + 0.5 * np.sin(u)


# --- elasticity -----------------------------------------------------------

def test_elasticity_shapes_and_maxwellian(elasticity):
    assert (elasticity.n, elasticity.N) == (2, 3)
    M = elasticity.maxwellian(np.array([1.0, 0.0]))
    np.testing.assert_allclose(M, [1.0, 0.0, sigma(1.0) - 2.0], atol=1e-15)
    assert abs(M[2] - (-0.5792645075960517)) < 1e-12


def test_elasticity_constants(elasticity):
    c = elasticity.constants
    E_hat = 2.0 - 0.25
    assert c.mu == pytest.approx(min(1.0, 0.25, 0.5 / (2 * 1.5 * E_hat)))
    assert c.mu_prime == pytest.approx(3.0)
    assert c.nu == 0.5
    assert c.flux_bound == pytest.approx(np.sqrt(5.0))


def test_h_inverse_examples(elasticity):
    h = lambda u: sigma(u) - 2.0 * u  # noqa: E731
    assert elasticity_h_inverse(elasticity, 0.0) == 0.0
    assert abs(elasticity_h_inverse(elasticity, h(0.7)) - 0.7) <= 1e-10
    ref = optimize.brentq(lambda u: h(u) + 1.0, 0.0, 2.0, xtol=1e-15)
    assert abs(elasticity_h_inverse(ElasticityParams(), -1.0) - ref) <= 1e-12


@given(st.floats(-30, 30))
def test_h_inverse_residual_and_round_trip(alpha):
    impl = build_elasticity().params
    u = impl.h_inverse(np.array(alpha))
    assert abs(impl.h(u) - alpha) <= 1e-12 * max(1.0, abs(alpha))
    assert abs(impl.h_inverse(impl.h(u)) - u) <= 1e-10 * max(1.0, abs(u))


def test_h_inverse_decreasing(elasticity):
    a = np.linspace(-8, 8, 401)
    assert np.all(np.diff(elasticity_h_inverse(elasticity, a)) < 0)


def test_elasticity_entropy_quadrature_against_quad(elasticity):
    impl = elasticity.params
    for a in (-2.5, -0.3, 0.0, 0.9, 3.0):
        ref = integrate.quad(lambda x: float(impl.h_inverse(np.array(x))), 0.0, a,
                             epsabs=1e-13)[0]
        assert abs(impl.int_h_inverse(np.array(a)) - ref) <= 1e-10


def test_elasticity_entropy_restriction(elasticity):
    u = elasticity.eq_box.sample()[:1000]
    Sigma = 0.5 * u[:, 0] ** 2 + 0.5 * (1 - np.cos(u[:, 0]))
    eta = equilibrium_entropy(elasticity, u)
    assert np.max(np.abs(eta - (0.5 * u[:, 1] ** 2 + Sigma))) <= 1e-8
    q = equilibrium_entropy_flux(elasticity, u)
    np.testing.assert_allclose(q, -sigma(u[:, 0]) * u[:, 1], atol=1e-14)


def test_elasticity_hessian_bounds(elasticity):
    U = elasticity.box.sample()
    eig = np.linalg.eigvalsh(elasticity.entropy_hess(U))
    assert eig.min() >= elasticity.constants.mu - 1e-12
    assert eig.max() <= elasticity.constants.mu_prime + 1e-12
    # psi'' lower bound from the completed square
    E, g = 2.0, 0.5
    psi2 = 1.0 / (E - 1 - 0.5 * np.cos(elasticity.params.h_inverse(U[:, 2]))) - 1 / (E - g / 2)
    assert psi2.min() >= g / (2 * (E - g) * (E - g / 2)) - 1e-12


def test_elasticity_hessian_matches_fd(elasticity):
    U = elasticity.box.sample()[:200]
    np.testing.assert_allclose(elasticity.entropy_hess(U),
                               numerics.jacobian(elasticity.entropy_grad, U), atol=1e-7)


@pytest.mark.parametrize("kw,name", [
    (dict(E=1.4), "E > Gamma"),
    (dict(gamma=1.6), "0 < gamma < Gamma"),
    (dict(gamma=0.6), "gamma <= sigma'(u)"),
    (dict(sigma=lambda u: u + 0.1), "sigma(0) = 0"),
])
def test_elasticity_construction_errors(kw, name):
    with pytest.raises(ModelConstructionError) as exc:
        build_elasticity(**kw)
    assert exc.value.inequality == name


def test_elasticity_source_kinds():
    m = build_elasticity(source_kind="none")
    assert m.source_free and "H8" not in m.claimed
    m = build_elasticity(source_kind="lipschitz", g2=lambda u, v: -np.sin(u) - v)
    assert m.claimed[-1] == "H9" and "H8" not in m.claimed
    with pytest.raises(ContractError):
        build_elasticity(source_kind="bogus")


# --- combustion -----------------------------------------------------------

def test_combustion_constants(combustion):
    impl = combustion.params
    assert impl.E_hat == pytest.approx(1.75)
    assert impl.m_hat == pytest.approx(52.5)
    assert impl.m == pytest.approx(55.5)
    assert impl.Lam == pytest.approx(2 * 55.5 + 1.25 / (0.5 * 1.75) + 2.0)
    c = combustion.constants
    assert c.nu == pytest.approx(1 / 1.5)
    assert c.mu == pytest.approx(1 / impl.Lam)


def test_combustion_j_examples(combustion):
    impl = combustion.params
    assert abs(combustion_j(combustion, impl.h(0.8, 0.3), 0.3) - 0.8) <= 1e-10
    lin = CombustionParams(P=lambda v, Z: -v + 0 * Z, P_v=lambda v, Z: -1 + 0 * v,
                           P_Z=lambda v, Z: 0 * v, P_int=None, P_Z_int=None,
                           P_ZZ_int=lambda v, Z: 0 * v)
    a = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(combustion_j(lin, a, 0.4), -a, atol=1e-13)
    with pytest.raises(ContractError):
        combustion_j(combustion, 0.0, 1.5)


@given(st.floats(-10, 10), st.floats(0, 1))
def test_combustion_j_residual_and_derivative_bounds(alpha, Z):
    impl = build_combustion().params
    v = impl.j(alpha, Z)
    assert abs(impl.h(v, Z) - alpha) <= 1e-12 * max(1.0, abs(alpha))
    d = 1e-5
    j_a = (impl.j(alpha + d, Z) - impl.j(alpha - d, Z)) / (2 * d)
    assert 1 / 1.5 - 1e-6 <= -j_a <= 1 / 0.5 + 1e-6
    Zs = np.clip([Z - d, Z + d], 0, 1)
    j_z = (impl.j(alpha, Zs[1]) - impl.j(alpha, Zs[0])) / (Zs[1] - Zs[0])
    assert abs(j_z) <= 1.0 / 0.5 + 1e-6


def test_combustion_entropy_restriction(combustion):
    impl = combustion.params
    w = combustion.eq_box.sample()[:1000]
    v, u, Z = w.T
    eta = equilibrium_entropy(combustion, w)
    closed = 0.5 * u ** 2 - impl.P_int(v, Z) + impl.p.B(Z)
    assert np.max(np.abs(eta - closed)) <= 1e-8
    np.testing.assert_allclose(equilibrium_entropy_flux(combustion, w), impl.p.P(v, Z) * u,
                               atol=1e-14)


def test_combustion_pressure_integral_against_quad(combustion):
    impl = combustion.params
    for v, Z in [(-1.5, 0.2), (0.7, 1.0), (2.0, 0.5)]:
        ref = integrate.quad(lambda t: impl.p.P(t, Z), 0, v, epsabs=1e-13)[0]
        assert abs(impl.P_int(v, Z) - ref) <= 1e-12


def test_combustion_hessian_and_psi_block(combustion):
    U = combustion.clamp_states(combustion.box.sample()[:3000])
    H = combustion.entropy_hess(U)
    np.testing.assert_allclose(H[:300], numerics.jacobian(combustion.entropy_grad, U[:300]),
                               atol=2e-6)
    impl = combustion.params
    # psi(alpha, Z) = H - u^2/2 - gamma v^2/4 - (alpha + E_hat v)^2 / (2 E_hat)
    psi = H[:, [3, 2]][:, :, [3, 2]].copy()
    psi[:, 0, 0] -= 1.0 / impl.E_hat
    eig = np.linalg.eigvalsh(psi)
    assert eig.min() >= 1 / impl.Lam - 1e-12
    assert eig.max() <= impl.Lam + 1e-12


def test_combustion_z_must_stay_in_unit_interval(combustion):
    assert combustion.clamp == {2: (0.0, 1.0)}
    U = combustion.clamp_states(np.array([[0.0, 0.0, 1.7, 0.0], [0.0, 0.0, -0.2, 0.0]]))
    np.testing.assert_array_equal(U[:, 2], [1.0, 0.0])


def test_combustion_construction_errors():
    with pytest.raises(ModelConstructionError) as exc:
        build_combustion(B=lambda Z: Z ** 2, B_prime=lambda Z: 2 * Z,
                         B_second=lambda Z: 2 + 0 * Z)
    assert "m = 55.5" in exc.value.inequality
    with pytest.raises(ModelConstructionError):
        build_combustion(Gamma=1.1)
    with pytest.raises(ModelConstructionError) as exc:
        build_combustion(Cbar=0.9)
    assert exc.value.inequality == "Cbar >= 1"
    with pytest.raises(ModelConstructionError) as exc:
        build_combustion(Cbar=1.0, P_Z=lambda v, Z: 1.5 + 0 * v)
    assert exc.value.inequality == "|P_Z(v, Z)| < Cbar"
    with pytest.raises(ContractError):
        build_combustion(B=lambda Z: Z ** 2)


def test_combustion_reaction_rate_is_lipschitz(combustion):
    impl = combustion.params
    v = np.linspace(-6, 6, 2001)
    Z = np.linspace(0, 1, 2001)
    r = impl.p.phi(impl.p.Theta(v[:, None], Z[None, :]))
    assert np.all(r >= 0)
    slope = np.max(np.abs(np.diff(r, axis=0))) / (v[1] - v[0])
    assert slope < 1.0


# --- symmetric ------------------------------------------------------------

def test_symmetric_shapes(symmetric):
    assert (symmetric.n, symmetric.N) == (2, 4)
    np.testing.assert_array_equal(symmetric.projection, [[1, 0, 0, 0], [0, 1, 0, 0]])
    assert symmetric.relaxed == (2, 3)


def test_symmetric_j_examples(symmetric):
    impl = symmetric.params
    u0 = np.array([0.3, -0.2])
    np.testing.assert_allclose(symmetric_j(symmetric, -impl.Sigma_grad(u0)), -u0, atol=1e-12)
    u = symmetric.eq_box.sample()[:500]
    np.testing.assert_allclose(-impl.j(impl.h(u)), u, atol=1e-11)


def test_symmetric_j_quadratic_closed_form():
    s = 0.7
    p = SymmetricParams(Phi=lambda u: 0.5 * 1.3 * np.sum(u ** 2, -1),
                        Phi_grad=lambda u: 1.3 * u,
                        Phi_hess=lambda u: 1.3 * np.broadcast_to(np.eye(2), u.shape + (2,)),
                        Efun=lambda u: np.sum(u ** 2, -1), Efun_grad=lambda u: 2 * u,
                        Efun_hess=lambda u: 2 * np.broadcast_to(np.eye(2), u.shape + (2,)))
    a = np.array([[1.0, -2.0], [0.0, 0.5]])
    np.testing.assert_allclose(symmetric_j(p, a), a / s, atol=1e-12)
    np.testing.assert_allclose(symmetric_J(p, a), np.sum(a ** 2, -1) / (2 * s), atol=1e-12)


def test_symmetric_dJ_bracket(symmetric):
    a = symmetric.box.sample()[:2000, 2:]
    eig = np.linalg.eigvalsh(symmetric.params.j_jacobian(a))
    assert eig.min() >= 1 / (2.0 + 0.05 - 0.9) - 1e-12
    assert eig.max() <= 1 / (2.0 - 1.5) + 1e-12


def test_symmetric_J_paths_and_legendre_oracle(symmetric):
    impl = symmetric.params
    a = symmetric.box.sample()[:300, 2:]
    radial = symmetric_J(symmetric, a)
    axis = symmetric_J(symmetric, a, path="axis")
    assert np.max(np.abs(radial - axis)) <= 1e-9
    j = impl.j(a)
    legendre = np.sum(a * j, -1) - impl.Sigma(-j) + impl.Sigma(np.zeros(2))
    assert np.max(np.abs(radial - legendre)) <= 1e-9
    with pytest.raises(ContractError):
        symmetric_J(symmetric, a, path="zigzag")


def test_symmetric_entropy_restriction(symmetric):
    impl = symmetric.params
    u = symmetric.eq_box.sample()[:1000]
    eta = equilibrium_entropy(symmetric, u)
    C = float(equilibrium_entropy(symmetric, np.zeros(2)) - impl.p.Phi(np.zeros(2)))
    assert np.max(np.abs(eta - impl.p.Phi(u) - C)) <= 1e-8
    q = equilibrium_entropy_flux(symmetric, u)
    np.testing.assert_allclose(q, 0.5 * np.sum(impl.p.Phi_grad(u) ** 2, -1), atol=1e-13)
    grad = numerics.gradient(lambda w: equilibrium_entropy(symmetric, w), u[:100])
    np.testing.assert_allclose(grad, impl.p.Phi_grad(u[:100]), atol=1e-6)


def test_symmetric_hessian_lower_quadratic_form(symmetric):
    U = symmetric.box.sample()[:3000]
    H = symmetric.entropy_hess(U)
    rng = np.random.default_rng(0)
    X = rng.standard_normal(U.shape)
    form = np.einsum("ki,kij,kj->k", X, H, X)
    g, d, E = 0.9, 0.05, 2.0
    lower = 0.5 * (g - d) * np.sum(X[:, :2] ** 2, -1) + 0.5 * (g - d) * np.sum(
        X[:, 2:] ** 2, -1) / ((E + (d - g) / 2) * (E + d - g))
    assert np.all(form >= lower - 1e-12)


def test_symmetric_construction_errors():
    with pytest.raises(ModelConstructionError):
        build_symmetric(delta=0.95)
    with pytest.raises(ModelConstructionError) as exc:
        build_symmetric(gamma=1.2)
    assert exc.value.inequality == "gamma < D^2 Phi"
    with pytest.raises(ContractError):
        build_symmetric(g=lambda u: np.zeros(3))


def test_wave_speeds(elasticity, combustion, symmetric):
    U = elasticity.box.sample()[:10]
    np.testing.assert_allclose(elasticity.speed(U), np.sqrt(2.0))
    np.testing.assert_allclose(combustion.speed(combustion.box.sample()[:10]), np.sqrt(2.0))
    Us = symmetric.box.sample()[:200]
    dense = np.max(np.abs(np.linalg.eigvals(numerics.jacobian(symmetric.flux, Us))), -1)
    np.testing.assert_allclose(symmetric.speed(Us), dense, atol=1e-7)


def test_build_model_by_name():
    assert build_model("symmetric", delta=0.06).constants.mu_prime == pytest.approx(3.06)
    with pytest.raises(ContractError):
        build_model("plasma")


def test_hessian_bound_helpers():
    assert elas.hessian_bounds(0.5, 1.5, 2.0)[1] == pytest.approx(3.0)
    mu, mu_p = sym.hessian_bounds(0.9, 1.5, 2.0, 0.05)
    assert mu_p == pytest.approx(3.05)
    assert mu == pytest.approx(0.5 * 0.85 / (1.575 * 1.15))
    assert comb.hessian_bounds(0.5, 1.5, 2.0, 1.0)[0] < 0.01
