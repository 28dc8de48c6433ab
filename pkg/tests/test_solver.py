import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from relaxlab import kernels
from relaxlab.diagnostics import restrict, well_prepared_ic
from relaxlab.errors import (BlowUpError, ContractError, SmoothnessLostError, StepSizeError,
                             UnsupportedModelError)
from relaxlab.models import build_elasticity
from relaxlab.presets import initial_profile
from relaxlab.solver import (GridSpec, StateField, TimeControl, cell_average, hyperbolic_step,
                             max_wave_speed, numerical_flux, read_snapshot_csv,
                             relaxation_substep, run_equilibrium, run_relaxation,
                             write_series_csv, write_snapshot_csv)


def sine_ic(model, amp=0.1):
    return well_prepared_ic(model, initial_profile(model, "sine", amp))


@pytest.fixture(scope="module")
def linear():
    return build_elasticity(sigma=lambda u: u, sigma_prime=lambda u: 1.0 + 0.0 * u,
                            Sigma=lambda u: 0.5 * u ** 2, gamma=0.5, Gamma=1.5, E=2.0,
                            source_kind="none")


# --- elementary pieces ----------------------------------------------------

def test_grid_and_time_contracts():
    g = GridSpec(-1.0, 1.0, 16)
    assert g.dx == 0.125
    np.testing.assert_allclose(g.centers[[0, -1]], [-0.9375, 0.9375])
    assert g.refined(4).cells == 64
    for bad in (dict(cells=4), dict(x_hi=-2.0), dict(boundary="wall")):
        with pytest.raises(ContractError):
            GridSpec(**{**dict(x_lo=-1.0, x_hi=1.0, cells=16), **bad})
    with pytest.raises(ContractError):
        TimeControl(-0.1)
    with pytest.raises(ContractError):
        TimeControl(0.1, cfl=1.5)
    with pytest.raises(ContractError):
        StateField(g, np.zeros((15, 2)))


def test_numerical_flux_consistency(models):
    for m in models.values():
        U = m.clamp_states(m.box.sample()[:50])
        np.testing.assert_allclose(numerical_flux(m, U, U, m.speed(U)), m.flux(U), atol=1e-14)
        u = m.eq_box.sample()[:50]
        from relaxlab.framework import equilibrium_flux
        np.testing.assert_allclose(numerical_flux(m, u, u, 1.0), equilibrium_flux(m, u),
                                   atol=1e-13)


def test_numerical_flux_hand_value(elasticity):
    UL = np.array([0.0, 1.0, 0.0])
    UR = np.array([1.0, 0.0, 0.0])
    # F(UL) = (-1, 0, 0), F(UR) = (0, -2, 0), jump (1, -1, 0)
    np.testing.assert_allclose(numerical_flux(elasticity, UL, UR, 2.0),
                               [-0.5 - 1.0, -1.0 + 1.0, 0.0])
    with pytest.raises(ContractError):
        numerical_flux(elasticity, UL, UR, -1.0)


def test_max_wave_speed(elasticity):
    g = GridSpec(0, 1, 16)
    f = StateField(g, cell_average(g, sine_ic(elasticity)))
    assert max_wave_speed(elasticity, f) == pytest.approx(np.sqrt(2.0))


def test_cfl_violation_raises(elasticity):
    g = GridSpec(0, 1, 16)
    f = StateField(g, cell_average(g, sine_ic(elasticity)))
    dt_max = 0.45 * g.dx / np.sqrt(2.0)
    hyperbolic_step(elasticity, f, dt_max)
    with pytest.raises(StepSizeError):
        hyperbolic_step(elasticity, f, 1.01 * dt_max)


def test_constant_state_is_steady(models):
    for m in models.values():
        u0 = initial_profile(m, "constant", 0.2)
        g = GridSpec(0, 1, 16)
        f = StateField(g, cell_average(g, well_prepared_ic(m, u0)))
        if not m.source_free:
            continue
        out = hyperbolic_step(m, f, 1e-3)
        np.testing.assert_allclose(out.data, f.data, atol=1e-15)


def test_single_forward_euler_stage_oracle(linear):
    # with a single stage of forward Euler and unit-speed upwinding written out
    g = GridSpec(0, 1, 8)
    rng = np.random.default_rng(3)
    U = rng.standard_normal((8, 3))
    F = linear.flux(U)
    s = np.full(8, np.sqrt(2.0))
    face = np.empty((8, 3))
    for i in range(8):
        j = (i + 1) % 8
        face[i] = 0.5 * (F[i] + F[j]) - 0.5 * s[i] * (U[j] - U[i])
    div = np.array([-(face[i] - face[i - 1]) / g.dx for i in range(8)])
    np.testing.assert_allclose(kernels.rusanov_divergence(U, F, s, g.dx), div, atol=1e-12)
    # SSP-RK2 is the average of U and two Euler stages
    dt = 0.01
    U1 = U + dt * div
    U2 = U1 + dt * kernels.rusanov_divergence(U1, linear.flux(U1), s, g.dx)
    out = hyperbolic_step(linear, StateField(g, U), dt)
    np.testing.assert_allclose(out.data, 0.5 * (U + U2), atol=1e-13)


# --- relaxation substep ---------------------------------------------------

def test_relaxation_substep_example(elasticity):
    g = GridSpec(0, 1, 8)
    U = np.zeros((8, 3))
    U[:, 2] = 1.0  # h(0) = 0
    out = relaxation_substep(elasticity, StateField(g, U), 0.1, 0.1)
    np.testing.assert_allclose(out.data[:, 2], np.exp(-1.0), rtol=1e-15)
    np.testing.assert_array_equal(out.data[:, :2], 0.0)


def test_relaxation_substep_fixes_manifold_and_limits(elasticity):
    g = GridSpec(0, 1, 16)
    M = cell_average(g, sine_ic(elasticity))
    f = StateField(g, M)
    np.testing.assert_allclose(relaxation_substep(elasticity, f, 0.3, 1e-2).data, M, atol=1e-15)
    off = f.copy(data=M + np.array([0.0, 0.0, 0.3]))
    np.testing.assert_allclose(relaxation_substep(elasticity, off, 10.0, 1e-2).data, M,
                               atol=1e-15)
    np.testing.assert_allclose(relaxation_substep(elasticity, off, 0.0, 1e-2).data, off.data)


@pytest.mark.parametrize("eps,dt", [(1e-3, 1e-2), (1.0, 0.3), (0.05, 0.05)])
def test_relaxation_substep_against_ode_solver(models, eps, dt):
    rng = np.random.default_rng(11)
    for m in models.values():
        U0 = m.clamp_states(m.box.sample()[:8])
        U0 = U0 + 0.1 * rng.standard_normal(U0.shape) * np.isin(np.arange(m.N), m.relaxed)
        ref = solve_ivp(lambda t, y: (m.relaxation(y.reshape(U0.shape)) / eps).ravel(),
                        (0, dt), U0.ravel(), method="DOP853", rtol=1e-12, atol=1e-14)
        out = relaxation_substep(m, StateField(GridSpec(0, 1, 8), U0), dt, eps)
        np.testing.assert_allclose(out.data, ref.y[:, -1].reshape(U0.shape), atol=1e-10)


def test_relaxation_substep_unsupported(elasticity):
    from dataclasses import replace
    m = replace(elasticity, relaxed=())
    with pytest.raises(UnsupportedModelError):
        relaxation_substep(m, StateField(GridSpec(0, 1, 8), np.zeros((8, 3))), 0.1, 0.1)
    with pytest.raises(UnsupportedModelError):
        run_relaxation(m, GridSpec(0, 1, 8), np.zeros((8, 3)), TimeControl(0.1), 0.1)


# --- accuracy ---------------------------------------------------------------

def _exact_linear(u0, x, t):
    # u_t = v_x, v_t = u_x: u + v travels left, u - v travels right
    a = u0(x + t)
    b = u0(x - t)
    plus = a[..., 0] + a[..., 1]
    minus = b[..., 0] - b[..., 1]
    return np.stack([0.5 * (plus + minus), 0.5 * (plus - minus)], -1)


def test_linear_equilibrium_against_exact(linear):
    u0 = initial_profile(linear, "sine", 0.1)
    for cells in (128, 256):
        g = GridSpec(0, 1, cells)
        run = run_equilibrium(linear, g, u0, TimeControl(0.2), output_times=[0.2])
        exact = cell_average(g, lambda x: _exact_linear(u0, x, 0.2))
        err = g.dx * np.sum(np.abs(run.snapshots[-1].data - exact), axis=0)
        tv = np.sum(np.abs(np.diff(cell_average(g, u0), axis=0, append=cell_average(g, u0)[:1])),
                    axis=0)
        assert np.all(err <= 2 * g.dx * tv)


def test_linear_embedding_travels_at_sqrt_E(linear):
    # eps so large that alpha stays 0: u_t = v_x, v_t = E u_x with speeds +-sqrt(E)
    c = np.sqrt(2.0)
    u0 = initial_profile(linear, "sine", 0.1)

    def ic(x):
        w = u0(x)
        return np.concatenate([w, np.zeros(w.shape[:-1] + (1,))], -1)

    def exact(x, t):
        a, b = u0(x + c * t), u0(x - c * t)
        plus = c * a[..., 0] + a[..., 1]
        minus = c * b[..., 0] - b[..., 1]
        return np.stack([(plus + minus) / (2 * c), (plus - minus) / 2, 0 * plus], -1)

    g = GridSpec(0, 1, 512)
    run = run_relaxation(linear, g, ic, TimeControl(0.2), 1e30, [0.2], series="none")
    U = run.snapshots[-1].data
    assert np.max(np.abs(U[:, 2])) == 0.0
    err = g.dx * np.sum(np.abs(U - cell_average(g, lambda x: exact(x, 0.2))), axis=0)
    U0 = cell_average(g, ic)
    tv = np.sum(np.abs(U0 - np.roll(U0, 1, axis=0)), axis=0)
    assert np.all(err[:2] <= 2 * g.dx * tv[:2])


def _semi_discrete(m, dx, eps):
    def rhs(t, y):
        U = y.reshape(-1, m.N)
        div = kernels.rusanov_divergence(U, m.flux(U), m.speed(U), dx)
        return (div + m.source(U) + m.relaxation(U) / eps).ravel()
    return rhs


def test_strang_step_local_order(elasticity):
    g = GridSpec(0, 1, 32)
    eps = 0.05
    U0 = cell_average(g, sine_ic(elasticity)) + np.array([0.0, 0.0, 0.05])
    errs = []
    dts = [4e-3, 2e-3, 1e-3]
    for dt in dts:
        ref = solve_ivp(_semi_discrete(elasticity, g.dx, eps), (0, dt), U0.ravel(),
                        method="DOP853", rtol=1e-13, atol=1e-15).y[:, -1]
        run = run_relaxation(elasticity, g, U0, TimeControl(dt, cfl=1.0), eps,
                             output_times=[dt], series="none")
        errs.append(np.max(np.abs(run.snapshots[-1].data.ravel() - ref)))
    order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert order >= 2.5, (errs, order)


def _self_convergence(run_fn, ncells=(64, 128, 256), ref_cells=1024):
    ref = run_fn(ref_cells)
    errs = []
    for c in ncells:
        fine = restrict(ref, ref_cells // c)
        errs.append(np.sum(np.abs(run_fn(c) - fine)) / c)
    return np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])


def test_self_convergence_relaxation(elasticity):
    ic = sine_ic(elasticity)
    rates = _self_convergence(lambda c: run_relaxation(
        elasticity, GridSpec(0, 1, c), ic, TimeControl(0.1), 1e-2, [0.1],
        series="none").snapshots[-1].data)
    assert min(rates) >= 0.8, rates


def test_self_convergence_equilibrium(symmetric):
    u0 = initial_profile(symmetric, "sine", 0.1)
    rates = _self_convergence(lambda c: run_equilibrium(
        symmetric, GridSpec(0, 1, c), u0, TimeControl(0.1), [0.1],
        series="none").snapshots[-1].data)
    assert min(rates) >= 0.8, rates


# --- invariants --------------------------------------------------------------

def test_output_times_hit_exactly(elasticity):
    times = [0.0, 0.013, 0.05, 0.1]
    run = run_relaxation(elasticity, GridSpec(0, 1, 32), sine_ic(elasticity), TimeControl(0.1),
                         1e-2, times)
    np.testing.assert_array_equal(run.times, times)
    assert run.snapshot_at(0.013).time == 0.013
    with pytest.raises(ContractError):
        run_relaxation(elasticity, GridSpec(0, 1, 32), sine_ic(elasticity), TimeControl(0.1),
                       1e-2, [0.2])


@settings(max_examples=15)
@given(st.floats(0.01, 0.5), st.integers(1, 3), st.sampled_from([1e-3, 1e-1, 10.0]))
def test_conservation_without_source(amp, k, eps):
    m = build_elasticity(source_kind="none")
    ic = well_prepared_ic(m, initial_profile(m, "sine", amp, k))
    run = run_relaxation(m, GridSpec(0, 1, 32), ic, TimeControl(0.05), eps, series="none")
    first, last = run.snapshots[0].data, run.snapshots[-1].data
    assert np.all(np.abs(last[:, :2].sum(0) - first[:, :2].sum(0)) <= 1e-12 * 32)


@settings(max_examples=10)
@given(st.floats(0.05, 0.5), st.integers(1, 2), st.sampled_from([1e-3, 1e-1]))
def test_entropy_non_increasing(amp, k, eps):
    m = build_elasticity()
    ic = well_prepared_ic(m, initial_profile(m, "gaussian-bump", amp, k))
    run = run_relaxation(m, GridSpec(0, 1, 32), ic, TimeControl(0.1), eps)
    H = run.series["total_entropy"]
    assert np.all(np.diff(H) <= 1e-13 * max(1.0, abs(H[0])))


def test_mass_fraction_stays_in_unit_interval(combustion):
    u0 = lambda x: np.stack(np.broadcast_arrays(  # noqa: E731
        0.3 * np.sin(2 * np.pi * x), 0.0 * x, 0.5 + 0.5 * np.sin(2 * np.pi * x) ** 3), -1)
    run = run_relaxation(combustion, GridSpec(0, 1, 64), well_prepared_ic(combustion, u0),
                         TimeControl(0.3), 1e-2)
    assert run.series["min_Z"].min() >= 0.0
    assert run.series["max_Z"].max() <= 1.0


# --- failures ----------------------------------------------------------------

def test_blow_up_is_reported(elasticity):
    g = GridSpec(0, 1, 16)
    U = cell_average(g, sine_ic(elasticity))
    U[5, 1] = np.nan
    with pytest.raises(BlowUpError) as exc:
        run_relaxation(elasticity, g, U, TimeControl(0.1), 1e-2)
    # the NaN reaches two neighbours per SSP-RK2 step
    assert 3 <= exc.value.cell <= 7 and exc.value.time > 0


def test_smoothness_loss_is_reported(elasticity):
    # this profile steepens by about 19% before diffusion wins
    u0 = initial_profile(elasticity, "sine", 2.0)
    with pytest.raises(SmoothnessLostError) as exc:
        run_equilibrium(elasticity, GridSpec(0, 1, 512), u0, TimeControl(1.0), growth_limit=1.1)
    assert exc.value.growth > 1.1 and 0 < exc.value.time < 1.0
    run_equilibrium(elasticity, GridSpec(0, 1, 512), u0, TimeControl(1.0), series="none")


def test_max_steps(elasticity):
    with pytest.raises(StepSizeError):
        run_relaxation(elasticity, GridSpec(0, 1, 16), sine_ic(elasticity),
                       TimeControl(0.1, max_steps=3), 1e-2)


# --- export -----------------------------------------------------------------

def test_snapshot_csv_round_trip(tmp_path, combustion):
    g = GridSpec(0, 2, 16)
    run = run_relaxation(combustion, g, sine_ic(combustion), TimeControl(0.05), 1e-2,
                         [0.025, 0.05])
    for snap in run.snapshots:
        path = write_snapshot_csv(snap, tmp_path)
        back = read_snapshot_csv(path, g)
        np.testing.assert_array_equal(back.data, snap.data)
        assert back.time == snap.time and back.names == ("v", "u", "Z", "alpha")
    path = write_series_csv(run, tmp_path / "series.csv")
    header = open(path).readline().strip().split(",")
    assert header == ["t", "dt", "total_entropy", "total_dissipation", "min_Z", "max_Z"]
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    assert table.shape == (run.steps + 1, 6)
