"""Relative-entropy diagnostics comparing relaxation and equilibrium runs.

- total relative entropy and L2 distance between a relaxation field and the
  Maxwellian of an equilibrium field
- the pointwise relative-entropy identity
  ``dH^r/dt + dQ^r/dx + D/eps + S = J1 + J2 + J3 + J4`` and its residual
- well-prepared initial data, the cone speed, and the eps-convergence study
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import ContractError, InconclusiveStudyError
from .framework import (dissipation, equilibrium_entropy_grad,
                        equilibrium_entropy_hess, equilibrium_flux, equilibrium_source,
                        relative_entropy, relative_entropy_flux, source_bracket)
from .solver import StateField, run_equilibrium, run_relaxation

FLOOR_FACTOR = 3.0


def _check_pair(relax_field, eq_field, time_tol):
    if relax_field.grid != eq_field.grid:
        raise ContractError("relaxation and equilibrium fields live on different grids")
    tol = time_tol if time_tol is not None else 1e-12 * max(1.0, abs(relax_field.time))
    if abs(relax_field.time - eq_field.time) > tol:
        raise ContractError(
            f"field times differ: {relax_field.time!r} vs {eq_field.time!r}")


def total_relative_entropy(model, relax_field, eq_field, time_tol=None):
    """``dx * sum_i H^r(U_i, u_bar_i)``.

    ``time_tol`` is the largest accepted time offset between the two fields
    (default: equal up to roundoff).
    """
    _check_pair(relax_field, eq_field, time_tol)
    hr = relative_entropy(model, relax_field.data, eq_field.data)
    return float(relax_field.grid.dx * np.sum(hr))


def l2_distance(model, relax_field, eq_field, time_tol=None):
    """``|| U - M(u_bar) ||_{L2}`` on the grid."""
    _check_pair(relax_field, eq_field, time_tol)
    d = relax_field.data - model.maxwellian(eq_field.data)
    return float(np.sqrt(relax_field.grid.dx * np.sum(d ** 2)))


def well_prepared_ic(model, ic_u):
    """Initial data ``x -> M(u0(x))`` on the Maxwellian manifold.

    The returned callable also carries ``equilibrium_ic`` and ``maxwellian``
    so that the solver can take cell averages of ``u0`` first and apply
    ``M`` afterwards; the discrete relative entropy at ``t = 0`` is then
    exactly zero.
    """
    def ic(x):
        u = np.asarray(ic_u(x), dtype=float)
        if u.shape[-1:] != (model.n,):
            u = u[..., None]
        return model.maxwellian(u)

    ic.equilibrium_ic = ic_u
    ic.maxwellian = model.maxwellian
    return ic


# --- cone speed -----------------------------------------------------------

def _matnorm(A):
    return np.linalg.norm(A, ord=2, axis=(-2, -1))


def cone_speed_from_samples(model, U, V):
    """``sup |D^2H(U) DF(V)| / min eig D^2H`` over the given pairs."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    HU = model.hessian(U)
    DF = numerics.jacobian(model.flux, V)
    mu_r = float(np.min(np.linalg.eigvalsh(HU)[..., 0]))
    if not mu_r > 0:
        raise ContractError("entropy Hessian is not positive definite on the samples")
    return float(np.max(_matnorm(HU @ DF))) / mu_r


def cone_speed(model, box=None):
    """Finite speed of propagation ``s = mu_r^-1 sup_{U,V} |D^2H(U) DF(V)|``.

    The supremum runs over quasi-random pairs in ``box`` together with all
    pairs of box corners; ``mu_r`` is the smallest Hessian eigenvalue seen.
    """
    box = box or model.box
    if box is None or box.dim != model.N:
        raise ContractError("cone_speed needs a U-space box")
    pts = box.sample(extra_dims=model.N)
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    U = model.clamp_states(pts[:, : model.N])
    V = model.clamp_states(lo + (hi - lo) * pts[:, model.N:])
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(model.N, -1).T
    corners = model.clamp_states(corners)
    cu = np.repeat(corners, len(corners), axis=0)
    cv = np.tile(corners, (len(corners), 1))
    return cone_speed_from_samples(model, np.vstack([U, cu]), np.vstack([V, cv]))


# --- relative-entropy identity --------------------------------------------

TERMS = ("Hr", "Qr", "D_eps", "S", "J1", "J2", "J3", "J4")


@dataclass
class IdentityResidualReport:
    """Terms of the relative-entropy identity on consecutive snapshot pairs.

    ``terms[k][name]`` holds the per-cell values on slice ``k`` (evaluated at
    ``times[k]``), ``residual[k]`` the per-cell residual and ``l1[k]`` its
    L1 norm.
    """
    times: np.ndarray
    dt: np.ndarray
    terms: list
    residual: list
    l1: np.ndarray


def _ddx(a, dx):
    return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * dx)


def identity_terms(model, U, ubar, ubar_x, eps):
    """Pointwise terms of the identity at one time level.

    Parameters
    ----------
    U : (m, N) relaxation states
    ubar, ubar_x : (m, n) equilibrium states and their x-derivative
    """
    u = U @ model.projection.T
    Mu = model.maxwellian(u)
    Mb = model.maxwellian(ubar)
    d2eta = equilibrium_entropy_hess(model, ubar)
    w = np.einsum("...ij,...j->...i", d2eta, ubar_x)
    fb = equilibrium_flux(model, ubar)
    Df = numerics.jacobian(lambda z: equilibrium_flux(model, z), ubar)
    lin = equilibrium_flux(model, u) - fb - np.einsum("...ij,...j->...i", Df, u - ubar)
    J1 = -np.sum(w * lin, axis=-1)
    J2 = -np.sum(w * ((model.flux(U) - model.flux(Mu)) @ model.projection.T), axis=-1)
    gb = equilibrium_source(model, ubar)
    deta = equilibrium_entropy_grad(model, u) - equilibrium_entropy_grad(model, ubar) \
        - np.einsum("...ij,...j->...i", d2eta, u - ubar)
    J3 = np.sum(gb * deta, axis=-1)
    J4 = np.sum((model.entropy_grad(U) - model.entropy_grad(Mu)) * model.source(Mb), axis=-1)
    return {
        "Hr": relative_entropy(model, U, ubar),
        "Qr": relative_entropy_flux(model, U, ubar),
        "D_eps": dissipation(model, U) / eps,
        "S": source_bracket(model, U, ubar),
        "J1": J1, "J2": J2, "J3": J3, "J4": J4,
    }


def _find(run, t, tol):
    for s in run.snapshots:
        if abs(s.time - t) <= tol:
            return s
    return None


def identity_residual(model, run_relax, run_eq, eps=None, max_gap=None):
    """Residual of the relative-entropy identity between two runs.

    Uses forward differences in time between consecutive relaxation
    snapshots (each matched with an equilibrium snapshot at the same time)
    and central differences in space; all other terms are evaluated at the
    earlier time of each pair.  Pairs further apart than ``max_gap`` are
    skipped.
    """
    eps = run_relax.eps if eps is None else eps
    if eps is None or not eps > 0:
        raise ContractError("identity_residual needs eps > 0")
    snaps = run_relax.snapshots
    times, dts, terms, residual, l1 = [], [], [], [], []
    for a, b in zip(snaps[:-1], snaps[1:]):
        gap = b.time - a.time
        if max_gap is not None and gap > max_gap * (1 + 1e-12):
            continue
        tol = 1e-12 * max(1.0, b.time)
        ea, eb = _find(run_eq, a.time, tol), _find(run_eq, b.time, tol)
        if ea is None or eb is None:
            continue
        if a.grid != ea.grid:
            raise ContractError("runs do not share a grid")
        dx = a.grid.dx
        tk = identity_terms(model, a.data, ea.data, _ddx(ea.data, dx), eps)
        hr_next = relative_entropy(model, b.data, eb.data)
        lhs = (hr_next - tk["Hr"]) / gap + _ddx(tk["Qr"], dx) + tk["D_eps"] + tk["S"]
        res = lhs - (tk["J1"] + tk["J2"] + tk["J3"] + tk["J4"])
        times.append(a.time)
        dts.append(gap)
        terms.append(tk)
        residual.append(res)
        l1.append(dx * float(np.sum(np.abs(res))))
    if not times:
        raise ContractError("no matching snapshot pairs between the two runs")
    return IdentityResidualReport(np.array(times), np.array(dts), terms, residual,
                                  np.array(l1))


# --- convergence study ----------------------------------------------------

@dataclass
class ConvergenceReport:
    """Errors of an eps-sweep against a refined equilibrium reference.

    ``errors[i]`` is ``sup_t int H^r dx`` and ``l2_errors[i]`` is
    ``sup_t ||U - M(u_bar)||_{L2}`` for ``eps_values[i]``; ``used[i]`` marks
    points above ``FLOOR_FACTOR * floor_estimate`` that enter the log-log
    least-squares fit.  ``constant`` is ``max_i errors[i] / eps_values[i]``.
    """
    eps_values: list
    errors: list
    l2_errors: list
    fitted_slope: float
    floor_estimate: float
    points_used: int
    used: list = field(default_factory=list)
    l2_slope: float = float("nan")
    constant: float = float("nan")
    cells: int = 0
    t_end: float = 0.0

    def rows(self):
        return [(e, h, l, self.floor_estimate, int(u))
                for e, h, l, u in zip(self.eps_values, self.errors, self.l2_errors, self.used)]


def fit_slope(eps, err):
    """Least-squares slope of ``log10(err)`` against ``log10(eps)``."""
    x = np.log10(np.asarray(eps, dtype=float))
    y = np.log10(np.asarray(err, dtype=float))
    if x.size < 2:
        return float("nan")
    A = np.column_stack([x, np.ones_like(x)])
    return float(np.linalg.lstsq(A, y, rcond=None)[0][0])


def thread_count(default=None):
    """Worker cap from ``RELAX_THREADS`` (positive integer) or ``default``."""
    raw = os.environ.get("RELAX_THREADS")
    if raw is None:
        return default or (os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ContractError(f"RELAX_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise ContractError(f"RELAX_THREADS must be a positive integer, got {raw!r}")
    return n


def restrict(data, factor):
    """Average blocks of ``factor`` fine cells onto the coarse grid."""
    m, k = data.shape
    if m % factor:
        raise ContractError("fine grid is not a multiple of the coarse grid")
    return data.reshape(m // factor, factor, k).mean(axis=1)


def _sup_errors(model, snaps, refs):
    hr = l2 = 0.0
    for s, r in zip(snaps, refs):
        hr = max(hr, total_relative_entropy(model, s, r))
        l2 = max(l2, l2_distance(model, s, r))
    return hr, l2


def convergence_study(model, grid, ic_u, tc, eps_list, floor_grid_factor=4,
                      output_times=None, threads=None):
    """Sweep ``eps`` and measure the relaxation error against equilibrium.

    Each relaxation run starts from well-prepared data.  The reference
    ``u_bar`` comes from an equilibrium run on a grid refined by
    ``floor_grid_factor`` and averaged back onto ``grid``.  The floor
    estimate is the same error functional between the reference and the
    ``eps -> 0`` limit of the relaxation scheme on ``grid`` (an equilibrium
    run using the relaxation scheme's numerical viscosity).

    Raises
    ------
    InconclusiveStudyError
        If fewer than two points lie above ``FLOOR_FACTOR * floor_estimate``.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 2:
        raise ContractError("eps_list needs at least two values")
    if any(not e > 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ContractError("eps_list must be positive and strictly decreasing")
    if int(floor_grid_factor) < 2:
        raise ContractError("floor_grid_factor must be >= 2")
    k = int(floor_grid_factor)
    outs = np.linspace(0.0, tc.t_end, 21) if output_times is None else output_times

    fine = run_equilibrium(model, grid.refined(k), ic_u, tc, outs, series="none")
    refs = [StateField(grid, restrict(s.data, k), s.time) for s in fine.snapshots]
    limit_speed = _relaxation_speed_bound(model, grid, ic_u)
    coarse = run_equilibrium(model, grid, ic_u, tc, outs, series="none", speed=limit_speed)
    floor = max(
        total_relative_entropy(model, StateField(grid, model.maxwellian(c.data), c.time), r)
        for c, r in zip(coarse.snapshots, refs))

    ic = well_prepared_ic(model, ic_u)

    def one(eps):
        run = run_relaxation(model, grid, ic, tc, eps, outs, series="none")
        return _sup_errors(model, run.snapshots, refs)

    workers = max(1, min(threads or thread_count(), len(eps_list)))
    if workers == 1:
        results = [one(e) for e in eps_list]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, eps_list))
    order = np.argsort(eps_list)[::-1]
    eps_sorted = [eps_list[i] for i in order]
    errs = [results[i][0] for i in order]
    l2s = [results[i][1] for i in order]
    used = [e > FLOOR_FACTOR * floor for e in errs]
    pts = [i for i, u in enumerate(used) if u]
    if len(pts) < 2:
        raise InconclusiveStudyError(
            f"only {len(pts)} of {len(errs)} points lie above {FLOOR_FACTOR:g} x the "
            f"discretization floor {floor:.3e}; refine the grid or use larger eps")
    slope = fit_slope([eps_sorted[i] for i in pts], [errs[i] for i in pts])
    l2_slope = fit_slope([eps_sorted[i] for i in pts], [l2s[i] for i in pts])
    constant = max(e / x for e, x in zip(errs, eps_sorted))
    return ConvergenceReport(eps_sorted, errs, l2s, slope, floor, len(pts), used,
                             l2_slope, constant, grid.cells, tc.t_end)


def _relaxation_speed_bound(model, grid, ic_u):
    from .solver import cell_average
    U0 = model.maxwellian(cell_average(grid, ic_u, model.n))
    return float(np.max(model.speed(U0)))


# --- export ---------------------------------------------------------------

CONVERGENCE_COLUMNS = ("eps", "sup_Hr", "sup_L2", "floor", "used")


def write_convergence_csv(report, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CONVERGENCE_COLUMNS) + "\n")
        for e, h, l, f, u in report.rows():
            fh.write(f"{e:.17g},{h:.17g},{l:.17g},{f:.17g},{u:d}\n")
    return path


def write_identity_csv(report, path):
    with open(path, "w", newline="") as fh:
        fh.write("t,dt,residual_l1," + ",".join(f"{t}_l1" for t in TERMS) + "\n")
        for k, t in enumerate(report.times):
            dx_sum = [float(np.mean(np.abs(report.terms[k][name]))) for name in TERMS]
            vals = [t, report.dt[k], report.l1[k]] + dx_sum
            fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")
    return path


def convergence_summary(report, threshold=None):
    lines = [
        "eps-convergence study",
        f"  cells            {report.cells}",
        f"  t_end            {report.t_end:.6g}",
        f"  floor estimate   {report.floor_estimate:.6e}",
        f"  points used      {report.points_used} of {len(report.eps_values)}",
        f"  slope (H^r)      {report.fitted_slope:.4f}",
        f"  slope (L2)       {report.l2_slope:.4f}",
        f"  C = max err/eps  {report.constant:.6e}",
        "  eps            sup_Hr         sup_L2         used",
    ]
    for e, h, l, u in zip(report.eps_values, report.errors, report.l2_errors, report.used):
        lines.append(f"  {e:<14.6e} {h:<14.6e} {l:<14.6e} {'yes' if u else 'no'}")
    if threshold is not None:
        verdict = "PASS" if report.fitted_slope >= threshold else "FAIL"
        lines.append(f"  slope threshold  {threshold:g} -> {verdict}")
    return "\n".join(lines)
