"""Acceptance suite: one test per criterion, each prints a PASS/FAIL line."""

import filecmp
import math
import time

import numpy as np
import pytest

from vanishlab import discrete_ops as dops
from vanishlab import kernels, potentials, radial_solver, vanishing
from vanishlab.config import config_from_dict
from vanishlab.grid import RadialFunction, RadialGrid
from vanishlab.scenarios import list_scenarios, run_scenario

BETAS = {0.25: 0.0590170, 0.5: 0.1123724, 0.75: 0.1614378, 3.0: 0.5}


def report(number, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} acceptance {number:02d}: {detail}")
    assert ok, detail


def rel(a, b):
    return abs(a - b) / abs(b)


def test_01_hardy_vanishing_order():
    grid = RadialGrid(n_points=4096)
    lines, ok = [], True
    for delta, beta in BETAS.items():
        assert abs(radial_solver.hardy_beta(delta) - beta) < 1e-7
        start = time.perf_counter()
        vals = radial_solver.oracle_resolvent(delta, 1.0, vanishing.unit_shell_source,
                                              (1.0, 2.0), grid.r)
        oracle = vanishing.vanishing_report(RadialFunction(grid, vals), 2.0).ord_hat
        fd = vanishing.vanishing_report(radial_solver.resolvent_apply(
            1.0, potentials.make_hardy(3, delta), vanishing.unit_shell_source, grid), 2.0).ord_hat
        elapsed = time.perf_counter() - start
        ok &= rel(oracle, beta) < 0.02 and rel(fd, beta) < 0.05 and elapsed < 10.0
        lines.append(f"delta={delta:g} oracle={oracle:.6f} fd={fd:.6f} t={elapsed:.2f}s")
    report(1, ok, "; ".join(lines))


def test_02_lower_bound():
    lines, ok = [], True
    for delta0 in (0.0, 0.1):
        rep = vanishing.lower_bound_check(0.75, delta0, p=6.0)
        ok &= rep["Ord_hat"] >= rep["threshold"] - 0.01
        if delta0 == 0.0:
            ok &= abs(rep["relative_gap"]) <= 0.03
        lines.append(f"delta0={delta0:g} Ord={rep['Ord_hat']:.6f} bound={rep['threshold']:.6f}")
    report(2, ok, "; ".join(lines))


def _sawyer(estimate, number):
    start = time.perf_counter()
    rep = kernels.sawyer_ratio_scan(estimate, 12, 100_000, seed=0)
    elapsed = time.perf_counter() - start
    ratios = np.array([v for _, v in rep.ratio_by_N])
    spread = ratios.max() / ratios.min()
    ok = bool(np.all(np.isfinite(ratios))) and spread < 2.0 and elapsed < 60.0
    report(number, ok, f"{estimate} max ratio {ratios.max():.4g}, spread over N {spread:.3f}, "
                       f"{elapsed:.1f}s")


def test_03_sawyer_s1():
    _sawyer("s1", 3)


def test_04_sawyer_s2():
    _sawyer("s2", 4)


def test_05_complex_tail():
    rep = kernels.complex_tail_check(10, 200, 0.05)
    z = np.linspace(0.0, 0.95, 401)
    series = kernels.taylor_remainder(z, 1, method="series")[0]
    err = float(np.max(np.abs(series - (0.5 * (1.0 - z) ** -2 - 0.5))))
    ok = math.isfinite(rep.max_normalized_tail) and err <= 1e-10
    report(5, ok, f"max normalized tail {rep.max_normalized_tail:.4f}, N=1 closed form error "
                  f"{err:.2e}")


def test_06_truncated_kernel():
    rng = np.random.default_rng(6)
    worst_route = 0.0
    worst_tele = 0.0
    zero_ok = True
    for _ in range(40):
        y = rng.normal(size=3)
        d = rng.normal(size=3)
        t = rng.uniform(0.01, 0.5)
        x = d / np.linalg.norm(d) * t * np.linalg.norm(y)
        for N in range(0, 9):
            for grad in (None, 1, 3):
                spec = kernels.TruncatedKernelSpec(3, 2.0, N, grad)
                a = kernels.truncated_riesz_eval(spec, x, y, method="series")
                b = kernels.truncated_riesz_eval(spec, x, y, method="direct")
                worst_route = max(worst_route, abs(a - b) / abs(b))
                if N >= 1:
                    zero_ok &= kernels.truncated_riesz_eval(spec, np.zeros(3), y) == 0.0
        # [K]_N - [K]_{N+1} is the degree-N homogeneous term
        vals = kernels.truncated_all(kernels.TruncatedKernelSpec(N=0), np.stack([x, 0.5 * x]),
                                     np.stack([y, y]), 9)
        terms = vals[:-1] - vals[1:]
        n = np.arange(9)
        scaled = terms[:, 0] * 0.5**n
        worst_tele = max(worst_tele, float(np.max(np.abs(terms[:, 1] - scaled)
                                                  / np.abs(vals[0, 0]))))
    ok = worst_route <= 1e-8 and zero_ok and worst_tele <= 1e-10
    report(6, ok, f"series vs direct {worst_route:.2e}, [K]_N(0,y)=0: {zero_ok}, "
                  f"telescoping {worst_tele:.2e}")


def test_07_operator_bound():
    grid = RadialGrid()
    V = potentials.make_hardy(3, 0.5)
    trunc = (1e-3, 3.0)
    nu = potentials.local_form_bound(V.truncated(*trunc), trunc[1], grid)
    lines, ok = [], True
    for p, k in ((2.0, 1.0), (3.0, 9 / 8), (4.0, 4 / 3)):
        assert dops.kappa(p) == pytest.approx(k)
        rep = dops.prop22_check(V, p, grid, 200, 0, nu=nu, truncation=trunc)
        ok &= rep.norm_lower_bound <= k * nu + 1e-3
        lines.append(f"p={p:g} norm={rep.norm_lower_bound:.5f} rhs={k * nu:.5f}")
        if p == 2.0:
            power = dops.power_iteration(dops.prop_operator(V.truncated(*trunc), 2.0, grid))
            ok &= rel(rep.norm_lower_bound, power) <= 0.05
            lines.append(f"power={power:.5f}")
    report(7, ok, f"nu={nu:.5f}; " + "; ".join(lines))


def test_08_form_bounds():
    V = potentials.make_hardy(3, 0.5)
    values = [potentials.form_bound_ratio(V, 0.0, RadialGrid.decades(-a, a, 20))[0]
              for a in (4, 7, 10)]
    monotone = all(b >= a for a, b in zip(values, values[1:]))
    hardy = dops.hardy_check(RadialGrid(1e-30, 1e2, 3201), 200, 0)
    ok = monotone and max(values) <= 0.5 and rel(values[-1], 0.5) < 0.03 and hardy <= 1 + 1e-3
    report(8, ok, f"delta_hat {', '.join(f'{v:.5f}' for v in values)}; Hardy ratio {hardy:.6f}")


def test_09_green_bound():
    grid = RadialGrid()
    beta = radial_solver.hardy_beta(0.75)
    slice_ = radial_solver.green_radial(1.0, potentials.make_hardy(3, 0.75), 2.0, 32, grid)
    fit = vanishing.green_bound_fit(slice_, 1.0, beta, 400, 0, (1e-3, 1.0))
    slope = vanishing.green_log_slope(slice_, (1e-3, 0.1))
    free = radial_solver.green_radial(1.0, potentials.make_hardy(3, 0.0), 2.0, 32, grid)
    rng = np.random.default_rng(9)
    d = rng.normal(size=(20, 3))
    x = d / np.linalg.norm(d, axis=1)[:, None] * np.exp(rng.uniform(np.log(1e-3), 0, 20))[:, None]
    y = np.tile([0.0, 0.0, free.source_radius], (20, 1))
    free_err = float(np.max(np.abs(free(x, y) / radial_solver.free_green(1.0, x, y) - 1.0)))
    ok = fit.condition_number <= 10 and rel(slope, beta) <= 0.03 and free_err <= 1e-3
    report(9, ok, f"condition {fit.condition_number:.4f}, slope {slope:.5f} vs {beta:.5f}, "
                  f"free error {free_err:.2e}")


def test_10_drift_exponent():
    grid = RadialGrid()
    u = radial_solver.drift_mode_solve(1.0, 0.64, vanishing.unit_shell_source, grid)
    m = (grid.r >= 1e-3) & (grid.r <= 1e-2)
    slope = float(np.polyfit(np.log(grid.r[m]), np.log(u.values[m]), 1)[0])
    report(10, rel(slope, 0.4) <= 0.05, f"log-slope {slope:.6f} vs 0.4")


def test_11_desingularization():
    rng = np.random.default_rng(11)
    worst = max(vanishing.desingular_residual(d) for d in rng.uniform(0, 10, 100))
    res = [vanishing.discrete_desingular_residual(0.75, RadialGrid(1e-4, 20, n))
           for n in (1024, 2048, 4096)]
    orders = [math.log2(a / b) for a, b in zip(res, res[1:])]
    ok = worst < 1e-12 and all(abs(o - 2.0) < 0.1 for o in orders)
    report(11, ok, f"algebraic {worst:.1e}, observed orders {orders[0]:.4f}, {orders[1]:.4f}")


def test_12_coercivity():
    rep = vanishing.coercivity_check(1e-4, 0.5954, 0.75, 0.0, 0.0, RadialGrid(), 1000, 0)
    ok = rep.margin >= -1e-8 and rep.identity_error <= 1e-6
    report(12, ok, f"margin {rep.margin:.4f}, identity error {rep.identity_error:.1e}")


def test_13_theorem_implication():
    coarse = RadialGrid()
    us = [RadialFunction(g, radial_solver.oracle_resolvent(3.0, 1.0, vanishing.unit_shell_source,
                                                           (1.0, 2.0), g.r))
          for g in (coarse, coarse.refined(2))]
    rep = vanishing.implication_check(us[0], us[1], 0.5 + 1e-3, 2.0, 0.02)
    ok = (rep["beta_above_ord"] and rep["hypothesis"] and rep["implication_holds"]
          and rep["refinement_delta"] <= 0.01)
    report(13, ok, f"beta=0.501 flagged={rep['beta_above_ord']}, lhs={rep['lhs']:.3f} "
                   f"<= Ord={rep['Ord_hat']:.5f}, refinement {rep['refinement_delta']:.1e}")


def test_14_estimator_calibration():
    grid = RadialGrid()
    worst = 0.0
    for alpha in (0.1, 0.5, 1.5, 2.7):
        rep = vanishing.vanishing_report(vanishing.power_function(grid, alpha), 2.0)
        worst = max(worst, abs(rep.ord_hat - alpha), abs(rep.Ord_hat - alpha))
    gaps = []
    for name in potentials.CATALOG:
        u = radial_solver.resolvent_apply(1.0, potentials.catalog(name),
                                          vanishing.unit_shell_source, grid)
        rep = vanishing.vanishing_report(u, 2.0)
        gaps.append(rep.Ord_hat - rep.ord_hat)
    ok = worst <= 1e-3 and max(gaps) <= 1e-2
    report(14, ok, f"power-law error {worst:.1e}, max Ord-ord over catalog {max(gaps):.1e}")


def test_15_determinism(tmp_path):
    differing = []
    for name in list_scenarios():
        for run in ("a", "b"):
            run_scenario(config_from_dict({"scenario": name, "output_dir": str(tmp_path / run)}))
        a, b = tmp_path / "a" / name, tmp_path / "b" / name
        files = sorted(f.name for f in a.iterdir() if f.name != "manifest.json")
        _, mismatch, errors = filecmp.cmpfiles(a, b, files, shallow=False)
        differing += [f"{name}/{f}" for f in mismatch + errors]
    report(15, not differing, f"{len(list_scenarios())} scenarios, differing files: "
                              f"{differing or 'none'}")
