import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vanishlab import potentials, radial_solver, vanishing
from vanishlab.errors import DomainError, InvalidSpecError
from vanishlab.grid import RadialFunction, RadialGrid

GRID = RadialGrid()


@settings(max_examples=25, deadline=None)
@given(st.floats(-2.5, 4.0))
def test_power_law_integral_exact(a):
    # int_0^r rho^a = r^(a+1)/(a+1) for a > -1
    integral = vanishing.PowerLawIntegral(GRID, GRID.r**a)
    for radius in (0.01, 0.5, 3.0):
        value = float(integral(radius)[0])
        if a <= -1 + 1e-3:
            assert math.isinf(value)
        else:
            assert value == pytest.approx(radius ** (a + 1) / (a + 1), rel=1e-10)


def test_power_law_integral_validation():
    with pytest.raises(InvalidSpecError):
        vanishing.PowerLawIntegral(GRID, -GRID.r)


@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.5, 1.5, 2.7])
@pytest.mark.parametrize("p", [2.0, 6.0])
def test_estimators_exact_on_powers(alpha, p):
    rep = vanishing.vanishing_report(vanishing.power_function(GRID, alpha), p)
    assert rep.ord_hat == pytest.approx(alpha, abs=1e-10)
    assert rep.Ord_hat == pytest.approx(alpha, abs=1e-10)
    assert rep.ord_conservative == pytest.approx(alpha, abs=1e-10)


def test_shell_masses_sum_to_ball():
    prof = vanishing.local_mass_profile(vanishing.power_function(GRID, 0.3))
    assert np.sum(prof.mass) + prof.ball[-1] - prof.mass[-1] == pytest.approx(
        prof.ball[0], rel=1e-12)
    csv = prof.to_csv()
    assert csv.splitlines()[0] == "k,r_lo,r_hi,mass"
    assert len(csv.splitlines()) == len(prof.k) + 1


def test_mass_profile_depth_checked():
    with pytest.raises(DomainError):
        vanishing.local_mass_profile(vanishing.power_function(GRID, 0.3), k_max=40)


def test_log_oscillation_needs_wide_window():
    # one period of sin(log r) spans about 9 octaves, so the grid must reach far down
    grid = RadialGrid(1e-12, 20.0, 8192)
    u = vanishing.power_function(grid, 0.5, lambda r: 2 + np.sin(np.log(r)))
    rep = vanishing.vanishing_report(u, 2.0)
    # the bounded log-oscillation biases a finite-range slope by O(amplitude / range)
    assert rep.ord_hat == pytest.approx(0.5, abs=1e-2)
    # Ord uses local decay rates, which oscillate; wider windows recover 0.5
    narrow = vanishing.vanishing_report(u, 2.0, width=4).Ord_hat
    wide = vanishing.vanishing_report(u, 2.0, width=9).Ord_hat
    assert narrow < wide <= rep.ord_hat + 1e-2


def test_fit_window_validation():
    u = vanishing.power_function(GRID, 0.5)
    with pytest.raises(InvalidSpecError):
        vanishing.vanishing_report(u, 2.0, fit_window=(5, 6))
    with pytest.raises(InvalidSpecError):
        vanishing.vanishing_report(u, 2.0, fit_window=(0, 99))


def test_carleman_norm_closed_form():
    # ||1_B r^-1 r^(1/2)||_2^2 = 4 pi int_0^1 r^(2-2+1) dr = 2 pi
    u = vanishing.power_function(GRID, 0.5)
    assert vanishing.carleman_norm(u, 2.0, 1) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-10)
    assert math.isinf(vanishing.carleman_norm(u, 2.0, 2))


@pytest.mark.parametrize("delta", [0.25, 0.75, 3.0])
def test_carleman_finiteness_rule(delta):
    # finite iff p(N - beta) < 3
    beta = radial_solver.hardy_beta(delta)
    u = radial_solver.resolvent_apply(1.0, potentials.make_hardy(3, delta),
                                      vanishing.unit_shell_source, GRID)
    for N in (0, 1, 2):
        finite = math.isfinite(vanishing.carleman_norm(u, 2.0, N))
        assert finite == (2.0 * (N - beta) < 3.0)


def test_carleman_detects_slow_divergence():
    # p(N - beta) = 3 exactly: log divergence, must not be reported finite
    u = vanishing.power_function(GRID, 0.5)
    assert vanishing.carleman_value(u, 2.0, 2).divergent


def test_strengthened_norm():
    # weight |V| + 1 with V = (delta/4) r^-2 lowers the finiteness threshold by 2/p
    delta = 8.0
    V = potentials.make_hardy(3, delta)
    u = radial_solver.resolvent_apply(1.0, V, vanishing.unit_shell_source, GRID)
    plain = vanishing.carleman_norm(u, 2.0, 1)
    strong = vanishing.strengthened_carleman_norm(u, 2.0, 1, V)
    assert math.isfinite(strong) and strong > plain
    # beta = 1 for delta = 8: p(N - beta) + 2 = 2 < 3 at N = 1, but 4 at N = 2
    assert math.isinf(vanishing.strengthened_carleman_norm(u, 2.0, 2, V))
    assert math.isinf(vanishing.strengthened_carleman_norm(
        vanishing.power_function(GRID, 0.5), 2.0, 1, potentials.make_hardy(3, 3.0)))


def test_theorem_condition():
    assert vanishing.theorem_condition(0.6, 2.0)
    assert not vanishing.theorem_condition(0.4, 2.0)
    assert not vanishing.theorem_condition(1.0, 2.0)


def test_order_bounds_agree():
    for K, a, n in [(2.0, 0.5, 0.1), (10.0, 0.25, 1e-3), (1.0, 0.125, 0.3)]:
        assert vanishing.order_upper_bound(K, a, n) == pytest.approx(
            vanishing.order_upper_bound_alt(K, a, n), abs=1e-12)
    assert math.isinf(vanishing.order_upper_bound(1.0, 0.5, 0.0))
    with pytest.raises(InvalidSpecError):
        vanishing.order_upper_bound(1.0, 1.5, 1.0)


def test_order_bound_dominates_measured_order():
    u = radial_solver.resolvent_apply(1.0, potentials.make_hardy(3, 3.0),
                                      vanishing.unit_shell_source, GRID)
    ord_hat = vanishing.vanishing_report(u, 2.0).ord_hat
    K = vanishing.carleman_norm(u, 2.0, 1)
    for a in (0.5, 0.25, 0.125):
        assert ord_hat <= vanishing.order_upper_bound(K, a, vanishing.ball_norm(u, 2.0, a))


def test_ball_norm_power():
    u = vanishing.power_function(GRID, 1.0)
    # ||1_B(0,a) r||_2^2 = 4 pi a^5 / 5
    assert vanishing.ball_norm(u, 2.0, 0.5) == pytest.approx(
        math.sqrt(4 * math.pi * 0.5**5 / 5), rel=1e-10)


def test_green_comparator_vanishing_factor():
    x = np.array([[1e-3, 0, 0]])
    y = np.array([[0, 0, 2.0]])
    plain = vanishing.green_comparator(x, y, 1.0, 0.0, 1.0)
    damped = vanishing.green_comparator(x, y, 1.0, 0.5, 1.0)
    assert damped[0] == pytest.approx(plain[0] * math.sqrt(2e-3 / (4 + 1e-6)), rel=1e-12)


def test_green_fit_free_case_condition_small():
    slice_ = radial_solver.green_radial(1.0, potentials.make_hardy(3, 0.0), 2.0, 16,
                                        RadialGrid(n_points=2048))
    fit = vanishing.green_bound_fit(slice_, 1.0, 0.0, samples=100)
    # G is exactly the comparator with c = 1
    assert fit.condition_number == pytest.approx(1.0, abs=2e-3)
    assert fit.c_low == pytest.approx(1.0) and fit.c_up == pytest.approx(1.0)


def test_desingular_residual_algebraic():
    rng = np.random.default_rng(0)
    assert max(vanishing.desingular_residual(d) for d in rng.uniform(0, 10, 50)) < 1e-12
    with pytest.raises(InvalidSpecError):
        vanishing.desingular_residual(-1.0)


def test_discrete_desingular_second_order():
    res = [vanishing.discrete_desingular_residual(3.0, RadialGrid(1e-4, 20.0, n))
           for n in (512, 1024)]
    assert math.log2(res[0] / res[1]) == pytest.approx(2.0, abs=0.05)


def test_coercivity_margin_and_identity():
    rep = vanishing.coercivity_check(1e-4, 0.5954, 0.75, probes=100)
    assert rep.margin >= -1e-8
    assert rep.identity_error < 1e-6
    assert rep.c == pytest.approx(1 + 0.75 - 4 * 0.5954**2)


def test_coercivity_rejects_large_s():
    with pytest.raises(InvalidSpecError):
        vanishing.coercivity_check(1e-4, 0.7, 0.75)
    with pytest.raises(InvalidSpecError):
        vanishing.coercivity_check(0.0, 0.3, 0.75)


def test_lower_bound_threshold_values():
    assert vanishing.lower_bound_threshold(3.0, 0.0) == 0.5
    assert vanishing.lower_bound_threshold(0.75, 0.0) == pytest.approx(
        radial_solver.hardy_beta(0.75))


def test_lower_bound_requires_source_outside_ball():
    with pytest.raises(DomainError):
        vanishing.lower_bound_check(0.75, 0.0, f=lambda r: np.ones_like(r))
    with pytest.raises(InvalidSpecError):
        vanishing.lower_bound_check(0.5, 0.75)


def test_implication_flags_beta_above_measured_order():
    vals = radial_solver.oracle_resolvent(3.0, 1.0, vanishing.unit_shell_source, (1.0, 2.0),
                                          GRID.r)
    u = RadialFunction(GRID, vals)
    rep = vanishing.implication_check(u, None, 0.501, 2.0)
    assert rep["beta_above_ord"] and rep["hypothesis"] and rep["implication_holds"]
    exact = vanishing.implication_check(u, None, 0.499, 2.0)
    assert not exact["beta_above_ord"] and not exact["hypothesis"]
