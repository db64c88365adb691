import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import eigh

from vanishlab import fem, potentials
from vanishlab.errors import DomainError, InvalidSpecError
from vanishlab.grid import RadialGrid


def test_hardy_values_and_coefficients():
    V = potentials.make_hardy(3, 0.75)
    assert V.hardy_coefficient == pytest.approx(0.1875)
    assert V.inverse_square_coefficient == pytest.approx(0.1875)
    assert V.singular_exponent == 2.0
    assert V.is_pure_hardy
    assert_allclose(V([0.5, 2.0]), [0.75, 0.75 / 16])
    with pytest.raises(DomainError):
        V(0.0)


def test_regularized_is_bounded():
    V = potentials.catalog("hardy_regularized", delta=1.0, epsilon=1e-2)
    assert V.singular_exponent == 0.0
    assert float(V(0.0)) == pytest.approx(25.0)


def test_truncation():
    V = potentials.make_hardy(3, 1.0).truncated(0.1, 1.0)
    assert_allclose(V([0.05, 0.5, 2.0]), [0.0, 1.0, 0.0])
    assert V.inverse_square_coefficient == 0.0
    assert not V.is_pure_hardy


def test_catalog_validation():
    for name in potentials.CATALOG:
        assert isinstance(potentials.catalog(name), potentials.Potential)
    with pytest.raises(InvalidSpecError):
        potentials.catalog("yukawa")
    with pytest.raises(InvalidSpecError):
        potentials.catalog("hardy", delta=1.0, colour="red")
    with pytest.raises(InvalidSpecError):
        potentials.make_hardy(3, -0.1)
    with pytest.raises(InvalidSpecError):
        potentials.PowerProfile(1.0, -2.5)


def test_composite_declares_form_bound():
    V = potentials.catalog("composite", delta=0.75, c0=0.05)
    assert V.delta0 == pytest.approx(0.2)
    assert V.inverse_square_coefficient == pytest.approx(0.1875 + 0.05)


def test_fem_stiffness_exact_on_linear():
    # <grad u, grad u> with measure r^2 dr for u = r on [1, 2] is int r^2 = 7/3
    r = np.linspace(1.0, 2.0, 11)
    K = fem.stiffness(r)
    assert float(r @ (K @ r)) == pytest.approx(7.0 / 3.0, rel=1e-13)


def test_fem_weighted_mass_quadratic():
    r = np.linspace(0.0, 1.0, 201)
    M = fem.weighted_mass(r, lambda x: x**2)
    # int u^2 r^2 dr for u = 1 is 1/3
    one = np.ones_like(r)
    assert float(one @ (M @ one)) == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_form_bound_bounded_potential_vs_dense_oracle():
    # V = c on the unit ball: the ratio equals a directly assembled dense eigenproblem
    grid = RadialGrid(1e-2, 10.0, 80)
    V = potentials.make_composite(potentials.make_hardy(3, 0.0),
                                  potentials.PowerProfile(2.0, 0.0, 1.0), 0.0, 2.0)
    theta, vec = potentials.form_bound_ratio(V, 1.0, grid)
    r = grid.r
    A = (fem.stiffness(r) + fem.weighted_mass(r, lambda x: x**2)).toarray()[1:-1, 1:-1]
    B = fem.weighted_mass(r, lambda x: np.abs(V(x)) * x**2).toarray()[1:-1, 1:-1]
    assert theta == pytest.approx(eigh(B, A, eigvals_only=True)[-1], rel=1e-10)
    assert vec[0] == 0.0 and vec[-1] == 0.0


def test_form_bound_increases_with_range():
    V = potentials.make_hardy(3, 0.5)
    a = potentials.form_bound_ratio(V, 0.0, RadialGrid.decades(-3, 3, 20))[0]
    b = potentials.form_bound_ratio(V, 0.0, RadialGrid.decades(-5, 5, 20))[0]
    assert a < b < 0.5


def test_form_bound_estimate_report():
    rep = potentials.form_bound_estimate(potentials.make_hardy(3, 0.5), 0.0,
                                         RadialGrid.decades(-3, 3, 20), l_max=2)
    assert len(rep.by_l) == 3
    # higher modes add l(l+1)/r^2 to the denominator
    assert rep.by_l[0] > rep.by_l[1] > rep.by_l[2]
    assert rep.delta_hat == rep.by_l[0]
    with pytest.raises(InvalidSpecError):
        potentials.form_bound_estimate(potentials.make_hardy(3, 0.5), -1.0)


def test_local_form_bound_truncated_hardy():
    V = potentials.make_hardy(3, 0.5).truncated(1e-3, 3.0)
    nu = potentials.local_form_bound(V, 3.0, RadialGrid())
    # restricted potential, so strictly below the global form-bound 0.5
    assert 0.3 < nu < 0.5
    assert potentials.local_form_bound(V, 1e-4, RadialGrid()) == 0.0


def test_subclass_constant_potential():
    V = potentials.make_composite(potentials.make_hardy(3, 0.0),
                                  potentials.PowerProfile(1.0, 0.0), 0.0, 1.0)
    rep = potentials.subclass_report(V, dyadic_depth=4)
    # box of volume 8: ||1||_{3/2} = 8^(2/3) = 4
    assert rep.ld2_norm == pytest.approx(4.0, rel=1e-12)
    assert rep.weak_ld2 == pytest.approx(4.0, rel=1e-3)
    assert rep.morrey_cs == pytest.approx(4.0, rel=1e-12)


def test_subclass_hardy_weak_norm_analytic():
    # |{r^-2/4 > t}| = (4 pi/3)(4t)^(-3/2) while the ball fits in the box
    rep = potentials.subclass_report(potentials.make_hardy(3, 1.0))
    assert math.isinf(rep.ld2_norm)
    assert rep.weak_ld2 == pytest.approx((4 * math.pi / 3) ** (2 / 3) / 4, rel=0.01)
    assert math.isfinite(rep.morrey_cs) and math.isfinite(rep.cww_value)


def test_subclass_morrey_scale_invariant_value():
    # centred cube: side^2 (mean V^s)^(1/s) equals 4 I^(1/s), I the corner-cube integral
    rep = potentials.subclass_report(potentials.make_hardy(3, 1.0), s=1.25)
    assert rep.morrey_cs == pytest.approx(4 * 0.67566556, rel=0.02)
