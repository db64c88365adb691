import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from vanishlab import kernels
from vanishlab.errors import DivergentSeriesError, DomainError, InvalidSpecError


def test_riesz_constant_newtonian():
    # alpha = 2 in d = 3 is the Newtonian kernel 1/(4 pi |x|)
    assert kernels.riesz_constant(3, 2.0) == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-15)


def test_riesz_constant_fourier_identity():
    # c_{d,a} = Gamma((d-a)/2) / (pi^{d/2} 2^a Gamma(a/2))
    for d, a in [(3, 1.0), (3, 0.5), (2, 1.0), (5, 3.0)]:
        expected = math.gamma((d - a) / 2) / (math.pi ** (d / 2) * 2**a * math.gamma(a / 2))
        assert kernels.riesz_constant(d, a) == pytest.approx(expected, rel=1e-14)


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        kernels.TruncatedKernelSpec(3, 3.0, 1)
    with pytest.raises(InvalidSpecError):
        kernels.TruncatedKernelSpec(3, 2.0, -1)
    with pytest.raises(InvalidSpecError):
        kernels.TruncatedKernelSpec(3, 1.0, 1, grad_index=1)
    with pytest.raises(InvalidSpecError):
        kernels.TruncatedKernelSpec(3, 2.0, 1, grad_index=4)


def test_point_errors():
    spec = kernels.TruncatedKernelSpec(N=2)
    with pytest.raises(DomainError):
        kernels.truncated_riesz_eval(spec, [1.0, 0, 0], [1.0, 0, 0])
    with pytest.raises(DomainError):
        kernels.truncated_riesz_eval(spec, [1.0, 0, 0], [0.0, 0, 0])
    with pytest.raises(DivergentSeriesError):
        kernels.truncated_riesz_eval(spec, [2.0, 0, 0], [1.0, 0, 0], method="series")


def test_n0_is_kernel():
    spec = kernels.TruncatedKernelSpec(N=0)
    x, y = np.array([0.3, -0.2, 0.1]), np.array([1.0, 0.5, -0.4])
    assert kernels.truncated_riesz_eval(spec, x, y) == pytest.approx(
        kernels.riesz_eval(spec, x, y), rel=1e-14)


def test_series_against_mpmath_oracle():
    rng = np.random.default_rng(1)
    for N in (1, 3, 6):
        for _ in range(5):
            y = rng.normal(size=3)
            x = rng.normal(size=3)
            x *= 0.4 * np.linalg.norm(y) / np.linalg.norm(x)
            spec = kernels.TruncatedKernelSpec(3, 2.0, N)
            oracle = kernels.truncated_direct_mp(spec, x, y, dps=50)
            assert kernels.truncated_riesz_eval(spec, x, y) == pytest.approx(oracle, rel=1e-11)


def test_gradient_against_finite_difference():
    x, y = np.array([0.2, 0.1, -0.15]), np.array([0.3, -1.0, 0.6])
    h = 1e-5
    for N in (1, 2, 4):
        K = kernels.TruncatedKernelSpec(3, 2.0, N)
        for i in (1, 2, 3):
            e = np.zeros(3)
            e[i - 1] = h
            fd = (kernels.truncated_riesz_eval(K, x + e, y)
                  - kernels.truncated_riesz_eval(K, x - e, y)) / (2 * h)
            G = kernels.TruncatedKernelSpec(3, 2.0, N - 1, grad_index=i)
            assert kernels.truncated_grad_eval(G, x, y) == pytest.approx(fd, rel=1e-6, abs=1e-12)


def test_outside_unit_ratio_uses_direct():
    spec = kernels.TruncatedKernelSpec(N=3)
    x, y = np.array([2.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])
    assert kernels.truncated_riesz_eval(spec, x, y) == pytest.approx(
        kernels.truncated_direct_mp(spec, x, y), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.7), st.floats(0.0, math.pi), st.integers(0, 10))
def test_truncated_bounded_by_sawyer_s1(t, theta, N):
    # |[K]_N| <= C (|x|/|y|)^N K for |x| < |y|; here checked with generous C
    y = np.array([0.0, 0.0, 1.0])
    x = t * np.array([math.sin(theta), 0.0, math.cos(theta)])
    if t == 0.0:
        return
    spec = kernels.TruncatedKernelSpec(N=N)
    val = kernels.truncated_riesz_eval(spec, x, y)
    k = kernels.riesz_eval(kernels.TruncatedKernelSpec(), x, y)
    assert abs(val) <= 1.01 * t**N * k / (1 - t) + 1e-300


def test_neumaier_cumsum_cancellation():
    terms = np.array([1e16, 1.0, -1e16, 1.0])
    assert kernels.neumaier_cumsum(terms)[-1] == 2.0


def test_sawyer_scan_reproducible():
    a = kernels.sawyer_ratio_scan("s1", 4, 2000, seed=3)
    b = kernels.sawyer_ratio_scan("s1", 4, 2000, seed=3, jobs=2)
    assert a.to_dict() == b.to_dict()
    assert a.samples == 2000 and a.N_range == [1, 4]


def test_sawyer_unknown_estimate():
    with pytest.raises(InvalidSpecError):
        kernels.sawyer_ratio_scan("s3", 2, 10, 0)


def test_taylor_remainder_routes_agree():
    rng = np.random.default_rng(5)
    z = 0.45 * np.sqrt(rng.uniform(size=200)) * np.exp(2j * np.pi * rng.uniform(size=200))
    for conj in (False, True):
        a = kernels.taylor_remainder(z, 6, conj=conj, method="series")
        b = kernels.taylor_remainder(z, 6, conj=conj, method="direct")
        assert_allclose(a, b, rtol=1e-9, atol=1e-14)


def test_taylor_remainder_requires_unit_disc():
    with pytest.raises(DivergentSeriesError):
        kernels.taylor_remainder(np.array([1.0 + 0j]), 2)


def test_complex_tail_small_grid():
    rep, by_N = kernels.complex_tail_check(4, 20, 0.1, with_by_N=True)
    assert len(by_N) == 4
    assert math.isfinite(rep.max_normalized_tail)
    assert rep.max_normalized_tail == max(by_N)
