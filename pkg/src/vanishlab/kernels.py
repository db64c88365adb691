"""Riesz kernels, their Taylor-truncated versions and the Sawyer-type bounds.

The kernel ``c_{d,a} |x - y|^{a - d}`` is expanded in the first argument with
the Gegenbauer generating function

    |x - y|^{-2 lam} = |y|^{-2 lam} sum_n t^n C_n^lam(cos theta),

``lam = (d - a) / 2``, ``t = |x| / |y|``.  The degree-``n`` term is a
homogeneous polynomial of degree ``n`` in ``x``, so the Taylor polynomial of
degree ``N - 1`` at ``x = 0`` is the sum of the first ``N`` terms.  That
identity is used on both sides of ``|x| = |y|``: inside the unit ball the
truncated kernel is summed as a convergent tail, outside it the finite
polynomial is subtracted from the kernel with compensated summation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DivergentSeriesError, DomainError, InvalidSpecError

SERIES_SWITCH = 0.75
SERIES_TOL = 1e-17
MAX_SERIES_TERMS = 4000


@dataclass(frozen=True)
class TruncatedKernelSpec:
    """Identifies ``[(-Delta)^{-alpha/2}]_N`` or its ``x_i``-gradient variant.

    ``grad_index`` is 1-based and only allowed for the Newtonian kernel in
    three dimensions (``alpha = d - 1 = 2``).
    """

    d: int = 3
    alpha: float = 2.0
    N: int = 0
    grad_index: int | None = None

    def __post_init__(self):
        if self.d < 1:
            raise InvalidSpecError(f"dimension must be positive, got {self.d}")
        if not (0.0 < self.alpha < self.d):
            raise InvalidSpecError(f"alpha must lie in (0, d) = (0, {self.d}), got {self.alpha}")
        if self.N < 0:
            raise InvalidSpecError(f"truncation order must be >= 0, got {self.N}")
        if self.grad_index is not None:
            if self.alpha != self.d - 1:
                raise InvalidSpecError("gradient kernels require alpha = d - 1")
            if self.d != 3:
                raise InvalidSpecError("gradient kernels are only implemented for d = 3")
            if not 1 <= self.grad_index <= self.d:
                raise InvalidSpecError(f"grad_index must be in 1..{self.d}, got {self.grad_index}")

    @property
    def lam(self) -> float:
        return 0.5 * (self.d - self.alpha)

    @property
    def constant(self) -> float:
        return riesz_constant(self.d, self.alpha)


def riesz_constant(d: int, alpha: float) -> float:
    """Normalisation of the Riesz kernel, ``Gamma((d-a)/2) / (pi^{d/2} 2^a Gamma(a/2))``."""
    if not (0.0 < alpha < d):
        raise InvalidSpecError(f"alpha must lie in (0, d), got {alpha}")
    return math.exp(math.lgamma(0.5 * (d - alpha)) - 0.5 * d * math.log(math.pi)
                    - alpha * math.log(2.0) - math.lgamma(0.5 * alpha))


# ---------------------------------------------------------------------------
# vectorised building blocks


def _as_points(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    x, y = np.broadcast_arrays(x, y)
    return x, y


def _geometry(x, y):
    r = np.linalg.norm(x, axis=-1)
    R = np.linalg.norm(y, axis=-1)
    if np.any(R == 0):
        raise DomainError("y = 0 is not allowed")
    if np.any(np.all(x == y, axis=-1)):
        raise DomainError("coincident points x = y")
    yhat = y / R[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        xhat = np.where(r[:, None] > 0, x / r[:, None], yhat)
    c = np.clip(np.sum(xhat * yhat, axis=-1), -1.0, 1.0)
    return r, R, xhat, yhat, c


def gegenbauer_table(n_max: int, lam: float, c) -> np.ndarray:
    """``C_n^lam(c)`` for ``n = 0..n_max`` by the three-term recurrence; shape ``(n_max+1, m)``."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    out = np.empty((n_max + 1,) + c.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * lam * c
    for n in range(2, n_max + 1):
        out[n] = (2.0 * c * (n + lam - 1.0) * out[n - 1] - (n + 2.0 * lam - 2.0) * out[n - 2]) / n
    return out


def _gegenbauer_at_one(n: np.ndarray, lam: float) -> np.ndarray:
    # C_n^lam(1) = Gamma(n + 2 lam) / (n! Gamma(2 lam)) bounds |C_n^lam| on [-1, 1]
    return np.exp(gammaln(n + 2.0 * lam) - gammaln(n + 1.0) - gammaln(2.0 * lam))


def _series_cutoff(bound, n_start: int, t_max: float, tol: float) -> int:
    """Smallest ``M`` with ``sum_{n > M} bound(n) t^n <= tol * bound(n_start) t^n_start``.

    ``bound`` grows at most polynomially, so ``bound(n+1)/bound(n)`` is
    nonincreasing for large ``n`` and the remainder after ``M`` is dominated by
    a geometric series with the ratio at ``M``.
    """
    if t_max <= 0.0:
        return n_start
    log_t = math.log(t_max)
    ref = math.log(bound(n_start)) + n_start * log_t
    for M in range(n_start, MAX_SERIES_TERMS):
        ratio = t_max * bound(M + 2) / bound(M + 1)
        if ratio >= 1.0:
            continue
        log_rem = math.log(bound(M + 1)) + (M + 1) * log_t - math.log1p(-ratio)
        if log_rem - ref <= math.log(tol):
            return M
    raise ConvergenceError(
        f"series with ratio {t_max:.6g} needs more than {MAX_SERIES_TERMS} terms"
    )


def neumaier_cumsum(terms: np.ndarray) -> np.ndarray:
    """Compensated running sums along axis 0 (Neumaier's variant of Kahan)."""
    out = np.empty_like(terms)
    total = np.zeros_like(terms[0])
    comp = np.zeros_like(terms[0])
    for k in range(terms.shape[0]):
        t = total + terms[k]
        big = np.abs(total) >= np.abs(terms[k])
        comp += np.where(big, (total - t) + terms[k], (terms[k] - t) + total)
        total = t
        out[k] = total + comp
    return out


def _taylor_terms(lam, const, r, R, c, n_max):
    """Degree-``n`` Taylor terms of the kernel at ``x = 0``, ``n = 0..n_max``."""
    C = gegenbauer_table(n_max, lam, c)
    t = r / R
    n = np.arange(n_max + 1)[:, None]
    with np.errstate(under="ignore"):
        powers = np.where(n == 0, 1.0, t[None, :] ** n)
    return const * R[None, :] ** (-2.0 * lam) * powers * C


def _taylor_grad_terms(lam, const, r, R, xhat, yhat, c, n_max):
    """Gradients in ``x`` of the Taylor terms; shape ``(n_max+1, m, 3)``.

    ``grad(|x|^n C_n(xhat.yhat)) = |x|^{n-1} [(n C_n - c C_n') xhat + C_n' yhat]``
    with ``C_n' = 2 lam C_{n-1}^{lam+1}``.
    """
    C = gegenbauer_table(n_max, lam, c)
    dC = np.zeros_like(C)
    if n_max >= 1:
        dC[1:] = 2.0 * lam * gegenbauer_table(n_max - 1, lam + 1.0, c)
    n = np.arange(n_max + 1)[:, None]
    t = r / R
    with np.errstate(under="ignore"):
        tpow = np.where(n >= 2, t[None, :] ** np.maximum(n - 1, 0), 1.0)
    radial = (n * C - c[None, :] * dC)[..., None] * xhat[None, :, :]
    tangential = dC[..., None] * yhat[None, :, :]
    scale = const * R[None, :] ** (-2.0 * lam - 1.0) * tpow
    return scale[..., None] * (radial + tangential)


def _term_bound(lam):
    return lambda n: float(_gegenbauer_at_one(np.asarray(n, dtype=float), lam))


def _grad_term_bound(lam):
    def bound(n):
        n = float(n)
        cn = float(_gegenbauer_at_one(np.asarray(n), lam))
        dcn = 2.0 * lam * float(_gegenbauer_at_one(np.asarray(max(n - 1.0, 0.0)), lam + 1.0))
        return max(n * cn + 2.0 * dcn, 1.0)
    return bound


def truncated_all(spec: TruncatedKernelSpec, x, y, N_max: int, q: float = SERIES_SWITCH):
    """``[K]_N(x, y)`` for ``N = 0..N_max`` at once; shape ``(N_max+1, m)``.

    For the gradient variant the result has shape ``(N_max+1, m, 3)`` and holds
    all three components.  Points with ``|x| < q |y|`` use the series tail, the
    rest compensated direct subtraction.
    """
    x, y = _as_points(x, y)
    r, R, xhat, yhat, c = _geometry(x, y)
    t = r / R
    lam, const = spec.lam, spec.constant
    grad = spec.grad_index is not None
    shape = (N_max + 1, r.size, 3) if grad else (N_max + 1, r.size)
    out = np.empty(shape)

    series = t < q
    if np.any(series):
        idx = np.flatnonzero(series)
        t_max = float(t[idx].max())
        if grad:
            M = _series_cutoff(_grad_term_bound(lam), N_max + 1, t_max, SERIES_TOL)
            terms = _taylor_grad_terms(lam, const, r[idx], R[idx], xhat[idx], yhat[idx], c[idx], M)
            # [grad K]_N drops gradients of terms 1..N; keep n >= N + 1
            tails = np.cumsum(terms[::-1], axis=0)[::-1]
            out[:, idx] = tails[1:N_max + 2]
        else:
            M = _series_cutoff(_term_bound(lam), N_max, t_max, SERIES_TOL)
            terms = _taylor_terms(lam, const, r[idx], R[idx], c[idx], M)
            tails = np.cumsum(terms[::-1], axis=0)[::-1]
            out[:, idx] = tails[:N_max + 1]

    direct = ~series
    if np.any(direct):
        idx = np.flatnonzero(direct)
        diff = x[idx] - y[idx]
        dist = np.linalg.norm(diff, axis=-1)
        if grad:
            kernel = 2.0 * lam * const * (-diff) * dist[:, None] ** (-2.0 * lam - 2.0)
            terms = _taylor_grad_terms(lam, const, r[idx], R[idx], xhat[idx], yhat[idx], c[idx],
                                       N_max)
            stack = np.concatenate([kernel[None], -terms[1:]], axis=0)
        else:
            kernel = const * dist ** (-2.0 * lam)
            terms = _taylor_terms(lam, const, r[idx], R[idx], c[idx], max(N_max - 1, 0))
            stack = np.concatenate([kernel[None], -terms[:N_max]], axis=0)
        out[:, idx] = neumaier_cumsum(stack)
    return out


# ---------------------------------------------------------------------------
# point evaluators


def _check_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be points of the same dimension")
    if not np.any(y):
        raise DomainError("y = 0 is not allowed")
    if np.array_equal(x, y):
        raise DomainError("coincident points x = y")
    return x, y


def riesz_eval(spec: TruncatedKernelSpec, x, y) -> float:
    """``c_{d,alpha} |x - y|^{alpha - d}``."""
    if spec.N != 0 or spec.grad_index is not None:
        raise InvalidSpecError("riesz_eval takes an untruncated, non-gradient spec")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.array_equal(x, y):
        raise DomainError("coincident points x = y")
    return spec.constant * float(np.linalg.norm(x - y)) ** (spec.alpha - spec.d)


def _mp_direct(spec: TruncatedKernelSpec, x, y, dps: int) -> float:
    """Direct subtraction carried out in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        xm = [mpmath.mpf(v) for v in x]
        ym = [mpmath.mpf(v) for v in y]
        r = mpmath.sqrt(mpmath.fsum(v * v for v in xm))
        R = mpmath.sqrt(mpmath.fsum(v * v for v in ym))
        lam = mpmath.mpf(spec.d - spec.alpha) / 2
        const = mpmath.gamma(lam) / (mpmath.pi ** (mpmath.mpf(spec.d) / 2)
                                     * mpmath.mpf(2) ** spec.alpha
                                     * mpmath.gamma(mpmath.mpf(spec.alpha) / 2))
        c = mpmath.fsum(a * b for a, b in zip(xm, ym)) / (r * R) if r > 0 else mpmath.mpf(1)
        dist = mpmath.sqrt(mpmath.fsum((a - b) ** 2 for a, b in zip(xm, ym)))
        N = spec.N
        if spec.grad_index is None:
            C = [mpmath.mpf(1), 2 * lam * c]
            for n in range(2, N + 1):
                C.append((2 * c * (n + lam - 1) * C[n - 1] - (n + 2 * lam - 2) * C[n - 2]) / n)
            poly = mpmath.fsum(r ** n * C[n] / R ** (n + 2 * lam) for n in range(N))
            return float(const * (dist ** (-2 * lam) - poly))
        i = spec.grad_index - 1
        xhat = [v / r for v in xm] if r > 0 else [v / R for v in ym]
        yhat = [v / R for v in ym]
        C = [mpmath.mpf(1), c]
        dC = [mpmath.mpf(0), mpmath.mpf(1)]
        for n in range(2, N + 2):
            C.append(((2 * n - 1) * c * C[n - 1] - (n - 1) * C[n - 2]) / n)
            dC.append(dC[n - 2] + (2 * n - 1) * C[n - 1])
        poly = mpmath.mpf(0)
        for n in range(1, N + 1):
            rp = r ** (n - 1) if n > 1 else mpmath.mpf(1)
            g = rp * ((n * C[n] - c * dC[n]) * xhat[i] + dC[n] * yhat[i])
            poly += g / R ** (n + 1)
        kernel = (ym[i] - xm[i]) / dist ** 3
        return float(const * (kernel - poly))


def truncated_riesz_eval(spec: TruncatedKernelSpec, x, y, method: str = "auto",
                         q: float = SERIES_SWITCH) -> float:
    """Kernel minus its ``(N-1)``-degree Taylor polynomial in ``x`` at the origin.

    ``method`` is ``"series"``, ``"direct"`` or ``"auto"`` (series when
    ``|x| < q |y|``).  The direct route switches to extended precision when the
    cancellation would cost more than six digits.
    """
    if spec.grad_index is not None:
        return truncated_grad_eval(spec, x, y, method=method, q=q)
    return _truncated_point(spec, x, y, method, q)


def truncated_grad_eval(spec: TruncatedKernelSpec, x, y, method: str = "auto",
                        q: float = SERIES_SWITCH) -> float:
    """``d/dx_i`` of the kernel minus the ``(N-1)``-degree Taylor polynomial of that derivative."""
    if spec.grad_index is None:
        raise InvalidSpecError("truncated_grad_eval needs grad_index")
    return _truncated_point(spec, x, y, method, q)


def _truncated_point(spec, x, y, method, q):
    x, y = _check_pair(x, y)
    r = float(np.linalg.norm(x))
    R = float(np.linalg.norm(y))
    t = r / R
    if spec.N >= 1 and r == 0.0:
        return 0.0
    if method == "auto":
        method = "series" if t < q else "direct"
    if method == "series":
        if t >= 1.0:
            raise DivergentSeriesError(f"series route needs |x| < |y|, got |x|/|y| = {t:.6g}")
        vals = truncated_all(spec, x, y, spec.N, q=1.0)
    elif method == "direct":
        loss = spec.N * math.log10(1.0 / t) if 0.0 < t < 1.0 else 0.0
        if loss > 6.0:
            return _mp_direct(spec, x, y, dps=int(30 + loss))
        vals = truncated_all(spec, x, y, spec.N, q=0.0)
    else:
        raise ValueError(f"unknown method {method!r}")
    v = vals[spec.N, 0]
    if spec.grad_index is not None:
        v = v[spec.grad_index - 1]
    return float(v)


def truncated_direct_mp(spec: TruncatedKernelSpec, x, y, dps: int = 60) -> float:
    """High-precision direct subtraction; an oracle for the series route."""
    x, y = _check_pair(x, y)
    return _mp_direct(spec, x, y, dps)


# ---------------------------------------------------------------------------
# Sawyer-type scans


@dataclass
class SawyerReport:
    estimate_id: str
    samples: int
    N_range: list
    max_ratio: float
    ratio_by_N: list
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SawyerDiagnostics:
    """Per-regime maxima that the report itself does not carry."""

    inner_by_N: list = field(default_factory=list)
    outer_by_N: list = field(default_factory=list)
    worst_t_by_N: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SamplingLaw:
    y_radius: tuple = (1e-3, 1.0)
    ratio: tuple = (1e-3, 1e3)


def _unit_vectors(rng, m):
    v = rng.standard_normal((m, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def draw_pairs(rng, m: int, law: SamplingLaw = SamplingLaw(), max_redraws: int = 100):
    """Uniform directions, log-uniform ``|y|`` and log-uniform ``|x|/|y|``."""
    lo_y, hi_y = np.log(law.y_radius)
    lo_t, hi_t = np.log(law.ratio)
    x = np.empty((m, 3))
    y = np.empty((m, 3))
    todo = np.arange(m)
    for _ in range(max_redraws):
        k = todo.size
        Ry = np.exp(rng.uniform(lo_y, hi_y, k))
        t = np.exp(rng.uniform(lo_t, hi_t, k))
        y[todo] = _unit_vectors(rng, k) * Ry[:, None]
        x[todo] = _unit_vectors(rng, k) * (t * Ry)[:, None]
        bad = np.all(x[todo] == y[todo], axis=1) | ~np.any(y[todo], axis=1)
        todo = todo[bad]
        if todo.size == 0:
            return x, y
    raise ConvergenceError(f"{todo.size} samples still degenerate after {max_redraws} redraws")


def sawyer_ratios(estimate_id: str, x, y, N_max: int, q: float = SERIES_SWITCH) -> np.ndarray:
    """Normalised ratios for ``N = 1..N_max``; shape ``(N_max, m)``.

    S1: ``|[K]_N| / (t^N K)`` with ``K`` the Newtonian kernel.
    S2: ``max_i |[d_i K]_N| / (N t^N c_{3,1}|x-y|^{-2})``.
    """
    x, y = _as_points(x, y)
    t = np.linalg.norm(x, axis=1) / np.linalg.norm(y, axis=1)
    dist = np.linalg.norm(x - y, axis=1)
    Ns = np.arange(1, N_max + 1)[:, None]
    with np.errstate(over="ignore", under="ignore"):
        tN = t[None, :] ** Ns
    if estimate_id.upper() == "S1":
        spec = TruncatedKernelSpec(3, 2.0, N_max)
        vals = np.abs(truncated_all(spec, x, y, N_max, q)[1:])
        comparator = riesz_constant(3, 2.0) / dist
        return vals / (tN * comparator[None, :])
    if estimate_id.upper() == "S2":
        spec = TruncatedKernelSpec(3, 2.0, N_max, grad_index=1)
        vals = np.abs(truncated_all(spec, x, y, N_max, q)[1:]).max(axis=-1)
        comparator = riesz_constant(3, 1.0) / dist**2
        return vals / (Ns * tN * comparator[None, :])
    raise InvalidSpecError(f"estimate_id must be S1 or S2, got {estimate_id!r}")


def sawyer_ratio_scan(estimate_id: str, N_max: int, samples: int, seed: int,
                      law: SamplingLaw = SamplingLaw(), shard_size: int = 10_000,
                      jobs: int = 1, q: float = SERIES_SWITCH, with_diagnostics: bool = False):
    """Empirical constants of the Sawyer bounds over seeded random samples.

    Shards draw from independent child seeds and are merged in shard order,
    so the report depends only on ``seed`` (not on ``jobs``).
    """
    if N_max < 1:
        raise InvalidSpecError("N_max must be >= 1")
    if samples < 1:
        raise InvalidSpecError("samples must be >= 1")
    estimate_id = estimate_id.upper()
    if estimate_id not in ("S1", "S2"):
        raise InvalidSpecError(f"estimate_id must be S1 or S2, got {estimate_id!r}")
    sizes = [shard_size] * (samples // shard_size)
    if samples % shard_size:
        sizes.append(samples % shard_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(k):
        rng = np.random.default_rng(children[k])
        x, y = draw_pairs(rng, sizes[k], law)
        ratios = sawyer_ratios(estimate_id, x, y, N_max, q)
        t = np.linalg.norm(x, axis=1) / np.linalg.norm(y, axis=1)
        inner = t < 1.0
        neg = np.full(ratios.shape[0], -np.inf)
        inner_max = ratios[:, inner].max(axis=1) if inner.any() else neg
        outer_max = ratios[:, ~inner].max(axis=1) if (~inner).any() else neg
        arg = ratios.argmax(axis=1)
        return ratios.max(axis=1), inner_max, outer_max, t[arg]

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]

    maxes = np.stack([p[0] for p in parts])
    best_shard = maxes.argmax(axis=0)
    by_N = maxes.max(axis=0)
    if not np.all(np.isfinite(by_N)) or np.any(by_N <= 0):
        raise ConvergenceError(f"non-finite or nonpositive ratios in {estimate_id} scan")
    report = SawyerReport(
        estimate_id=estimate_id,
        samples=int(samples),
        N_range=[1, int(N_max)],
        max_ratio=float(by_N.max()),
        ratio_by_N=[[int(n), float(v)] for n, v in zip(range(1, N_max + 1), by_N)],
        seed=int(seed),
    )
    if not with_diagnostics:
        return report
    diag = SawyerDiagnostics(
        inner_by_N=[float(v) for v in np.stack([p[1] for p in parts]).max(axis=0)],
        outer_by_N=[float(v) for v in np.stack([p[2] for p in parts]).max(axis=0)],
        worst_t_by_N=[float(parts[best_shard[k]][3][k]) for k in range(N_max)],
    )
    return report, diag


# ---------------------------------------------------------------------------
# complex-plane tail bounds


@dataclass
class ComplexTailReport:
    N_range: list
    grid_resolution: int
    max_normalized_tail: float
    margin: float

    def to_dict(self) -> dict:
        return asdict(self)


def _binomial_series(power: float, n_max: int) -> np.ndarray:
    """Coefficients of ``(1 - z)^{-power}``: ``(power)_n / n!``."""
    a = np.empty(n_max + 1)
    a[0] = 1.0
    for n in range(1, n_max + 1):
        a[n] = a[n - 1] * (power + n - 1) / n
    return a


def _order_blocks(z: np.ndarray, k_max: int, conj: bool) -> np.ndarray:
    """Homogeneous parts ``S_k(z) = 1/2 sum_{n+m=k} c_{n,m} z^n zbar^m``, ``k = 0..k_max``.

    ``c_{n,m}`` are the products of the binomial coefficients of
    ``(1-z)^{-3/2}`` and ``(1-zbar)^{-1/2}`` (for ``d_z``) or the swapped pair
    (for ``d_zbar``).
    """
    a = _binomial_series(1.5, k_max)
    b = _binomial_series(0.5, k_max)
    if conj:
        a, b = b, a
    zb = np.conj(z)
    zp = np.ones((k_max + 1,) + z.shape, dtype=complex)
    zbp = np.ones_like(zp)
    for k in range(1, k_max + 1):
        zp[k] = zp[k - 1] * z
        zbp[k] = zbp[k - 1] * zb
    S = np.empty((k_max + 1,) + z.shape, dtype=complex)
    for k in range(k_max + 1):
        n = np.arange(k + 1)
        S[k] = np.tensordot(a[n] * b[k - n], zp[n] * zbp[k - n], axes=(0, 0))
    return 0.5 * S


def d_inverse_distance(z, conj: bool = False):
    """``d_z |1-z|^{-1}`` (or ``d_zbar``) in closed form."""
    z = np.asarray(z, dtype=complex)
    if conj:
        return 0.5 * (1 - z) ** -0.5 * (1 - np.conj(z)) ** -1.5
    return 0.5 * (1 - z) ** -1.5 * (1 - np.conj(z)) ** -0.5


def _series_order(rho: float, N: int, tol: float, cap: int) -> int:
    # sum_{n+m=k} |c_{n,m}| = k + 1, so the tail after K is <= 1/2 sum_{k>K} (k+1) rho^k
    if rho == 0.0:
        return N
    for K in range(N, cap + 1):
        tail = 0.5 * (K + 2) * rho ** (K + 1) / (1.0 - rho) ** 2
        if tail <= tol * rho**N:
            return K
    return -1


def taylor_remainder(z, N_max: int, conj: bool = False, method: str = "auto",
                     series_radius: float = 0.5, tol: float = 1e-15,
                     max_order: int = 4000) -> np.ndarray:
    """Remainders ``f - T^N f`` of ``f = d_z |1-z|^{-1}`` for ``N = 1..N_max``.

    ``T^N`` keeps the monomials ``z^n zbar^m`` with ``n + m <= N - 1``.  Points
    inside ``series_radius`` (or all points for ``method="series"``) sum the
    double series from order ``N`` with a certified cutoff; the others subtract
    the polynomial from the closed form with compensated summation.
    Returns shape ``(N_max, m)``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) >= 1.0):
        raise DivergentSeriesError("the expansion of |1-z|^{-1} needs |z| < 1")
    out = np.empty((N_max,) + z.shape, dtype=complex)
    rho = np.abs(z)
    if method == "series":
        use_series = np.ones(z.shape, bool)
    elif method == "direct":
        use_series = np.zeros(z.shape, bool)
    else:
        use_series = rho <= series_radius
    if np.any(use_series):
        zs = z[use_series]
        r_top = float(rho[use_series].max())
        K = _series_order(r_top, N_max, tol, max_order)
        if K < 0:
            bad = zs[np.argmax(np.abs(zs))]
            raise ConvergenceError(
                f"double series at z = {bad:.6g} cannot be certified to {tol:g} "
                f"within {max_order} orders"
            )
        S = _order_blocks(zs, K, conj)
        tails = np.cumsum(S[::-1], axis=0)[::-1]
        out[:, use_series] = tails[1:N_max + 1]
    if np.any(~use_series):
        zd = z[~use_series]
        S = _order_blocks(zd, N_max - 1, conj)
        stack = np.concatenate([d_inverse_distance(zd, conj)[None], -S], axis=0)
        re = neumaier_cumsum(stack.real)
        im = neumaier_cumsum(stack.imag)
        out[:, ~use_series] = (re + 1j * im)[1:N_max + 1]
    return out


def complex_tail_check(N_max: int, grid_res: int, margin: float,
                       series_radius: float = 0.5, with_by_N: bool = False):
    """Sup over a polar grid in ``|z| <= 1 - margin`` of ``|R_N| |1-z|^2 / (N |z|^N)``."""
    if not (0.0 < margin < 1.0):
        raise InvalidSpecError(f"margin must lie in (0, 1), got {margin}")
    if N_max < 1 or grid_res < 1:
        raise InvalidSpecError("N_max and grid_res must be positive")
    radii = (1.0 - margin) * np.arange(1, grid_res + 1) / grid_res
    angles = 2.0 * np.pi * np.arange(grid_res) / grid_res
    z = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    rho = np.abs(z)
    Ns = np.arange(1, N_max + 1)[:, None]
    by_N = np.zeros(N_max)
    for conj in (False, True):
        R = taylor_remainder(z, N_max, conj=conj, series_radius=series_radius)
        norm = np.abs(R) * np.abs(1 - z)[None, :] ** 2 / (Ns * rho[None, :] ** Ns)
        if not np.all(np.isfinite(norm)):
            raise ConvergenceError("non-finite normalised tail")
        by_N = np.maximum(by_N, norm.max(axis=1))
    report = ComplexTailReport(
        N_range=[1, int(N_max)],
        grid_resolution=int(grid_res),
        max_normalized_tail=float(by_N.max()),
        margin=float(margin),
    )
    if with_by_N:
        return report, [float(v) for v in by_N]
    return report
