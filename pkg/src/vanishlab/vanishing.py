"""Orders of vanishing at the origin, Carleman-weighted norms and related bounds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fem
from .discrete_ops import hardy_probes, radial_laplacian
from .errors import DomainError, InvalidSpecError
from .grid import RadialFunction, RadialGrid
from .potentials import PowerProfile, make_composite, make_hardy
from .radial_solver import GreenSlice, hardy_beta, solve_mode

CORE_FIT_NODES = 8
DIVERGENCE_SHELLS = 6


# ---------------------------------------------------------------------------
# power-law exact radial quadrature


class PowerLawIntegral:
    """Cumulative ``int_0^r g(rho) drho`` for nodal samples of ``g >= 0``.

    Inside each cell ``g`` is interpolated linearly in ``log``-``log``
    coordinates and integrated in closed form, which is exact for power laws.
    Below ``r_min`` the first nodes are extrapolated as a power law; if that
    power is not integrable the core is infinite.
    """

    def __init__(self, grid: RadialGrid, g):
        g = np.asarray(g, dtype=float)
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise InvalidSpecError("integrand must be finite and nonnegative")
        self.grid = grid
        self.G = g * grid.r  # integrand in s = log r
        s, h, G = grid.s, grid.h, self.G
        pos = (G[:-1] > 0) & (G[1:] > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(pos, np.log(G[1:] / np.where(pos, G[:-1], 1.0)) / h, 0.0)
        self.alpha = alpha
        cell = np.where(pos, self._expo(G[:-1], alpha, h), 0.5 * h * (G[:-1] + G[1:]))
        self.core, self.core_alpha = self._core(s, G)
        self.cum = self.core + np.concatenate([[0.0], np.cumsum(cell)])

    @staticmethod
    def _expo(G0, alpha, t):
        small = np.abs(alpha * t) < 1e-8
        with np.errstate(over="ignore", invalid="ignore"):
            val = G0 * np.expm1(alpha * t) / np.where(small, 1.0, alpha)
        return np.where(small, G0 * t * (1.0 + 0.5 * alpha * t), val)

    @staticmethod
    def _core(s, G):
        k = min(CORE_FIT_NODES, len(G))
        head = G[:k]
        if np.all(head == 0):
            return 0.0, math.inf
        if np.any(head <= 0):
            return 0.0, math.nan
        alpha = np.polyfit(s[:k] - s[0], np.log(head), 1)[0]
        if alpha <= 1e-3:
            return math.inf, float(alpha)
        return float(G[0] / alpha), float(alpha)

    def __call__(self, radius) -> np.ndarray:
        """``int_0^radius g``; radii below ``r_min`` use the core extrapolation."""
        radius = np.atleast_1d(np.asarray(radius, dtype=float))
        s = np.log(radius)
        grid = self.grid
        if np.any(radius > grid.r_max * (1 + 1e-12)):
            raise DomainError("radius beyond the grid")
        j = np.clip(((s - grid.s[0]) / grid.h).astype(int), 0, grid.n_points - 2)
        t = np.clip(s - grid.s[j], 0.0, grid.h)
        G0, G1 = self.G[j], self.G[j + 1]
        pos = (G0 > 0) & (G1 > 0)
        lin = G0 * t + 0.5 * (G1 - G0) / grid.h * t**2
        partial = np.where(pos, self._expo(G0, self.alpha[j], t), lin)
        out = self.cum[j] + partial
        below = s < grid.s[0]
        if np.any(below):
            if math.isinf(self.core):
                out[below] = math.inf
            elif self.core == 0.0:
                out[below] = 0.0
            else:
                out[below] = self.core * np.exp(self.core_alpha * (s[below] - grid.s[0]))
        return out


# ---------------------------------------------------------------------------
# shell masses and slope estimators


@dataclass
class ShellProfile:
    """Dyadic shell masses ``m_k = int_{2^-k-1 < |x| < 2^-k} |u|^p`` and ball masses."""

    p: float
    k: np.ndarray
    r_lo: np.ndarray
    r_hi: np.ndarray
    mass: np.ndarray
    ball: np.ndarray

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "r_lo", "r_hi", "mass"])
        for row in zip(self.k, self.r_lo, self.r_hi, self.mass):
            writer.writerow([int(row[0])] + [f"{v:.17g}" for v in row[1:]])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _values(u):
    if isinstance(u, RadialFunction):
        return u.grid, u.values
    raise InvalidSpecError("expected a RadialFunction")


def local_mass_profile(u: RadialFunction, p: float = 2.0, k_max: int | None = None
                       ) -> ShellProfile:
    """Shell masses with the ``4 pi r^2`` measure for ``k = 0..k_max``."""
    grid, vals = _values(u)
    if p <= 0:
        raise InvalidSpecError(f"p must be positive, got {p}")
    deepest = int(math.floor(-math.log2(grid.r_min))) - 1
    if k_max is None:
        k_max = deepest
    if 2.0 ** (-k_max - 1) < grid.r_min * (1 - 1e-12):
        raise DomainError(f"k_max={k_max} needs r_min <= 2^-{k_max + 1}; grid has "
                          f"r_min={grid.r_min}")
    integral = PowerLawIntegral(grid, 4.0 * math.pi * grid.r**2 * np.abs(vals) ** p)
    k = np.arange(k_max + 1)
    r_hi = 2.0 ** (-k)
    r_lo = 2.0 ** (-k - 1.0)
    ball_hi = integral(r_hi)
    ball_lo = integral(r_lo)
    return ShellProfile(float(p), k, r_lo, r_hi, np.maximum(ball_hi - ball_lo, 0.0), ball_hi)


def _windowed_slopes(x, y, width):
    out = []
    for i in range(len(x) - width + 1):
        out.append(np.polyfit(x[i:i + width], y[i:i + width], 1)[0])
    return np.array(out)


def _window(profile: ShellProfile, fit_window):
    lo, hi = fit_window if fit_window is not None else (4, int(profile.k[-1]))
    if not 0 <= lo < hi <= profile.k[-1]:
        raise InvalidSpecError(f"fit window {fit_window} outside shells 0..{profile.k[-1]}")
    if hi - lo + 1 < 4:
        raise InvalidSpecError("fit window needs at least 4 shells")
    return lo, hi


@dataclass
class OrdEstimate:
    value: float
    conservative: float
    slope: float
    residual: float


def estimate_ord(profile: ShellProfile, p: float | None = None, fit_window=None,
                 width: int = 4) -> OrdEstimate:
    """``(slope - 3)/p`` from ``log2`` ball mass against ``log2 r``.

    ``value`` uses one least-squares fit over the window; ``conservative`` the
    smallest slope over sliding sub-windows of ``width`` radii.
    """
    p = profile.p if p is None else p
    lo, hi = _window(profile, fit_window)
    ball = profile.ball[lo:hi + 1]
    if np.all(ball == 0):
        return OrdEstimate(math.inf, math.inf, math.inf, 0.0)
    if np.any(ball <= 0) or not np.all(np.isfinite(ball)):
        raise DomainError("ball masses must be positive and finite in the fit window")
    x = -profile.k[lo:hi + 1].astype(float)
    y = np.log2(ball)
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    slope = float(coef[0])
    resid = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    cons = float(_windowed_slopes(x, y, min(width, len(x))).min())
    return OrdEstimate((slope - 3.0) / p, (cons - 3.0) / p, slope, resid)


def estimate_Ord(profile: ShellProfile, p: float | None = None, fit_window=None,
                 width: int = 4) -> float:
    """``(r - 3)/p`` with ``r`` the least decay rate of shell masses over sliding windows.

    ``r`` plays the role of ``liminf_k -log2(m_k)/k``: the largest ``s1`` for
    which ``sum_k 2^{k s1} m_k`` still converges geometrically.
    """
    p = profile.p if p is None else p
    lo, hi = _window(profile, fit_window)
    m = profile.mass[lo:hi + 1]
    if np.all(m == 0):
        return math.inf
    if np.any(m <= 0):
        raise DomainError("shell masses must be positive in the fit window")
    x = -profile.k[lo:hi + 1].astype(float)
    rates = _windowed_slopes(x, np.log2(m), min(width, len(x)))
    return float((rates.min() - 3.0) / p)


@dataclass
class VanishingReport:
    p: float
    radii: list
    shell_masses: list
    ord_hat: float
    Ord_hat: float
    fit_window: list
    residuals: float
    ord_conservative: float = math.nan
    gap: float = math.nan
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def vanishing_report(u: RadialFunction, p: float = 2.0, k_max: int | None = None,
                     fit_window=None, width: int = 4, **meta) -> VanishingReport:
    profile = local_mass_profile(u, p, k_max)
    window = _window(profile, fit_window)
    est = estimate_ord(profile, p, window, width)
    big = estimate_Ord(profile, p, window, width)
    return VanishingReport(p=float(p), radii=profile.r_hi.tolist(),
                           shell_masses=profile.mass.tolist(), ord_hat=est.value, Ord_hat=big,
                           fit_window=list(window), residuals=est.residual,
                           ord_conservative=est.conservative, gap=est.value - big, meta=meta)


def power_function(grid: RadialGrid, alpha: float, modulation=None) -> RadialFunction:
    """``r^alpha`` (optionally times ``modulation(r)``) sampled on ``grid``."""
    vals = grid.r**alpha
    if modulation is not None:
        vals = vals * modulation(grid.r)
    return RadialFunction(grid, vals, 0, {"alpha": alpha})


# ---------------------------------------------------------------------------
# Carleman-weighted norms


@dataclass
class CarlemanValue:
    value: float
    divergent: bool
    shell_contributions: list
    core_exponent: float


def carleman_value(u: RadialFunction, p: float, N: int, radius: float = 1.0,
                   weight=None) -> CarlemanValue:
    """``(int_{|x|<radius} |x|^{-Np} w |u|^p)^{1/p}`` with divergence detection.

    The integral is flagged divergent when the shell contributions grow over
    the innermost ``DIVERGENCE_SHELLS`` resolved dyadic shells, or when the
    power-law extrapolation below ``r_min`` is not integrable.
    """
    grid, vals = _values(u)
    if N < 0:
        raise InvalidSpecError("N must be >= 0")
    if radius > grid.r_max:
        raise DomainError("radius exceeds the grid")
    r = grid.r
    w = 1.0 if weight is None else np.asarray(weight(r), dtype=float)
    g = 4.0 * math.pi * r ** (2.0 - N * p) * w * np.abs(vals) ** p
    integral = PowerLawIntegral(grid, g)
    n_shells = int(math.floor(math.log2(radius / grid.r_min)))
    edges = radius * 2.0 ** -np.arange(n_shells + 1.0)
    cum = integral(edges)
    with np.errstate(invalid="ignore"):
        shells = cum[:-1] - cum[1:]
    inner = shells[-DIVERGENCE_SHELLS:]
    growing = (len(inner) >= 2 and np.all(inner > 0)
               and np.all(inner[1:] >= inner[:-1] * (1.0 - 1e-3)))
    total = float(integral(radius)[0])
    divergent = bool(growing or math.isinf(total))
    value = math.inf if divergent else total ** (1.0 / p)
    return CarlemanValue(value, divergent, shells.tolist(), integral.core_alpha)


def carleman_norm(u: RadialFunction, p: float, N: int, radius: float = 1.0) -> float:
    """``||1_{B(0,radius)} |x|^{-N} u||_p``; ``inf`` when the integral diverges."""
    return carleman_value(u, p, N, radius).value


def strengthened_carleman_norm(u: RadialFunction, p: float, N: int, V,
                               radius: float = 1.0) -> float:
    """``||1_{B(0,radius)} (|V| + 1)^(1/p) |x|^{-N} u||_p``."""
    return carleman_value(u, p, N, radius, weight=lambda r: np.abs(V(r)) + 1.0).value


@dataclass
class CarlemanCheck:
    N: int
    p: float
    beta: float
    weighted_norm: float
    condition_ok: bool
    refinement_delta: float
    strengthened_norm: float = math.nan
    divergent: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def theorem_condition(beta: float, p: float) -> bool:
    """``p([beta] + 1 - beta) < 1`` with ``beta`` not an integer."""
    return float(beta) != math.floor(beta) and p * (math.floor(beta) + 1 - beta) < 1.0


def carleman_check(u: RadialFunction, u_fine: RadialFunction | None, p: float, beta: float,
                   radius: float = 1.0, V=None) -> CarlemanCheck:
    """Carleman norm at ``N = [beta] + 1`` with a grid-refinement comparison."""
    N = int(math.floor(beta)) + 1
    val = carleman_value(u, p, N, radius)
    delta = math.nan
    if u_fine is not None and not val.divergent:
        fine = carleman_norm(u_fine, p, N, radius)
        delta = abs(fine - val.value) / val.value if val.value > 0 else 0.0
    strong = (strengthened_carleman_norm(u, p, N, V, radius)
              if V is not None else math.nan)
    return CarlemanCheck(N=N, p=float(p), beta=float(beta), weighted_norm=val.value,
                         condition_ok=theorem_condition(beta, p), refinement_delta=delta,
                         strengthened_norm=strong, divergent=val.divergent)


# ---------------------------------------------------------------------------
# order bounds


def ball_norm(u: RadialFunction, p: float, a: float) -> float:
    """``||1_{B(0,a)} u||_p``."""
    grid, vals = _values(u)
    integral = PowerLawIntegral(grid, 4.0 * math.pi * grid.r**2 * np.abs(vals) ** p)
    return float(integral(a)[0] ** (1.0 / p))


def order_upper_bound(K: float, a: float, u_norm: float) -> float:
    """``log_{1/a}(K / ||1_{B(0,a)} u||_p) + 1``.

    ``u_norm`` is the ball norm (see :func:`ball_norm`); zero gives ``inf``.
    """
    if not 0 < a < 1:
        raise InvalidSpecError(f"a must lie in (0, 1), got {a}")
    if u_norm == 0:
        return math.inf
    return math.log(K / u_norm) / math.log(1.0 / a) + 1.0


def order_upper_bound_alt(K: float, a: float, u_norm: float) -> float:
    """``log_{1/a}(K / (a ||1_{B(0,a)} u||_p))``; algebraically the same value."""
    if not 0 < a < 1:
        raise InvalidSpecError(f"a must lie in (0, 1), got {a}")
    if u_norm == 0:
        return math.inf
    return math.log(K / (a * u_norm)) / math.log(1.0 / a)


# ---------------------------------------------------------------------------
# two-sided Green bound


@dataclass
class GreenBoundFit:
    beta: float
    samples: int
    r_range: list
    source_radius: float
    A_low: float
    c_up: float
    A_up: float
    c_low: float
    condition_number: float
    abs_x: list = field(default_factory=list)
    G: list = field(default_factory=list)
    comparator_low: list = field(default_factory=list)
    comparator_high: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def green_comparator(x, y, mu: float, beta: float, c: float) -> np.ndarray:
    """``exp(-c sqrt(mu)|x-y|) |x-y|^-1 [1 ^ |x||y|/|x-y|^2]^beta``."""
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    dist = np.linalg.norm(x - y, axis=1)
    vanish = np.minimum(1.0, np.linalg.norm(x, axis=1) * np.linalg.norm(y, axis=1) / dist**2)
    return np.exp(-c * math.sqrt(mu) * dist) / dist * vanish**beta


def green_bound_fit(slice_: GreenSlice, mu: float, beta: float, samples: int = 400,
                    seed: int = 0, r_range=(1e-3, 1.0), c_grid=None) -> GreenBoundFit:
    """Fit ``A_low comp(c_up) <= G <= A_up comp(c_low)`` over seeded samples.

    ``x`` has a uniform direction and log-uniform modulus in ``r_range``; ``y``
    sits on the source sphere.  Among pairs ``c_low <= c_up`` from ``c_grid``
    the one minimising the largest envelope ratio
    ``A_up comp(c_low) / (A_low comp(c_up))`` is returned.
    """
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(samples, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    radii = np.exp(rng.uniform(np.log(r_range[0]), np.log(r_range[1]), samples))
    x = d * radii[:, None]
    y = np.tile([0.0, 0.0, slice_.source_radius], (samples, 1))
    G = slice_(x, y)
    if np.any(G <= 0):
        raise DomainError("Green function sample is not positive")
    c_grid = np.linspace(0.5, 1.5, 41) if c_grid is None else np.asarray(c_grid, dtype=float)
    comps = {c: green_comparator(x, y, mu, beta, c) for c in c_grid}
    best = None
    for i, c_low in enumerate(c_grid):
        A_up = float(np.max(G / comps[c_low]))
        for c_up in c_grid[i:]:
            A_low = float(np.min(G / comps[c_up]))
            cond = float(np.max(A_up * comps[c_low] / (A_low * comps[c_up])))
            if best is None or cond < best[0] - 1e-12:
                best = (cond, A_low, c_up, A_up, c_low)
    cond, A_low, c_up, A_up, c_low = best
    order = np.argsort(radii)
    return GreenBoundFit(
        beta=float(beta), samples=int(samples), r_range=[float(v) for v in r_range],
        source_radius=slice_.source_radius, A_low=A_low, c_up=float(c_up), A_up=A_up,
        c_low=float(c_low), condition_number=cond,
        abs_x=radii[order].tolist(), G=G[order].tolist(),
        comparator_low=(A_low * comps[c_up])[order].tolist(),
        comparator_high=(A_up * comps[c_low])[order].tolist(),
    )


def green_log_slope(slice_: GreenSlice, r_range=(1e-3, 0.1), points: int = 40) -> float:
    """Least-squares slope of ``log G`` against ``log|x|`` with ``x`` orthogonal to ``y``."""
    radii = np.geomspace(r_range[0], r_range[1], points)
    x = np.column_stack([radii, np.zeros(points), np.zeros(points)])
    y = np.tile([0.0, 0.0, slice_.source_radius], (points, 1))
    return float(np.polyfit(np.log(radii), np.log(slice_(x, y)), 1)[0])


# ---------------------------------------------------------------------------
# desingularization and coercivity


def desingular_residual(delta: float) -> float:
    """``|beta(beta+1) - delta/4|`` for ``beta = (sqrt(1+delta) - 1)/2``."""
    if delta < 0:
        raise InvalidSpecError("delta must be >= 0")
    beta = hardy_beta(delta)
    return abs(beta * (beta + 1.0) - 0.25 * delta)


def discrete_desingular_residual(delta: float, grid: RadialGrid) -> float:
    """Largest interior value of ``|(-Delta + delta/(4r^2)) r^beta| r^(2-beta)``."""
    beta = hardy_beta(delta)
    r = grid.r
    u = r**beta
    res = radial_laplacian(u, grid) + 0.25 * delta * u / r**2
    return float(np.nanmax(np.abs(res) * r ** (2.0 - beta)))


@dataclass
class CoercivityReport:
    epsilon: float
    s: float
    delta: float
    delta0: float
    lambda0: float
    c: float
    threshold: float
    probes: int
    margin: float
    identity_error: float

    def to_dict(self) -> dict:
        return asdict(self)


def coercivity_threshold(delta: float, delta0: float) -> float:
    """``(d-2)/2 sqrt(1 + delta - delta0)`` in d=3."""
    return 0.5 * math.sqrt(1.0 + delta - delta0)


def coercivity_check(epsilon: float, s: float, delta: float, delta0: float = 0.0,
                     lambda0: float = 0.0, grid: RadialGrid | None = None, probes: int = 1000,
                     seed: int = 0, v0=None) -> CoercivityReport:
    """Lower bound of ``Re<H_psi w, w>`` for ``H_psi = psi (-Delta + V_eps) psi^{-1}``.

    ``psi = |x|_eps^-s`` and ``V_eps = (delta/4)|x|_eps^-2 + v0``.  For real
    ``w`` the form is

        <grad w, grad w> + 2<(grad psi/psi).grad w, w>
            + <(Delta psi/psi - 2|grad psi|^2/psi^2 + V_eps) w, w>,

    each term assembled from P1 probes.  ``v0`` defaults to
    ``-(delta0/4)|x|_eps^-2``, whose form bound is ``delta0`` with ``lambda0 = 0``.
    The margin is the minimum over probes of
    ``Re<H_psi w,w> - c <grad w,grad w> + delta0 lambda0 <w,w>``, divided by
    ``<grad w, grad w>`` so that it does not depend on the probe scale, with
    ``c = min(1, 1 + delta - delta0 - 4 s^2)``.  ``identity_error`` is the
    largest relative defect of the integration-by-parts identity for the
    drift term.
    """
    if epsilon <= 0:
        raise InvalidSpecError("epsilon must be positive")
    thr = coercivity_threshold(delta, delta0)
    if not 0 <= s < thr:
        raise InvalidSpecError(f"s={s} must satisfy 0 <= s < sqrt(1+delta-delta0)/2 = {thr}")
    grid = grid or RadialGrid()
    if v0 is None:
        def v0(r):
            return -0.25 * delta0 / (r**2 + epsilon)
    r = grid.r
    e2 = lambda x: x**2 + epsilon  # noqa: E731
    K = fem.stiffness(r)
    M1 = fem.weighted_mass(r, lambda x: x**2)
    Me2 = fem.weighted_mass(r, lambda x: x**2 / e2(x))
    Me4 = fem.weighted_mass(r, lambda x: x**2 / e2(x) ** 2)
    drift = fem.derivative_mass(r, lambda x: -s * x / e2(x) * x**2)
    zero = fem.weighted_mass(
        r, lambda x: x**2 * (-3 * s / e2(x) + s * (s + 2) * x**2 / e2(x) ** 2
                             - 2 * s**2 * x**2 / e2(x) ** 2
                             + 0.25 * delta / e2(x) + v0(x)))
    c = min(1.0, 1.0 + delta - delta0 - 4.0 * s**2)
    rng = np.random.default_rng(seed)
    ws = hardy_probes(grid, rng, probes)
    margin = math.inf
    worst_identity = 0.0
    for w in ws:
        grad = fem.quadratic_form(K, w)
        drift_term = 2.0 * fem.quadratic_form(drift, w)
        identity = s * fem.quadratic_form(Me2, w) + 2 * s * epsilon * fem.quadratic_form(Me4, w)
        scale = max(abs(identity), abs(drift_term), 1e-300)
        worst_identity = max(worst_identity, abs(drift_term - identity) / scale)
        form = grad + drift_term + fem.quadratic_form(zero, w)
        value = (form - c * grad + delta0 * lambda0 * fem.quadratic_form(M1, w)) / grad
        margin = min(margin, value)
    return CoercivityReport(epsilon=float(epsilon), s=float(s), delta=float(delta),
                            delta0=float(delta0), lambda0=float(lambda0), c=float(c),
                            threshold=thr, probes=int(probes), margin=float(margin),
                            identity_error=float(worst_identity))


# ---------------------------------------------------------------------------
# lower bound and the implication chain


def lower_bound_threshold(delta: float, delta0: float) -> float:
    """``(1/2)(sqrt(1 + delta - delta0) - 1)``."""
    return 0.5 * (math.sqrt(1.0 + delta - delta0) - 1.0)


def unit_shell_source(r):
    """``f = 1`` on ``1 < r < 2``, zero elsewhere (so ``f = 0`` in ``B(0,1)``)."""
    r = np.asarray(r, dtype=float)
    return ((r > 1.0) & (r < 2.0)).astype(float)


def lower_bound_check(delta: float, delta0: float, mu: float = 1.0, f=unit_shell_source,
                      grid: RadialGrid | None = None, p: float = 6.0, tolerance: float = 0.01,
                      fit_window=None) -> dict:
    """Measured ``Ord`` at ``p = 6`` against ``(1/2)(sqrt(1+delta-delta0) - 1)``.

    The solution is computed for ``V = (delta/4) r^-2 - (delta0/4) r^-2 1_{r<1}``,
    whose inverse-square part in ``B(0,1)`` has form bound ``delta - delta0``.
    """
    if not 0 <= delta0 <= delta:
        raise InvalidSpecError("need 0 <= delta0 <= delta")
    grid = grid or RadialGrid()
    if np.any(np.asarray(f(grid.r[grid.r < 1.0])) != 0):
        raise DomainError("f must vanish in B(0,1)")
    V = make_hardy(3, delta)
    if delta0 > 0:
        V = make_composite(V, PowerProfile(-0.25 * delta0, -2.0, 1.0), delta0, 0.0)
    u = solve_mode(0, mu, V, f, grid)
    rep = vanishing_report(u, p, fit_window=fit_window)
    thr = lower_bound_threshold(delta, delta0)
    return {"delta": delta, "delta0": delta0, "p": p, "threshold": thr,
            "Ord_hat": rep.Ord_hat, "ord_hat": rep.ord_hat,
            "relative_gap": (rep.Ord_hat - thr) / thr if thr > 0 else math.nan,
            "passed": bool(rep.Ord_hat >= thr - tolerance)}


def implication_check(u: RadialFunction, u_fine: RadialFunction | None, beta: float,
                      p: float = 2.0, tolerance: float = 0.02, fit_window=None) -> dict:
    """Check ``[beta] + 1 - 3/p <= Ord_hat`` when the Carleman norm is finite.

    ``beta`` is flagged when it exceeds the measured ``ord_hat``.
    """
    rep = vanishing_report(u, p, fit_window=fit_window)
    check = carleman_check(u, u_fine, p, beta)
    lhs = math.floor(beta) + 1 - 3.0 / p
    finite = not check.divergent
    return {"beta": beta, "p": p, "N": check.N, "hypothesis": check.condition_ok,
            "beta_above_ord": bool(beta > rep.ord_hat), "ord_hat": rep.ord_hat,
            "Ord_hat": rep.Ord_hat, "carleman_norm": check.weighted_norm,
            "refinement_delta": check.refinement_delta, "lhs": lhs,
            "implication_holds": bool((not finite) or lhs <= rep.Ord_hat + tolerance)}
