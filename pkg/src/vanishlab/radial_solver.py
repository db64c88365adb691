"""Mode-by-mode resolvent of ``-Delta + V`` for radial ``V`` in three dimensions.

Each angular mode ``l`` gives a two-point problem on ``[r_min, r_max]``,
discretized in conservative form in ``s = log r``:

    -d/ds [ r (u_s - gamma u) ] + r^3 q(r) u = r^3 f,
    q = l(l+1)/r^2 + V + mu.

``gamma = 0`` is the Schrodinger operator; ``gamma = sqrt(delta)/2`` is the
adjoint of the Hardy-type drift.  Fluxes live on the cell interfaces, so the
matrix is an M-matrix, and it is symmetric when ``gamma = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.special import eval_legendre, ive, kve, spherical_in, spherical_kn

from .errors import ConvergenceError, DomainError, InvalidSpecError
from .grid import RadialFunction, RadialGrid
from .potentials import Potential


def indicial_exponents(l: int, V: Potential):
    """Roots of ``s(s+1) = l(l+1) + c`` for ``V ~ c/r^2`` at the origin.

    Returns ``(s_minus, s_plus, regular)``.  For a potential that is bounded at
    the origin (``epsilon > 0``) the free pair ``(-l-1, l)`` is returned with
    ``regular=True``.
    """
    if l < 0:
        raise InvalidSpecError(f"l must be >= 0, got {l}")
    if V.d != 3:
        raise InvalidSpecError("the radial solver is three-dimensional")
    if V.singular_exponent not in (0.0, 2.0):
        raise InvalidSpecError(f"no indicial pair for |V| ~ r^-{V.singular_exponent}")
    c = V.inverse_square_coefficient
    disc = (l + 0.5) ** 2 + c
    if disc < 0:
        raise DomainError(f"complex indicial exponents: c = {c} below the Hardy threshold")
    root = math.sqrt(disc)
    regular = V.epsilon > 0 and c == 0.0
    return -0.5 - root, -0.5 + root, regular


def hardy_beta(delta: float) -> float:
    """``beta = (sqrt(1 + delta) - 1)/2``, the vanishing exponent in d=3."""
    return 0.5 * (math.sqrt(1.0 + delta) - 1.0)


def _far_field_slope(l: int, mu: float, c: float, r: float) -> float:
    """``r u'/u`` of the decaying solution ``r^(-1/2) K_nu(sqrt(mu) r)``."""
    nu = math.sqrt((l + 0.5) ** 2 + c)
    z = math.sqrt(mu) * r
    k = kve(nu, z)
    dk = -0.5 * (kve(nu - 1.0, z) + kve(nu + 1.0, z))
    return -0.5 + z * dk / k


@dataclass
class _Bands:
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray


def _assemble(grid: RadialGrid, q: np.ndarray, gamma: float, left: float | None,
              right: float) -> _Bands:
    """Rows of ``h``-scaled balance equations.

    ``left`` is the Robin slope ``u_s/u`` at ``r_min`` (``None`` gives zero
    flux); ``right`` the slope at ``r_max``.
    """
    r, h, n = grid.r, grid.h, grid.n_points
    a = grid.r_half
    up = -a * (1.0 / h - 0.5 * gamma)
    lo = -a * (1.0 / h + 0.5 * gamma)
    diag = np.zeros(n)
    diag[:-1] += a * (1.0 / h + 0.5 * gamma)
    diag[1:] += a * (1.0 / h - 0.5 * gamma)
    vol = np.full(n, h)
    vol[0] = vol[-1] = 0.5 * h
    diag += vol * r**3 * q
    if left is not None:
        diag[0] += r[0] * (left - gamma)
    diag[-1] -= r[-1] * (right - gamma)
    upper = np.zeros(n)
    lower = np.zeros(n)
    upper[1:] = up
    lower[:-1] = lo
    return _Bands(lower, diag, upper)


def _solve(bands: _Bands, rhs: np.ndarray) -> np.ndarray:
    ab = np.vstack([bands.upper, bands.diag, bands.lower])
    try:
        u = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"singular tridiagonal system: {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise ConvergenceError("tridiagonal solve produced non-finite values")
    return u


def _rhs(grid: RadialGrid, f: np.ndarray) -> np.ndarray:
    vol = np.full(grid.n_points, grid.h)
    vol[0] = vol[-1] = 0.5 * grid.h
    return vol * grid.r**3 * f


def _source_values(source, grid):
    if isinstance(source, RadialFunction):
        if source.grid != grid:
            raise InvalidSpecError("source is sampled on a different grid")
        return source.values
    vals = np.asarray(source(grid.r) if callable(source) else source, dtype=float)
    if vals.shape != (grid.n_points,):
        raise InvalidSpecError("source does not match the grid")
    return vals


def solve_mode(l: int, mu: float, V: Potential, source, grid: RadialGrid | None = None
               ) -> RadialFunction:
    """Solve ``-u'' - 2u'/r + (l(l+1)/r^2 + V + mu) u = source`` on the grid.

    Near ``r_min`` the solution is matched to ``r^s_plus``; near ``r_max`` to the
    decaying modified Bessel solution of the far-field equation.
    """
    grid = grid or RadialGrid()
    if mu <= 0:
        raise InvalidSpecError(f"mu must be positive, got {mu}")
    r = grid.r
    v = V(r)
    q = l * (l + 1.0) / r**2 + v + mu
    _, s_plus, _ = indicial_exponents(l, V)
    right = _far_field_slope(l, mu, V.far_field_coefficient(grid.r_max), grid.r_max)
    bands = _assemble(grid, q, 0.0, s_plus, right)
    u = _solve(bands, _rhs(grid, _source_values(source, grid)))
    coercive = bool(np.all(v >= 0))
    if not coercive and np.any(v * r**2 < -0.25):
        warnings.warn("potential violates the Hardy bound locally; form may not be coercive")
    return RadialFunction(grid, u, l, {"mu": mu, "potential": V.name, "coercive": coercive})


def resolvent_apply(mu: float, V: Potential, f, grid: RadialGrid | None = None,
                    theorem_hypothesis: bool = False) -> RadialFunction:
    """``u = (mu + H)^{-1} f`` for radial data ``f``.

    With ``theorem_hypothesis`` the source must vanish on ``r < 1``.
    """
    grid = grid or RadialGrid()
    vals = _source_values(f, grid)
    if theorem_hypothesis and np.any(vals[grid.r < 1.0] != 0):
        raise DomainError("source must vanish in B(0,1)")
    return solve_mode(0, mu, V, vals, grid)


def drift_mode_solve(mu: float, delta_drift: float, source, grid: RadialGrid | None = None
                     ) -> RadialFunction:
    """Mode-0 solve of ``mu u - Delta u + div(b u) = source``, ``b = (sqrt(delta)/2) x/|x|^2``.

    The regular solution behaves like ``r^gamma``, ``gamma = sqrt(delta)/2``,
    for which the flux ``r(u_s - gamma u)`` vanishes; that is the inner
    boundary condition.
    """
    grid = grid or RadialGrid()
    if mu <= 0:
        raise InvalidSpecError(f"mu must be positive, got {mu}")
    if delta_drift < 0:
        raise InvalidSpecError("delta_drift must be >= 0")
    gamma = 0.5 * math.sqrt(delta_drift)
    q = np.full(grid.n_points, float(mu))
    right = -math.sqrt(mu) * grid.r_max - 1.0 + 0.5 * gamma
    left = None if gamma > 0 else 0.0
    bands = _assemble(grid, q, gamma, left, right)
    u = _solve(bands, _rhs(grid, _source_values(source, grid)))
    return RadialFunction(grid, u, 0, {"mu": mu, "drift_delta": delta_drift, "gamma": gamma})


# ---------------------------------------------------------------------------
# exact Hardy oracle


def bessel_hardy_oracle(delta: float, mu: float, r, rho) -> np.ndarray:
    """Mode-0 Green function of ``mu - Delta + (delta/4) r^-2`` in d=3.

    ``G0(r, rho) = (r rho)^(-1/2) I_nu(k r_<) K_nu(k r_>)`` with
    ``nu = sqrt(1 + delta)/2`` and ``k = sqrt(mu)``; it solves the radial
    equation with source ``delta(r - rho)/rho^2``.
    """
    if mu <= 0:
        raise InvalidSpecError(f"mu must be positive, got {mu}")
    if delta < 0:
        raise InvalidSpecError(f"delta must be >= 0, got {delta}")
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(r <= 0) or np.any(rho <= 0):
        raise DomainError("radii must be positive")
    nu = 0.5 * math.sqrt(1.0 + delta)
    k = math.sqrt(mu)
    a = k * np.minimum(r, rho)
    b = k * np.maximum(r, rho)
    iv, kv = ive(nu, a), kve(nu, b)
    if not (np.all(np.isfinite(iv)) and np.all(np.isfinite(kv))):
        raise DomainError("Bessel evaluation outside the representable range")
    return iv * kv * np.exp(a - b) / np.sqrt(r * rho)


def oracle_resolvent(delta: float, mu: float, f, support, r, nodes: int = 64) -> np.ndarray:
    """``u(r) = int G0(r, rho) f(rho) rho^2 drho`` for ``f`` supported in ``support``.

    The integral is split at ``rho = r`` where the kernel has a kink.
    """
    a, b = support
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    m = np.clip(r, a, b)[:, None]
    total = np.zeros(len(r))
    for lo, hi in ((a, m), (m, b)):
        half = 0.5 * (hi - lo)
        rho = half * x[None, :] + 0.5 * (hi + lo)
        rho = np.where(half > 0, rho, 0.5 * (a + b))
        g = bessel_hardy_oracle(delta, mu, r[:, None], rho)
        total += np.sum(half * w[None, :] * g * np.asarray(f(rho)) * rho**2, axis=1)
    return total


def free_mode_green(l: int, mu: float, r, rho) -> np.ndarray:
    """Mode-``l`` free kernel ``(2k/pi) i_l(k r_<) k_l(k r_>)``, ``k = sqrt(mu)``."""
    k = math.sqrt(mu)
    r = np.asarray(r, dtype=float)
    a, b = k * np.minimum(r, rho), k * np.maximum(r, rho)
    return (2.0 * k / math.pi) * spherical_in(l, a) * spherical_kn(l, b)


def free_green(mu: float, x, y) -> np.ndarray:
    """``exp(-sqrt(mu)|x - y|) / (4 pi |x - y|)``."""
    dist = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    return np.exp(-math.sqrt(mu) * dist) / (4.0 * math.pi * dist)


# ---------------------------------------------------------------------------
# Green slices


@dataclass
class GreenSlice:
    """Mode data ``G_l(r, rho)`` for a fixed source radius ``rho``.

    ``G(x, y) = sum_l (2l+1)/(4 pi) G_l(|x|, |y|) P_l(cos theta)`` for ``|y| = rho``.
    """

    source_radius: float
    grid: RadialGrid
    modes: np.ndarray
    mu: float
    potential: dict = field(default_factory=dict)

    @property
    def l_max(self) -> int:
        return self.modes.shape[0] - 1

    def mode(self, l: int, r) -> np.ndarray:
        """``G_l(r, rho)`` by a cubic spline of ``log G_l`` in ``log r``."""
        vals = self.modes[l]
        s = np.log(np.asarray(r, dtype=float))
        if np.all(vals > 0):
            return np.exp(CubicSpline(self.grid.s, np.log(vals))(s))
        return CubicSpline(self.grid.s, vals)(s)

    def __call__(self, x, y) -> np.ndarray:
        """Reconstruct ``G(x, y)``; every ``|y|`` must equal the source radius."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        ny = np.linalg.norm(y, axis=1)
        if not np.allclose(ny, self.source_radius, rtol=1e-12):
            raise DomainError(f"|y| must equal the source radius {self.source_radius}")
        nx = np.linalg.norm(x, axis=1)
        if np.any(nx < self.grid.r_min) or np.any(nx > self.grid.r_max):
            raise DomainError("|x| outside the grid")
        c = np.clip(np.sum(x * y, axis=1) / (nx * ny), -1.0, 1.0)
        total = np.zeros(len(nx))
        for l in range(self.l_max + 1):
            total += (2 * l + 1) / (4 * math.pi) * self.mode(l, nx) * eval_legendre(l, c)
        return total

    def to_dict(self) -> dict:
        return {"source_radius": self.source_radius, "mu": self.mu, "grid": self.grid.describe(),
                "potential": self.potential, "l_max": self.l_max,
                "r": self.grid.r.tolist(), "modes": [m.tolist() for m in self.modes]}


def ring_source(grid: RadialGrid, rho: float):
    """Discrete ``delta(r - rho)/rho^2``: unit weight in the balance row of the snapped node."""
    j = grid.nearest_index(rho)
    f = np.zeros(grid.n_points)
    width = grid.h if 0 < j < grid.n_points - 1 else 0.5 * grid.h
    f[j] = 1.0 / (width * grid.r[j] ** 3)
    return f, float(grid.r[j])


def green_radial(mu: float, V: Potential, rho: float, l_max: int,
                 grid: RadialGrid | None = None) -> GreenSlice:
    """Per-mode Green functions for a ring source at ``rho`` (snapped to a node)."""
    grid = grid or RadialGrid()
    if l_max < 0:
        raise InvalidSpecError("l_max must be >= 0")
    f, rho_used = ring_source(grid, rho)
    modes = np.array([solve_mode(l, mu, V, f, grid).values for l in range(l_max + 1)])
    return GreenSlice(rho_used, grid, modes, float(mu), V.describe())
