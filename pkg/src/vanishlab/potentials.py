"""Inverse-square potentials, their perturbations and form-bound measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from scipy.sparse.linalg import ArpackNoConvergence

from . import fem
from .errors import ConvergenceError, DomainError, InvalidSpecError
from .grid import RadialGrid

DENSE_EIGEN_LIMIT = 2500


@dataclass(frozen=True)
class PowerProfile:
    """``coefficient * r**power`` on ``r < cutoff``."""

    coefficient: float
    power: float = -2.0
    cutoff: float = math.inf

    def __post_init__(self):
        if self.power < -2.0:
            raise InvalidSpecError(f"power {self.power} < -2 is not form-bounded in d=3")
        if self.cutoff <= 0:
            raise InvalidSpecError("cutoff must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            v = self.coefficient * r**self.power
        return np.where(r < self.cutoff, v, 0.0)

    @property
    def inverse_square_coefficient(self) -> float:
        return self.coefficient if self.power == -2.0 else 0.0

    @property
    def singular_exponent(self) -> float:
        return max(-self.power, 0.0) if self.coefficient != 0 else 0.0

    @property
    def sup_norm(self) -> float:
        if self.power < 0 and self.coefficient != 0:
            return math.inf
        if self.power == 0:
            return abs(self.coefficient)
        return abs(self.coefficient) * self.cutoff**self.power

    def describe(self) -> dict:
        return {"kind": "power", "coefficient": self.coefficient, "power": self.power,
                "cutoff": self.cutoff}


@dataclass(frozen=True)
class BumpProfile:
    """Smooth compactly supported bump ``height * exp(1 - 1/(1 - (r/radius)^2))``."""

    height: float
    radius: float = 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        x = np.clip(r / self.radius, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            v = self.height * np.exp(1.0 - 1.0 / (1.0 - x**2))
        return np.where(x < 1.0, v, 0.0)

    inverse_square_coefficient = 0.0
    singular_exponent = 0.0

    @property
    def sup_norm(self) -> float:
        return abs(self.height)

    def describe(self) -> dict:
        return {"kind": "bump", "height": self.height, "radius": self.radius}


@dataclass(frozen=True)
class Potential:
    """Radial potential ``delta (d-2)^2/4 |x|_eps^-2 + v0(|x|)`` in dimension ``d``.

    ``support`` restricts the potential to ``support[0] < |x| < support[1]``.
    ``delta0`` and ``lambda0`` are the declared form-bound data of ``v0``.
    """

    d: int = 3
    hardy_delta: float = 0.0
    epsilon: float = 0.0
    perturbation: PowerProfile | BumpProfile | None = None
    delta0: float = 0.0
    lambda0: float = 0.0
    support: tuple = (0.0, math.inf)
    name: str = "hardy"

    def __post_init__(self):
        if self.d < 3:
            raise InvalidSpecError(f"d must be >= 3, got {self.d}")
        if self.hardy_delta < 0:
            raise InvalidSpecError(f"hardy_delta must be >= 0, got {self.hardy_delta}")
        if self.epsilon < 0:
            raise InvalidSpecError(f"epsilon must be >= 0, got {self.epsilon}")
        lo, hi = self.support
        if not 0.0 <= lo < hi:
            raise InvalidSpecError(f"support must satisfy 0 <= a < b, got {self.support}")

    @property
    def hardy_coefficient(self) -> float:
        return self.hardy_delta * (self.d - 2) ** 2 / 4.0

    @property
    def inverse_square_coefficient(self) -> float:
        """Coefficient ``c`` of ``c/r^2`` governing the behaviour at the origin."""
        if self.support[0] > 0:
            return 0.0
        c = self.hardy_coefficient if self.epsilon == 0 else 0.0
        if self.perturbation is not None:
            c += self.perturbation.inverse_square_coefficient
        return c

    @property
    def singular_exponent(self) -> float:
        """``a`` such that ``|V| ~ r^-a`` at the origin (0 when bounded there)."""
        if self.support[0] > 0:
            return 0.0
        a = 2.0 if (self.hardy_delta > 0 and self.epsilon == 0) else 0.0
        if self.perturbation is not None:
            a = max(a, self.perturbation.singular_exponent)
        return a

    @property
    def is_pure_hardy(self) -> bool:
        return (self.epsilon == 0 and self.perturbation is None
                and self.support == (0.0, math.inf))

    def far_field_coefficient(self, r: float) -> float:
        """``r^2 V(r)``, used for far-field boundary conditions."""
        return float(r**2 * self(r))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r == 0) and self.singular_exponent > 0:
            raise DomainError("potential is singular at r = 0; set epsilon > 0")
        with np.errstate(divide="ignore"):
            v = self.hardy_coefficient / (r**2 + self.epsilon)
        if self.perturbation is not None:
            v = v + self.perturbation(r)
        lo, hi = self.support
        return np.where((r > lo) & (r < hi), v, 0.0) if self.support != (0.0, math.inf) else v

    def truncated(self, a: float, b: float) -> "Potential":
        return replace(self, support=(float(a), float(b)), name=f"{self.name}[{a},{b}]")

    def describe(self) -> dict:
        return {
            "name": self.name, "d": self.d, "hardy_delta": self.hardy_delta,
            "epsilon": self.epsilon, "delta0": self.delta0, "lambda0": self.lambda0,
            "support": list(self.support),
            "perturbation": None if self.perturbation is None else self.perturbation.describe(),
        }


def make_hardy(d: int = 3, delta: float = 1.0, epsilon: float = 0.0) -> Potential:
    """``V(x) = delta (d-2)^2/4 |x|_eps^-2`` with ``|x|_eps = sqrt(|x|^2 + eps)``."""
    name = "hardy" if epsilon == 0 else "hardy_regularized"
    return Potential(d=d, hardy_delta=float(delta), epsilon=float(epsilon), name=name)


def make_composite(hardy: Potential, v0, delta0: float, lambda0: float) -> Potential:
    """Add the radial profile ``v0`` to ``hardy`` and record its form-bound data."""
    if hardy.perturbation is not None:
        raise InvalidSpecError("base potential already carries a perturbation")
    if not callable(v0):
        raise InvalidSpecError("v0 must be a radial profile")
    return replace(hardy, perturbation=v0, delta0=float(delta0), lambda0=float(lambda0),
                   name="composite")


def catalog(name: str, **params) -> Potential:
    """Build a named potential from configuration parameters."""
    name = name.strip().lower()
    if name in ("hardy", "hardy_regularized"):
        delta = params.pop("delta", 1.0)
        eps = params.pop("epsilon", 0.0 if name == "hardy" else 1e-4)
        if params:
            _reject(name, params)
        if name == "hardy_regularized" and eps <= 0:
            raise InvalidSpecError("hardy_regularized needs epsilon > 0")
        return make_hardy(3, delta, eps)
    if name == "composite":
        delta = params.pop("delta", 0.75)
        c0 = params.pop("c0", 0.1)
        r0 = params.pop("r0", 1.0)
        if params:
            _reject(name, params)
        return make_composite(make_hardy(3, delta), PowerProfile(c0, -2.0, r0),
                              delta0=4.0 * abs(c0), lambda0=0.0)
    if name == "bounded_bump":
        height = params.pop("height", 1.0)
        radius = params.pop("radius", 1.0)
        if params:
            _reject(name, params)
        return make_composite(make_hardy(3, 0.0), BumpProfile(height, radius),
                              delta0=0.0, lambda0=abs(height))
    raise InvalidSpecError(f"unknown potential {name!r}; known: {', '.join(CATALOG)}")


CATALOG = ("hardy", "hardy_regularized", "composite", "bounded_bump")


def _reject(name, params):
    raise InvalidSpecError(f"unknown parameters for {name}: {sorted(params)}")


# ---------------------------------------------------------------------------
# form bounds


@dataclass
class FormBoundReport:
    delta_hat: float
    lambda_: float
    nu_hat: float
    grid: dict
    by_l: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"delta_hat": self.delta_hat, "lambda": self.lambda_, "nu_hat": self.nu_hat,
                "grid": self.grid, "by_l": self.by_l}


def _reproducible(x: float) -> float:
    # threaded BLAS inside LAPACK agrees with itself only to a few ulps
    return float(f"{x:.12g}")


def _top_generalized(B, A):
    """Largest ``theta`` with ``B x = theta A x`` (A symmetric positive definite)."""
    n = A.shape[0]
    if n <= DENSE_EIGEN_LIMIT:
        vals, vecs = sla.eigh(B.toarray(), A.toarray(), subset_by_index=[n - 1, n - 1])
        return _reproducible(vals[0]), vecs[:, 0]
    try:
        vals, vecs = spla.eigsh(B.tocsc(), k=1, M=A.tocsc(), which="LA", tol=1e-12)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge: {exc}") from exc
    x = vecs[:, 0]
    res = np.linalg.norm(B @ x - vals[0] * (A @ x)) / max(np.linalg.norm(A @ x), 1e-300)
    if res > 1e-6:
        raise ConvergenceError(f"generalized eigenpair residual {res:.3e} too large")
    return _reproducible(vals[0]), x


def form_bound_ratio(V: Potential, lam: float, grid: RadialGrid, l: int = 0):
    """Top of ``<|V| u, u> / (<grad u, grad u> + lam <u, u>)`` on mode ``l``.

    Uses P1 elements on the grid nodes with ``u = 0`` at both ends, so the
    value increases to the continuum supremum as the grid is refined.
    """
    r = grid.r
    K = fem.stiffness(r)
    A = K
    if l > 0:
        A = A + fem.weighted_mass(r, lambda x: np.full_like(x, l * (l + 1.0)))
    if lam > 0:
        A = A + fem.weighted_mass(r, lambda x: lam * x**2)
    B = fem.weighted_mass(r, lambda x: np.abs(V(x)) * x**2)
    theta, vec = _top_generalized(fem.interior(B), fem.interior(A))
    return max(theta, 0.0), np.concatenate([[0.0], vec, [0.0]])


def form_bound_estimate(V: Potential, lam: float = 0.0, grid: RadialGrid | None = None,
                        l_max: int = 0, nu_radius: float = 3.0) -> FormBoundReport:
    """Estimate the form-bound ``delta`` of ``V`` at shift ``lam``.

    ``delta_hat`` is the largest ``theta`` with ``<|V|u,u> = theta <(lam - Delta)u,u>``
    over the modes ``l <= l_max``.  Also reports the local bound over
    ``B(0, nu_radius)``.
    """
    if lam < 0:
        raise InvalidSpecError(f"lambda must be >= 0, got {lam}")
    grid = grid or RadialGrid()
    by_l = [form_bound_ratio(V, lam, grid, l)[0] for l in range(l_max + 1)]
    nu = local_form_bound(V, nu_radius, grid, l_max)
    return FormBoundReport(delta_hat=float(max(by_l)), lambda_=float(lam), nu_hat=nu,
                           grid=grid.describe(), by_l=[float(v) for v in by_l])


def local_form_bound(V: Potential, radius: float, grid: RadialGrid | None = None,
                     l_max: int = 0) -> float:
    """``nu_hat = || 1_{B(0,radius)} |V|^(1/2) (-Delta)^(-1/2) ||^2``.

    Computed as the top eigenvalue of ``S = D g_l D`` with
    ``D = (w |V| 1_B)^(1/2)``, which is similar to ``|V|^(1/2) 1_B (-Delta)^-1 1_B |V|^(1/2)``.
    """
    if radius <= 0:
        raise InvalidSpecError(f"radius must be positive, got {radius}")
    grid = grid or RadialGrid()
    r = grid.r
    v = np.abs(V(r)) * (r <= radius)
    if not np.any(v > 0):
        return 0.0
    best = 0.0
    for l in range(l_max + 1):
        w = fem.newton_weights(grid, l)
        dscale = np.sqrt(w * v)
        active = np.flatnonzero(dscale > 0)
        lo, hi = active[0], active[-1] + 1
        rr, ww, dd = r[lo:hi], w[lo:hi], dscale[lo:hi]

        def matvec(x, rr=rr, ww=ww, dd=dd, l=l):
            x = np.ravel(x)
            return dd * fem.mode_kernel_apply(rr, np.ones_like(rr), dd * x, l)

        n = hi - lo
        if n <= DENSE_EIGEN_LIMIT:
            S = np.column_stack([matvec(e) for e in np.eye(n)])
            top = float(sla.eigh(0.5 * (S + S.T), eigvals_only=True,
                                 subset_by_index=[n - 1, n - 1])[0])
        else:
            op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
            try:
                top = float(spla.eigsh(op, k=1, which="LA", tol=1e-10)[0][0])
            except ArpackNoConvergence as exc:
                raise ConvergenceError(f"Lanczos did not converge: {exc}") from exc
        best = max(best, top)
    return _reproducible(best)


# ---------------------------------------------------------------------------
# subclass quantities


@dataclass
class SubclassReport:
    ld2_norm: float
    weak_ld2: float
    morrey_cs: float
    cww_value: float
    s: float = 1.25
    dyadic_depth: int = 8

    def to_dict(self) -> dict:
        return {"ld2_norm": self.ld2_norm, "weak_ld2": self.weak_ld2,
                "morrey_cs": self.morrey_cs, "cww_value": self.cww_value,
                "s": self.s, "dyadic_depth": self.dyadic_depth}


def default_phi(x):
    """``(1 + log(1 + x))^1.01``: increasing, >= 1, with ``int dx/(x phi) < inf``."""
    return (1.0 + np.log1p(x)) ** 1.01


_CUBE_X, _CUBE_W = np.polynomial.legendre.leggauss(4)


def _dyadic_leaves(corner, side, depth_full, depth_max):
    """Leaves of a dyadic tree refined everywhere to ``depth_full`` and toward 0."""
    leaves = []
    stack = [(np.asarray(corner, dtype=float), float(side), 0, ())]
    while stack:
        c, h, k, path = stack.pop()
        touches = np.all(c <= 0.0) and np.all(c + h >= 0.0)
        if k < depth_full or (touches and k < depth_max):
            for i, off in enumerate(np.ndindex(2, 2, 2)):
                stack.append((c + 0.5 * h * np.array(off), 0.5 * h, k + 1, path + (i,)))
        else:
            leaves.append((c, h, path, bool(touches)))
    leaves.sort(key=lambda leaf: leaf[2])
    return leaves


def _cube_points(c, h):
    x = c[:, None] + 0.5 * h * (_CUBE_X[None, :] + 1.0)
    X, Y, Z = np.meshgrid(x[0], x[1], x[2], indexing="ij")
    w = (0.5 * h) ** 3 * np.einsum("i,j,k->ijk", _CUBE_W, _CUBE_W, _CUBE_W)
    return np.sqrt(X**2 + Y**2 + Z**2).ravel(), w.ravel()


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    rho = np.sqrt(1.0 - z**2)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _weak_norm(V: Potential, corner, side: float, n_r: int = 4000, n_dir: int = 4000) -> float:
    """``sup_t t |{x in box : |V(x)| > t}|^(2/3)`` for radial ``V``.

    The box is sliced into spherical shells weighted by the area of each
    sphere inside the box, so level sets near a singular origin are resolved
    exactly instead of through quadrature nodes.
    """
    lo = np.asarray(corner, dtype=float)
    hi = lo + side
    far = float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
    edges = np.geomspace(1e-9 * side, far, n_r + 1)
    mid = np.sqrt(edges[:-1] * edges[1:])
    dirs = _fibonacci_sphere(n_dir)
    pts = mid[:, None, None] * dirs[None, :, :]
    frac = np.mean(np.all((pts >= lo) & (pts <= hi), axis=2), axis=1)
    shell = 4.0 * math.pi / 3.0 * np.diff(edges**3) * frac
    # the ball inside the innermost edge is inside the box iff the origin is
    core = 4.0 * math.pi / 3.0 * edges[0] ** 3 * frac[0]
    vals = np.abs(V(mid))
    order = np.argsort(vals, kind="stable")[::-1]
    measure = core + np.cumsum(shell[order])
    return float(np.max(vals[order] * measure ** (2.0 / 3.0)))


def subclass_report(V: Potential, s: float = 1.25, domain_box=((-1.0, -1.0, -1.0), 2.0),
                    dyadic_depth: int = 8, phi=default_phi, depth_full: int = 3) -> SubclassReport:
    """``L^{3/2}``, weak ``L^{3/2}``, Morrey and CWW quantities of ``V`` on a cube.

    ``domain_box`` is ``(corner, side)``.  Cubes touching the origin are
    refined to ``dyadic_depth``; quantities whose integrand is not integrable
    at a singular origin are reported as ``inf``.
    """
    if V.d != 3:
        raise InvalidSpecError("subclass quantities are implemented for d = 3")
    if s <= 1:
        raise InvalidSpecError(f"s must exceed 1, got {s}")
    corner, side = domain_box
    leaves = _dyadic_leaves(corner, side, min(depth_full, dyadic_depth), dyadic_depth)
    a = V.singular_exponent
    vals, wts, paths, touch = [], [], [], []
    for c, h, path, t in leaves:
        rr, w = _cube_points(c, h)
        vals.append(np.abs(V(rr)))
        wts.append(w)
        paths.append(path)
        touch.append(t)
    vals = np.array(vals)
    wts = np.array(wts)
    origin_inside = any(touch)
    singular = origin_inside and a > 0

    def integral(g):
        return np.sum(g * wts, axis=1)

    ld2 = math.inf if (singular and 1.5 * a >= 3) else float(np.sum(integral(vals**1.5)) ** (2 / 3))

    weak = _weak_norm(V, corner, side)

    # aggregate leaf integrals over every dyadic ancestor
    pow_s = integral(vals**s)
    cubes = {}
    for i, path in enumerate(paths):
        for k in range(len(path) + 1):
            key = path[:k]
            side_k = side / 2**k
            entry = cubes.setdefault(key, [side_k, 0.0, [], False])
            entry[1] += pow_s[i]
            entry[2].append(i)
            entry[3] = entry[3] or touch[i]
    morrey = 0.0
    cww = 0.0
    for side_k, int_s, members, t in cubes.values():
        vol = side_k**3
        if t and singular and a * s >= 3:
            morrey = math.inf
        else:
            morrey = max(morrey, side_k**2 * (int_s / vol) ** (1.0 / s))
        if t and singular and a >= 3:
            cww = math.inf
            continue
        g = vals[members] * side_k**2
        cww = max(cww, float(np.sum(g * phi(g) * wts[members])) / vol)
    return SubclassReport(ld2_norm=ld2, weak_ld2=weak, morrey_cs=float(morrey),
                          cww_value=float(cww), s=float(s), dyadic_depth=int(dyadic_depth))
