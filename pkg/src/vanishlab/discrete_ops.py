"""Radial Newtonian transforms, p-norm probes and Hardy-type discrete checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import fem
from .errors import InvalidSpecError
from .grid import RadialFunction, RadialGrid
from .potentials import Potential, local_form_bound


def newtonian_radial_apply(f: RadialFunction, grid: RadialGrid | None = None) -> RadialFunction:
    """``(1/r) int_0^r rho^2 f + int_r^inf rho f`` for radial ``f``.

    Trapezoid in ``log r``; the kink of the kernel sits on a node, so the rule
    stays second order.  The ball inside ``r_min`` is filled with ``f(r_min)``.
    """
    grid = grid or f.grid
    if f.grid != grid:
        raise InvalidSpecError("f is sampled on a different grid")
    if f.l != 0:
        raise InvalidSpecError("newtonian_radial_apply takes radial (l = 0) data")
    w = fem.newton_weights(grid, 0)
    return RadialFunction(grid, fem.mode_kernel_apply(grid.r, w, f.values, 0), 0,
                          {"transform": "newtonian"})


def radial_laplacian(u, grid: RadialGrid) -> np.ndarray:
    """Second-order ``-(1/r^3) d/ds (r du/ds)`` at interior nodes (ends set to nan)."""
    u = np.asarray(u, dtype=float)
    h, r, a = grid.h, grid.r, grid.r_half
    flux = a * np.diff(u) / h
    out = np.full(len(u), np.nan)
    out[1:-1] = -np.diff(flux) / (h * r[1:-1] ** 3)
    return out


class RadialOperator:
    """Linear map on grid functions with the ``L^p(4 pi r^2 dr)`` measure of the grid."""

    def __init__(self, apply, grid: RadialGrid, adjoint=None, name: str = "T"):
        self.apply = apply
        self.adjoint = adjoint if adjoint is not None else apply
        self.grid = grid
        self.measure = 4.0 * math.pi * fem.newton_weights(grid, 0)
        self.name = name

    def __call__(self, x):
        return self.apply(x)

    def norm(self, x, p: float) -> float:
        return float(np.sum(self.measure * np.abs(x) ** p) ** (1.0 / p))


def identity_operator(grid: RadialGrid, scale: float = 1.0) -> RadialOperator:
    return RadialOperator(lambda x: scale * np.asarray(x), grid, name=f"{scale}*I")


def prop_operator(V: Potential, p: float, grid: RadialGrid) -> RadialOperator:
    """``V^(1/p) (-Delta)^{-1} V^(1/p')`` on radial functions.

    Its adjoint for the same measure is ``V^(1/p') (-Delta)^{-1} V^(1/p)``.
    """
    q = p / (p - 1.0)
    v = np.abs(V(grid.r))
    w = fem.newton_weights(grid, 0)
    r = grid.r
    a, b = v ** (1.0 / p), v ** (1.0 / q)

    def apply(x):
        return a * fem.mode_kernel_apply(r, w, b * np.asarray(x), 0)

    def adjoint(x):
        return b * fem.mode_kernel_apply(r, w, a * np.asarray(x), 0)

    return RadialOperator(apply, grid, adjoint, name=f"V^1/{p} N V^1/{q:.4g}")


def _duality_map(x, p):
    """``|x|^(p-1) sign(x)``, the Hölder dual direction of ``x`` in ``L^p``."""
    return np.sign(x) * np.abs(x) ** (p - 1.0)


def random_bumps(grid: RadialGrid, rng, count: int) -> np.ndarray:
    """Piecewise-linear bumps in ``log r`` with log-uniform centres and widths."""
    s = grid.s
    centres = rng.uniform(s[0], s[-1], count)
    widths = np.exp(rng.uniform(np.log(2 * grid.h), np.log(s[-1] - s[0]), count))
    heights = rng.uniform(0.2, 1.0, count)
    return heights[:, None] * np.clip(1.0 - np.abs(s[None, :] - centres[:, None])
                                      / widths[:, None], 0.0, None)


def pnorm_probe(T: RadialOperator, p: float, probes: int, seed: int, ascent_steps: int = 30,
                return_probe: bool = False):
    """Lower bound on ``||T||_{p->p}`` from seeded random probes.

    Each probe is improved by the nonlinear power iteration
    ``x <- J_p'(T* J_p(T x))`` (``J`` the duality map), which never decreases
    the ratio for positive kernels; the best ratio over all probes is returned.
    """
    if not p > 1:
        raise InvalidSpecError(f"p must lie in (1, inf), got {p}")
    if probes < 1:
        raise InvalidSpecError("need at least one probe")
    q = p / (p - 1.0)
    rng = np.random.default_rng(seed)
    best, best_x = 0.0, None
    for _ in range(probes):
        x = random_bumps(T.grid, rng, 1)[0]
        while T.norm(x, p) == 0.0:
            x = random_bumps(T.grid, rng, 1)[0]
        x = x / T.norm(x, p)
        ratio = T.norm(T(x), p)
        for _ in range(ascent_steps):
            y = _duality_map(T.adjoint(_duality_map(T(x), p)), q)
            ny = T.norm(y, p)
            if not ny > 0:
                break
            y = y / ny
            new = T.norm(T(y), p)
            if new <= ratio * (1 + 1e-12):
                if new > ratio:
                    x, ratio = y, new
                break
            x, ratio = y, new
        if ratio > best:
            best, best_x = ratio, x
    return (best, best_x) if return_probe else best


def power_iteration(T: RadialOperator, seed: int = 0, iters: int = 500, tol: float = 1e-12
                    ) -> float:
    """Top singular value of ``T`` on ``L^2`` of the grid measure."""
    rng = np.random.default_rng(seed)
    x = random_bumps(T.grid, rng, 1)[0] + 1e-3
    x /= T.norm(x, 2)
    sigma = 0.0
    for _ in range(iters):
        y = T.adjoint(T(x))
        ny = T.norm(y, 2)
        if ny == 0:
            return 0.0
        new = math.sqrt(ny)
        x = y / ny
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    return sigma


def kappa(p: float) -> float:
    """``kappa_p = p p' / 4``."""
    return p * (p / (p - 1.0)) / 4.0


@dataclass
class OperatorProbeReport:
    p: float
    probes: int
    norm_lower_bound: float
    bound_rhs: float
    margin: float
    seed: int
    nu: float = 0.0
    kappa_p: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def prop22_check(V: Potential, p: float, grid: RadialGrid | None = None, probes: int = 200,
                 seed: int = 0, nu: float | None = None, truncation=(1e-3, 3.0)
                 ) -> OperatorProbeReport:
    """Probe ``||V^(1/p) (-Delta)^{-1} V^(1/p')||_{p->p}`` against ``kappa_p nu``.

    ``V`` is first restricted to ``truncation[0] < r < truncation[1]`` (pass
    ``None`` to skip); ``nu`` defaults to the local form-bound of the
    restricted potential over the ball of radius ``truncation[1]``.
    """
    grid = grid or RadialGrid()
    if truncation is not None:
        V = V.truncated(*truncation)
    if nu is None:
        nu = local_form_bound(V, V.support[1] if math.isfinite(V.support[1]) else grid.r_max,
                              grid)
    T = prop_operator(V, p, grid)
    lower = pnorm_probe(T, p, probes, seed) if np.any(V(grid.r) != 0) else 0.0
    k = kappa(p)
    rhs = k * nu
    return OperatorProbeReport(p=float(p), probes=int(probes), norm_lower_bound=float(lower),
                               bound_rhs=float(rhs), margin=float(rhs - lower), seed=int(seed),
                               nu=float(nu), kappa_p=float(k))


def hardy_ratio(u, grid: RadialGrid) -> float:
    """``(1/4) <r^-2 u, u> / <u', u'>`` for nodal values of a P1 function."""
    r = grid.r
    num = fem.quadratic_form(fem.weighted_mass(r, lambda x: np.ones_like(x)), u)
    den = fem.quadratic_form(fem.stiffness(r), u)
    return 0.25 * num / den


def hardy_probes(grid: RadialGrid, rng, probes: int) -> np.ndarray:
    """Radial probes vanishing at both grid ends.

    Half are ``r^(-1/2 + e)`` near-optimizers with smooth cutoffs, the rest
    random piecewise-linear bumps.
    """
    s = grid.s
    L = s[-1] - s[0]
    x = (s - s[0]) / L
    n_opt = probes // 2
    eps = np.exp(rng.uniform(np.log(1e-3), np.log(0.5), n_opt))
    opt = np.exp((eps[:, None]) * (s[None, :] - s[0])) * np.sin(math.pi * x)[None, :] ** 2
    opt *= np.exp(-0.5 * (s[None, :] - s[0]))
    bumps = random_bumps(grid, rng, probes - n_opt)
    out = np.vstack([opt, bumps])
    out[:, 0] = out[:, -1] = 0.0
    return out


def hardy_check(grid: RadialGrid | None = None, probes: int = 200, seed: int = 0) -> float:
    """Largest Hardy ratio ``(1/4)<|x|^-2 w, w>/<grad w, grad w>`` over seeded probes."""
    grid = grid or RadialGrid()
    rng = np.random.default_rng(seed)
    ws = hardy_probes(grid, rng, probes)
    r = grid.r
    M = fem.weighted_mass(r, lambda x: np.ones_like(x))
    K = fem.stiffness(r)
    ratios = [0.25 * fem.quadratic_form(M, w) / fem.quadratic_form(K, w)
              for w in ws if np.any(w != 0)]
    return float(max(ratios))
