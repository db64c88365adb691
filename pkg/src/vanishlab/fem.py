"""P1 finite elements and angular-mode Newtonian kernels on radial grids.

Radial factors are integrated against ``r**2 dr``; the common factor ``4 pi``
of the solid angle is dropped since every caller takes ratios of forms.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(6)


def _element_points(r):
    """Gauss points and weights on every element ``[r_j, r_{j+1}]``."""
    a, b = r[:-1], r[1:]
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * _GAUSS_X[None, :]
    wts = half[:, None] * _GAUSS_W[None, :]
    return pts, wts


def stiffness(r) -> sp.csr_matrix:
    """Exact ``int r^2 u'(r) v'(r) dr`` for continuous piecewise-linear u, v."""
    r = np.asarray(r, dtype=float)
    k = (r[1:] ** 3 - r[:-1] ** 3) / (3.0 * (r[1:] - r[:-1]) ** 2)
    return _assemble(k, k, -k, len(r))


def weighted_mass(r, weight) -> sp.csr_matrix:
    """``int weight(r) u(r) v(r) dr`` by 6-point Gauss rules per element.

    ``weight`` already includes any ``r**2`` factor of the volume element.
    """
    r = np.asarray(r, dtype=float)
    pts, wts = _element_points(r)
    w = wts * np.asarray(weight(pts), dtype=float)
    left = (r[1:, None] - pts) / (r[1:] - r[:-1])[:, None]
    right = 1.0 - left
    m_ll = np.sum(w * left * left, axis=1)
    m_rr = np.sum(w * right * right, axis=1)
    m_lr = np.sum(w * left * right, axis=1)
    return _assemble(m_ll, m_rr, m_lr, len(r))


def derivative_mass(r, weight) -> sp.csr_matrix:
    """Non-symmetric ``C[i, j] = int weight(r) phi_i'(r) phi_j(r) dr``.

    ``u @ C @ u = int weight u' u dr`` for nodal values ``u``.
    """
    r = np.asarray(r, dtype=float)
    n = len(r)
    pts, wts = _element_points(r)
    w = wts * np.asarray(weight(pts), dtype=float)
    H = r[1:] - r[:-1]
    left = (r[1:, None] - pts) / H[:, None]
    int_l = np.sum(w * left, axis=1)
    int_r = np.sum(w * (1.0 - left), axis=1)
    j = np.arange(n - 1)
    # phi_j' = -1/H, phi_{j+1}' = +1/H on element j
    rows = np.concatenate([j, j, j + 1, j + 1])
    cols = np.concatenate([j, j + 1, j, j + 1])
    vals = np.concatenate([-int_l / H, -int_r / H, int_l / H, int_r / H])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _assemble(ll, rr, lr, n):
    main = np.zeros(n)
    main[:-1] += ll
    main[1:] += rr
    return sp.diags([lr, main, lr], [-1, 0, 1], shape=(n, n), format="csr")


def quadratic_form(matrix, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(u @ (matrix @ u))


def interior(matrix):
    """Drop the first and last rows/columns (homogeneous Dirichlet ends)."""
    return matrix[1:-1, 1:-1]


def newton_weights(grid, l: int = 0) -> np.ndarray:
    """Quadrature weights for ``int f(rho) rho^2 drho`` on the log grid.

    The first weight absorbs the unresolved ball ``r < r_min`` assuming the
    integrand behaves like ``rho^(l+2) f(r_min)`` there.
    """
    w = grid.r**2 * grid.trapezoid_weights()
    w[0] += grid.r_min**3 / (l + 3.0)
    return w


def mode_kernel_apply(r, w, x, l: int = 0) -> np.ndarray:
    """Apply ``g_l(r, rho) = r_<^l / ((2l+1) r_>^(l+1))`` against weights ``w``.

    ``g_l`` is the radial kernel of ``(-Delta)^{-1}`` on the angular mode
    ``l``.  Cost is O(n) through cumulative sums, and the discrete operator
    is self-adjoint for the inner product ``sum(w * u * v)``.
    """
    x = np.asarray(x, dtype=float)
    wx = w * x
    if l == 0:
        inner = np.cumsum(wx) / r
        outer = np.cumsum((wx / r)[::-1])[::-1]
    else:
        # scale by the outer radius so the powers stay in range
        t = r / r[-1]
        inner = np.cumsum(wx * t**l) / (t ** (l + 1) * r[-1])
        outer = np.cumsum((wx / t ** (l + 1))[::-1])[::-1] * t**l / r[-1]
    outer = np.append(outer[1:], 0.0)
    return (inner + outer) / (2 * l + 1)
