"""Radial solutions of ``-Laplace(c) = rho`` and the interaction energy.

The exact (``epsilon = 0``) route uses Newton's shell theorem: a uniform
shell acts outside like a point mass and is flat inside.  For
piecewise-constant densities this gives the potential in closed form, and
cell averages of it are polynomial expressions in the edges.  The pairing
``sum rho_i c_i vol_i`` is then a symmetric quadratic form, which is what
makes the discrete free energy a genuine gradient-flow energy.

The regularised route (``epsilon > 0``) integrates the smoothed kernel
``(|x-y|^2 + eps^2)^(-(n-2)/2)`` over cell pairs by Gauss-Legendre
quadrature in r, with the angular average in closed form for n = 3 and by
32-point quadrature in the polar angle otherwise.  Diagonal cell pairs are
split along r = s, where the averaged kernel has a kink.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .radial import DensityField, RadialGrid, _gauss_nodes

ANGULAR_POINTS = 32
RADIAL_POINTS = 3
DIAGONAL_POINTS = 8
_KERNEL_CACHE: "OrderedDict[tuple, np.ndarray]" = OrderedDict()
_KERNEL_CACHE_SIZE = 4


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Cell-averaged potential and its radial derivative at interior faces."""

    grid: RadialGrid
    c_values: np.ndarray
    c_prime_faces: np.ndarray
    epsilon: float = 0.0
    density: DensityField | None = None

    def at(self, r) -> np.ndarray:
        """Pointwise potential (exact route only)."""
        if self.epsilon != 0.0 or self.density is None:
            raise NotImplementedError("pointwise evaluation is available for epsilon = 0 only")
        return _pointwise(self.density, np.asarray(r, dtype=float))


def _check_dim(n: int):
    if n < 3:
        raise ValueError(f"the Newtonian potential here needs n >= 3, got {n}")


def _exterior_sums(rho: DensityField) -> np.ndarray:
    """E_i = sum_{j >= i} rho_j (r_{j+1}^2 - r_j^2) / (2(n-2)), with E_N = 0."""
    g = rho.grid
    shell = rho.values * np.diff(g.edges**2) / (2 * (g.n - 2))
    return np.concatenate([np.cumsum(shell[::-1])[::-1], [0.0]])


def solve_poisson_radial(rho: DensityField) -> PotentialField:
    """Exact potential of a piecewise-constant density.

    Cell values are averages of the pointwise potential; face derivatives
    follow Gauss's law, ``c'(r) = -m(r) / (n alpha r^(n-1))`` with ``m(r)``
    the enclosed mass.  Outside ``r_max`` the potential is the Newtonian
    tail of the enclosed mass.
    """
    g = rho.grid
    n = g.n
    _check_dim(n)
    c_vals = CellPotential(g)(rho.values)
    rf = g.edges[1:-1]
    c_prime = -rho.enclosed_mass()[1:-1] / (n * g.alpha_n * rf ** (n - 1))
    return PotentialField(g, c_vals, c_prime, 0.0, rho)


class CellPotential:
    """Precomputed shell coefficients for repeated exact solves on one grid."""

    def __init__(self, grid: RadialGrid):
        n = grid.n
        _check_dim(n)
        a = grid.edges[:-1]
        b = grid.edges[1:]
        d2 = b**2 - a**2
        dn2 = (b ** (n + 2) - a ** (n + 2)) / (n + 2)
        self.volumes = grid.volumes
        self.shell = d2 / (2 * (n - 2))
        self.own = (
            grid.alpha_n / (n - 2) * (dn2 - a**n * d2 / 2)
            + (b**2 * grid.volumes - n * grid.alpha_n * dn2) / (2 * (n - 2))
        ) / grid.volumes

    def __call__(self, values: np.ndarray) -> np.ndarray:
        cm = np.cumsum(values * self.volumes)
        inner = np.empty_like(cm)
        inner[0] = 0.0
        inner[1:] = cm[:-1]
        s = values * self.shell
        outer = np.cumsum(s[::-1])[::-1] - s
        return inner * self.shell / self.volumes + values * self.own + outer


def _pointwise(rho: DensityField, r: np.ndarray) -> np.ndarray:
    g = rho.grid
    n = g.n
    k = 1.0 / (n * (n - 2) * g.alpha_n)
    enclosed = rho.enclosed_mass()
    ext = _exterior_sums(rho)
    out = np.empty_like(r)
    outside = r >= g.r_max
    out[outside] = k * enclosed[-1] * r[outside] ** (2 - n)
    ri = r[~outside]
    idx = np.clip(np.searchsorted(g.edges, ri, side="right") - 1, 0, g.cells - 1)
    a = g.edges[idx]
    b = g.edges[idx + 1]
    val = rho.values[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        m_in = enclosed[idx] + val * g.alpha_n * (ri**n - a**n)
        inner = np.where(ri > 0, k * m_in * ri ** (2.0 - n), 0.0)
    out[~outside] = inner + val * (b**2 - ri**2) / (2 * (n - 2)) + ext[idx + 1]
    return out


def _angular_kernel(n: int, r: np.ndarray, s: np.ndarray, eps: float) -> np.ndarray:
    """Sphere average of (|x-y|^2+eps^2)^(-(n-2)/2) with |x|=r, |y|=s."""
    if n == 3:
        # (1/(2rs))[sqrt((r+s)^2+e^2) - sqrt((r-s)^2+e^2)], rationalised
        return 2.0 / (np.sqrt((r + s) ** 2 + eps**2) + np.sqrt((r - s) ** 2 + eps**2))
    x, w = np.polynomial.legendre.leggauss(ANGULAR_POINTS)
    th = 0.5 * math.pi * (x + 1)
    wt = 0.5 * math.pi * w * np.sin(th) ** (n - 2)
    wt /= math.sqrt(math.pi) * math.exp(math.lgamma((n - 1) / 2) - math.lgamma(n / 2))
    cos = np.cos(th)
    acc = np.zeros(np.broadcast(r, s).shape)
    for ct, wk in zip(cos, wt):
        acc += wk * (r**2 + s**2 - 2 * r * s * ct + eps**2) ** (-(n - 2) / 2)
    return acc


def _diagonal_blocks(grid: RadialGrid, eps: float, order: int = DIAGONAL_POINTS) -> np.ndarray:
    """Self-interaction of each cell, with the inner integral split at s = r.

    The angular-averaged kernel has a kink along r = s; splitting there keeps
    Gauss-Legendre on smooth pieces.
    """
    n = grid.n
    x, w = np.polynomial.legendre.leggauss(order)
    a = grid.edges[:-1, None]
    h = np.diff(grid.edges)[:, None]
    r = a + 0.5 * h * (x + 1)  # (N, q)
    wr = 0.5 * h * w * n * grid.alpha_n * r ** (n - 1)
    total = np.zeros(grid.cells)
    for lo, hi in ((a, r), (r, a + h)):
        # nodes of [lo, hi] for every outer node: shape (N, q, q)
        half = 0.5 * (hi - lo)[:, :, None]
        s = lo[:, :, None] + half * (x + 1)
        ws = half * w * n * grid.alpha_n * s ** (n - 1)
        k = _angular_kernel(n, r[:, :, None], s, eps)
        total += np.einsum("iq,iqp,iqp->i", wr, k, ws)
    return total


def _regularized_matrix(grid: RadialGrid, eps: float, order: int) -> np.ndarray:
    """Symmetric B with ``B_ij = int_i int_j k_eps(x, y) dx dy``."""
    key = (grid.key(), float(eps), order)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        _KERNEL_CACHE.move_to_end(key)
        return hit
    n = grid.n
    coef = 1.0 / (n * (n - 2) * grid.alpha_n)
    r, wt = _gauss_nodes(grid, order)
    r = r.ravel()
    wt = wt.ravel()
    N = grid.cells
    B = np.empty((N, N))
    rows = max(1, 4096 // order)
    for start in range(0, N, rows):
        stop = min(N, start + rows)
        ri = r[start * order : stop * order, None]
        wi = wt[start * order : stop * order, None]
        blk = _angular_kernel(n, ri, r[None, :], eps) * wi * wt[None, :]
        blk = blk.reshape(stop - start, order, N, order).sum(axis=(1, 3))
        B[start:stop] = coef * blk
    B[np.diag_indices(N)] = coef * _diagonal_blocks(grid, eps)
    B = 0.5 * (B + B.T)
    B.setflags(write=False)
    _KERNEL_CACHE[key] = B
    if len(_KERNEL_CACHE) > _KERNEL_CACHE_SIZE:
        _KERNEL_CACHE.popitem(last=False)
    return B


def regularized_potential(
    rho: DensityField, epsilon: float, order: int = RADIAL_POINTS
) -> PotentialField:
    """Cell-averaged ``c_eps = k * int rho(y) (|x-y|^2+eps^2)^(-(n-2)/2) dy``.

    ``epsilon = 0`` is delegated to :func:`solve_poisson_radial`.  The face
    derivative is the centred difference of neighbouring cell averages.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    _check_dim(rho.grid.n)
    if epsilon == 0:
        return solve_poisson_radial(rho)
    g = rho.grid
    B = _regularized_matrix(g, epsilon, order)
    c = (B @ rho.values) / g.volumes
    c_prime = np.diff(c) / np.diff(g.centers)
    return PotentialField(g, c, c_prime, float(epsilon), rho)


def pairing(rho: DensityField, c: PotentialField) -> float:
    """``int rho c dx`` at the cell level."""
    return float(np.dot(rho.values * c.c_values, rho.grid.volumes))


def interaction_energy(rho: DensityField, epsilon: float = 0.0) -> float:
    """``W = int int rho(x) rho(y) (|x-y|^2+eps^2)^(-(n-2)/2) dx dy``.

    Evaluated through the potential pairing ``n(n-2)alpha(n) int rho c_eps``.
    """
    g = rho.grid
    c = regularized_potential(rho, epsilon)
    return g.n * (g.n - 2) * g.alpha_n * pairing(rho, c)
