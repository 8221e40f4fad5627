"""Radially symmetric densities on cell-centred grids.

A grid is a list of shell edges ``0 = r_0 < r_1 < ... < r_N = r_max``.
Cell volumes, face areas and second-moment weights are exact shell
integrals (differences of powers of r), so piecewise-constant data aligned
with the edges are integrated without quadrature error.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .criterion import unit_ball_volume

DEFAULT_GEOMETRIC_RATIO = 1.05
MIN_CELLS = 8


@dataclass(frozen=True, eq=False)
class RadialGrid:
    n: int
    edges: np.ndarray
    alpha_n: float = field(init=False)
    centers: np.ndarray = field(init=False)
    volumes: np.ndarray = field(init=False)
    face_areas: np.ndarray = field(init=False)
    moment_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("need at least two edges")
        if edges[0] != 0.0:
            raise ValueError("first edge must be 0")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("edges must be strictly increasing")
        edges = edges.copy()
        edges.setflags(write=False)
        n = int(self.n)
        alpha = unit_ball_volume(n)
        set_ = object.__setattr__
        set_(self, "edges", edges)
        set_(self, "alpha_n", alpha)
        set_(self, "centers", _frozen(0.5 * (edges[1:] + edges[:-1])))
        set_(self, "volumes", _frozen(alpha * np.diff(edges**n)))
        # interior faces only; the faces at r = 0 and r = r_max carry no flux
        set_(self, "face_areas", _frozen(n * alpha * edges[1:-1] ** (n - 1)))
        set_(self, "moment_weights", _frozen(n * alpha * np.diff(edges ** (n + 2)) / (n + 2)))

    @property
    def cells(self) -> int:
        return self.edges.size - 1

    @property
    def r_max(self) -> float:
        return float(self.edges[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def total_volume(self) -> float:
        return self.alpha_n * self.r_max**self.n

    def key(self) -> tuple:
        """Hashable identity, used to cache grid-dependent operators."""
        return (self.n, self.edges.tobytes())


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def make_grid(
    n: int,
    r_max: float,
    cells: int,
    spacing: str = "uniform",
    ratio: float = DEFAULT_GEOMETRIC_RATIO,
    max_width: float | None = None,
) -> RadialGrid:
    """Build a grid on ``[0, r_max]``.

    ``spacing="geometric"`` makes each cell ``ratio`` times wider than the
    previous one, so resolution concentrates at the origin.  With
    ``max_width`` the widths stop growing at that value and the grid turns
    uniform further out; the first width is then chosen so that exactly
    ``cells`` cells fill ``[0, r_max]``.
    """
    if not r_max > 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    if cells < MIN_CELLS:
        raise ValueError(f"need at least {MIN_CELLS} cells, got {cells}")
    k = np.arange(cells + 1, dtype=float)
    if spacing == "uniform":
        edges = r_max * k / cells
    elif spacing == "geometric":
        if not ratio > 1:
            raise ValueError(f"geometric ratio must exceed 1, got {ratio}")
        if max_width is not None:
            return RadialGrid(n, _capped_geometric(r_max, cells, ratio, max_width))
        lq = math.log(ratio)
        # r_k = r_max (q^k - 1)/(q^N - 1), written to avoid overflow for large N
        edges = r_max * np.exp((k - cells) * lq) * np.expm1(-k * lq) / math.expm1(-cells * lq)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    edges[0] = 0.0
    edges[-1] = r_max
    return RadialGrid(n, edges)


def _capped_geometric(r_max: float, cells: int, ratio: float, cap: float) -> np.ndarray:
    if cap * cells < r_max:
        raise ValueError(f"{cells} cells of width <= {cap} cannot cover r_max={r_max}")
    k = np.arange(cells)

    def widths(h0):
        return np.minimum(h0 * ratio**np.minimum(k, 4000), cap)

    lo, hi = 0.0, cap
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if widths(mid).sum() > r_max:
            hi = mid
        else:
            lo = mid
    w = widths(hi)
    w *= r_max / w.sum()
    edges = np.concatenate([[0.0], np.cumsum(w)])
    edges[-1] = r_max
    return edges


def aligned_grid(n: int, radius: float, r_max: float, cells: int) -> RadialGrid:
    """Piecewise-uniform grid with an edge exactly at ``radius``."""
    if not 0 < radius < r_max:
        raise ValueError("need 0 < radius < r_max")
    inner = max(1, min(cells - 1, round(cells * radius / r_max)))
    if cells < MIN_CELLS:
        raise ValueError(f"need at least {MIN_CELLS} cells, got {cells}")
    e_in = radius * np.arange(inner + 1) / inner
    e_out = radius + (r_max - radius) * np.arange(1, cells - inner + 1) / (cells - inner)
    edges = np.concatenate([e_in, e_out])
    edges[inner] = radius
    edges[-1] = r_max
    return RadialGrid(n, edges)


@dataclass(frozen=True, eq=False)
class DensityField:
    """Cell averages of a nonnegative radial density."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.cells,):
            raise ValueError(f"expected {self.grid.cells} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return float(np.dot(self.values, self.grid.volumes))

    @property
    def tail_mass(self) -> float:
        """Mass in the outermost cell, the truncation indicator."""
        return float(self.values[-1] * self.grid.volumes[-1])

    def scaled(self, factor: float) -> "DensityField":
        return DensityField(self.grid, factor * self.values)

    def enclosed_mass(self) -> np.ndarray:
        """Mass inside each edge, starting with 0 at the origin."""
        return np.concatenate([[0.0], np.cumsum(self.values * self.grid.volumes)])


def lp_norm(rho: DensityField, p: float) -> float:
    """``(sum rho_i^p vol_i)^(1/p)``; ``p = 1`` is the mass."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    total = float(np.dot(rho.values**p, rho.grid.volumes))
    return total ** (1.0 / p)


def integral_power(rho: DensityField, p: float) -> float:
    """``sum rho_i^p vol_i`` without the outer root."""
    return float(np.dot(rho.values**p, rho.grid.volumes))


def second_moment(rho: DensityField) -> float:
    """``int |x|^2 rho dx`` with exact per-shell weights."""
    return float(np.dot(rho.values, rho.grid.moment_weights))


def _gauss_nodes(grid: RadialGrid, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    a = grid.edges[:-1, None]
    h = np.diff(grid.edges)[:, None]
    r = a + 0.5 * h * (x[None, :] + 1)
    wt = 0.5 * h * w[None, :] * grid.n * grid.alpha_n * r ** (grid.n - 1)
    return r, wt


def project_profile(
    grid: RadialGrid, profile: Callable[[np.ndarray], np.ndarray], order: int = 8
) -> DensityField:
    """Cell averages of ``profile(r)`` by Gauss-Legendre quadrature in each shell."""
    if order < 4:
        raise ValueError("use at least 4 quadrature points per cell")
    r, wt = _gauss_nodes(grid, order)
    vals = np.asarray(profile(r), dtype=float)
    vals = np.broadcast_to(vals, r.shape)
    if np.any(vals < 0):
        raise ValueError("profile must be nonnegative on [0, r_max]")
    avg = (vals * wt).sum(axis=1) / wt.sum(axis=1)
    return DensityField(grid, avg)


def extremal_density(r, n: int, lam: float):
    """Pointwise value of the HLS extremal ``U_lambda`` centred at the origin."""
    r = np.asarray(r, dtype=float)
    return 2 ** ((n + 2) / 4) * n ** ((n + 2) / 2) * (lam / (lam**2 + r**2)) ** ((n + 2) / 2)


def extremal_profile(grid: RadialGrid, lam: float, order: int = 8) -> DensityField:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return project_profile(grid, lambda r: extremal_density(r, grid.n, lam), order=order)


# --- snapshot files -------------------------------------------------------

def write_snapshot(rho: DensityField, path: str | os.PathLike) -> None:
    """Plain-text snapshot: header, then ``r_center value`` per line.

    An extra ``# edges=`` header line records the exact cell edges so that
    non-uniform grids reload identically.
    """
    g = rho.grid
    lines = [
        f"# n={g.n} r_max={g.r_max:.17g} cells={g.cells}",
        "# edges= " + " ".join(f"{e:.17g}" for e in g.edges),
    ]
    lines += [f"{c:.17g} {v:.17g}" for c, v in zip(g.centers, rho.values)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path: str | os.PathLike) -> DensityField:
    header: dict[str, str] = {}
    edges = None
    rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("edges="):
                    edges = np.array([float(t) for t in body[len("edges="):].split()])
                    continue
                for tok in body.split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        header[k] = v
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"malformed snapshot line: {line!r}")
            rows.append((float(parts[0]), float(parts[1])))
    try:
        n = int(header["n"])
        r_max = float(header["r_max"])
        cells = int(header["cells"])
    except KeyError as exc:
        raise ValueError(f"snapshot header lacks {exc.args[0]!r}") from None
    if len(rows) != cells:
        raise ValueError(f"header says {cells} cells, file has {len(rows)}")
    data = np.array(rows)
    if edges is None:
        # centres are midpoints, so edges follow by reflection
        edges = np.empty(cells + 1)
        edges[0] = 0.0
        for i, c in enumerate(data[:, 0]):
            edges[i + 1] = 2 * c - edges[i]
        edges[-1] = r_max
    return DensityField(RadialGrid(n, edges), data[:, 1])
