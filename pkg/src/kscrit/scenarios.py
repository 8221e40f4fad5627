"""Initial data: the small-mass ball of Example 1 and a library of named profiles.

The ball ``rho0 = eps0 K^n / alpha(n)`` on ``|x| <= 1/K`` has mass ``eps0``
and is supercritical once ``K`` exceeds two thresholds, one per hypothesis
of the blow-up criterion.  ``K1`` comes from the norm condition and has a
closed form; ``K2`` comes from the energy condition, which mixes two powers
of ``K`` and is solved numerically.

Gaussian scenarios are parametrised by the ratio of their critical norm to
the threshold norm.  Both classification quantities are invariant under the
mass-preserving dilations and the scaling symmetry of the equation, so the
ratio alone decides the regime of a Gaussian; the mass only sets the units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .criterion import (
    Classification,
    ProblemParams,
    Regime,
    classify_initial_data,
    compute_constants,
    hls_constant,
    unit_ball_volume,
)
from .energy import free_energy
from .radial import DensityField, RadialGrid, aligned_grid, lp_norm, make_grid, project_profile

BRACKET_RTOL = 1e-10


def _critical_p(n: int) -> float:
    return 2 * n / (n + 2)


# --- Example 1 ------------------------------------------------------------

@dataclass(frozen=True)
class Example1Params:
    params: ProblemParams
    eps0: float
    K: float
    K1: float
    K2: float

    @property
    def K0(self) -> float:
        return max(self.K1, self.K2)

    @property
    def radius(self) -> float:
        return 1.0 / self.K

    @property
    def amplitude(self) -> float:
        return self.eps0 * self.K**self.params.n / unit_ball_volume(self.params.n)

    def with_K(self, K: float) -> "Example1Params":
        return Example1Params(self.params, self.eps0, K, self.K1, self.K2)


def _gap(n: int, m: float) -> float:
    return 2 * n - 2 - m * n


def norm_condition_sides(n: int, m: float, eps0: float, K: float) -> tuple[float, float]:
    """Both sides of the norm condition; it holds when ``lhs > rhs``."""
    a = unit_ball_volume(n)
    g = _gap(n, m)
    lhs = eps0 ** (1 + (m * (n + 2) - 2 * n) / (2 * g)) * K ** ((n - 2) / 2)
    rhs = a ** ((n - 2) / (2 * n)) * (2 * n**2 * a / hls_constant(n)) ** ((n - 2) / (2 * g))
    return lhs, rhs


def _energy_log_terms(n: int, m: float, eps0: float) -> tuple[float, float, float]:
    """``(log L, log A, log B)`` with ``lhs = L K^(n(m-1))`` and ``rhs = A K^(n-2) + B``."""
    a = unit_ball_volume(n)
    g = _gap(n, m)
    shift = (m * (n + 2) - 2 * n) / g
    le = math.log(eps0)
    log_L = (m + shift) * le + (1 - m) * math.log(a)
    log_A = math.log((m - 1) * 2.0 ** (2 - n) / (2 * (n - 2) * n * a)) + (2 + shift) * le
    log_B = math.log((2 - 2 / n - m) / (1 - 2 / n)) + n * (m - 1) / g * math.log(2 * n**2 * a / hls_constant(n))
    return log_L, log_A, log_B


def _energy_log_gap(n: int, m: float, eps0: float, u: float) -> float:
    """``log(rhs) - log(lhs)`` of the energy condition at ``K = e^u``."""
    log_L, log_A, log_B = _energy_log_terms(n, m, eps0)
    return float(np.logaddexp(log_A + (n - 2) * u, log_B)) - (log_L + n * (m - 1) * u)


def energy_condition_sides(n: int, m: float, eps0: float, K: float) -> tuple[float, float]:
    """Both sides of the energy condition; it holds when ``lhs < rhs``."""
    log_L, log_A, log_B = _energy_log_terms(n, m, eps0)
    lhs = math.exp(log_L) * K ** (n * (m - 1))
    rhs = math.exp(log_A) * K ** (n - 2) + math.exp(log_B)
    return lhs, rhs


def norm_condition_holds(n: int, m: float, eps0: float, K: float) -> bool:
    lhs, rhs = norm_condition_sides(n, m, eps0, K)
    return lhs > rhs


def energy_condition_holds(n: int, m: float, eps0: float, K: float) -> bool:
    return _energy_log_gap(n, m, eps0, math.log(K)) > 0


def _log_k1(n: int, m: float, eps0: float) -> float:
    a = unit_ball_volume(n)
    g = _gap(n, m)
    log_rhs = (n - 2) / (2 * n) * math.log(a) + (n - 2) / (2 * g) * math.log(2 * n**2 * a / hls_constant(n))
    log_coef = (1 + (m * (n + 2) - 2 * n) / (2 * g)) * math.log(eps0)
    return 2 / (n - 2) * (log_rhs - log_coef)


def _log_k2(n: int, m: float, eps0: float) -> float:
    """Log of the K above which the energy condition holds for good.

    ``h(u) = log(rhs) - log(lhs)`` at ``K = e^u`` is convex, positive at both
    ends, and minimal where ``A K^(n-2) = B k1 / (k2 - k1)`` with
    ``k1 = n(m-1) < k2 = n-2``.  If the minimum is positive the condition
    always holds and ``-inf`` is returned; otherwise the larger root lies
    between the minimiser and an upper bound grown until h turns positive.
    """
    log_L, log_A, log_B = _energy_log_terms(n, m, eps0)
    k1, k2 = n * (m - 1), n - 2
    u_min = (log_B + math.log(k1 / (k2 - k1)) - log_A) / k2
    h = lambda u: _energy_log_gap(n, m, eps0, u)
    if h(u_min) > 0:
        return -math.inf
    step = 1.0
    hi = u_min + step
    while h(hi) <= 0:
        step *= 2
        hi = u_min + step
        if step > 1e6:
            raise ArithmeticError("energy condition never holds at large K")
    return brentq(h, u_min, hi, xtol=1e-14, rtol=BRACKET_RTOL / 4)


def _exp_threshold(log_k: float, which: str, m: float) -> float:
    if log_k == -math.inf:
        return 0.0
    if log_k > 700:
        raise ValueError(f"{which} = e^{log_k:.4g} overflows for m={m}; too close to an end of the admissible interval")
    return math.exp(log_k)


def example1_thresholds(params: ProblemParams, eps0: float, K_mult: float = 2.0) -> Example1Params:
    """Thresholds ``K1, K2`` for the ball of mass ``eps0``; ``K = K_mult * K0``."""
    if not (eps0 > 0 and math.isfinite(eps0)):
        raise ValueError(f"eps0 must be positive, got {eps0}")
    if not K_mult > 0:
        raise ValueError("K_mult must be positive")
    n, m = params.n, params.m
    p = params.with_mass(eps0)
    K1 = _exp_threshold(_log_k1(n, m, eps0), "K1", m)
    K2 = _exp_threshold(_log_k2(n, m, eps0), "K2", m)
    K0 = max(K1, K2)
    return Example1Params(p, eps0, K_mult * K0, K1, K2)


def example1_grid(e: Example1Params, cells: int = 256, outer: float = 2.0) -> RadialGrid:
    """Grid on ``[0, outer/K]`` with an edge at the ball radius."""
    return aligned_grid(e.params.n, e.radius, outer * e.radius, cells)


def example1_density(grid: RadialGrid, e: Example1Params) -> DensityField:
    """The ball of mass ``eps0`` and radius ``1/K``; ``grid`` needs an edge there."""
    R = e.radius
    hit = np.isclose(grid.edges, R, rtol=1e-13, atol=0.0)
    if not hit.any():
        raise ValueError(f"grid has no edge at the ball radius {R!r}")
    idx = int(np.argmax(hit))
    vol = grid.alpha_n * grid.edges[idx] ** grid.n
    if not (vol > 0 and math.isfinite(e.eps0 / vol)):
        raise ValueError(f"ball of radius {R:.3e} is not representable in floating point")
    vals = np.zeros(grid.cells)
    # the amplitude is rescaled so the mass is exact for the actual edge
    vals[:idx] = e.eps0 / vol
    return DensityField(grid, vals)


def example1_energy_upper_bound(e: Example1Params) -> float:
    """The closed-form upper bound on ``F(rho0)`` obtained from ``|x-y| <= 2/K``."""
    n, m = e.params.n, e.params.m
    a = unit_ball_volume(n)
    K, eps0 = e.K, e.eps0
    return eps0**m / (m - 1) * K ** (n * (m - 1)) * a ** (1 - m) - 2.0 ** (2 - n) / (
        2 * (n - 2) * n * a
    ) * eps0**2 * K ** (n - 2)


# --- Gaussian profiles ----------------------------------------------------

def gaussian_critical_norm(n: int, mass: float, sigma: float) -> float:
    """Exact ``L^{2n/(n+2)}`` norm of the Gaussian of given mass and std ``sigma``."""
    p = _critical_p(n)
    return mass * (2 * math.pi * sigma**2) ** (-(n - 2) / 4) * p ** (-(n + 2) / 4)


def gaussian_sigma_for_norm(n: int, mass: float, norm: float) -> float:
    p = _critical_p(n)
    X = (norm / (mass * p ** (-(n + 2) / 4))) ** (-4 / (n - 2))
    return math.sqrt(X / (2 * math.pi))


def gaussian_profile(n: int, mass: float, sigma: float) -> Callable[[np.ndarray], np.ndarray]:
    amp = mass / (2 * math.pi * sigma**2) ** (n / 2)
    return lambda r: amp * np.exp(-0.5 * (r / sigma) ** 2)


# the Gaussian tail beyond 7 sigma holds far less than 1e-8 of the mass in n <= 6
GAUSSIAN_EXTENT = 7.0


def gaussian_density(
    grid: RadialGrid, mass: float, sigma: float, renormalize: bool = True
) -> DensityField:
    rho = project_profile(grid, gaussian_profile(grid.n, mass, sigma))
    if renormalize:
        rho = rho.scaled(mass / rho.mass)
    return rho


# --- scenario library -----------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Recipe for a grid; ``spacing="aligned"`` puts an edge at ``radius``."""

    r_max: float
    cells: int
    spacing: str = "uniform"
    ratio: float = 1.05
    max_width: float | None = None
    radius: float | None = None

    def build(self, n: int) -> RadialGrid:
        if self.spacing == "aligned":
            if self.radius is None:
                raise ValueError("aligned spacing needs a radius")
            return aligned_grid(n, self.radius, self.r_max, self.cells)
        return make_grid(n, self.r_max, self.cells, self.spacing, self.ratio, self.max_width)


@dataclass(frozen=True)
class Scenario:
    """A named initial datum with the regime it is built to have."""

    name: str
    description: str
    params: ProblemParams
    expected: Regime
    grid: GridSpec
    on_grid: Callable[[RadialGrid], DensityField]

    def density(self, grid: RadialGrid | None = None) -> DensityField:
        return self.on_grid(self.grid.build(self.params.n) if grid is None else grid)

    def classify(self, rho: DensityField | None = None) -> Classification:
        rho = self.density() if rho is None else rho
        return classify_density(self.params, rho)


def classify_density(params: ProblemParams, rho: DensityField) -> Classification:
    """Classify ``rho`` with its own mass, norm and free energy."""
    p = params.with_mass(rho.mass)
    return classify_initial_data(p, lp_norm(rho, _critical_p(p.n)), free_energy(rho, p.m))


def gaussian_scenario(
    name: str,
    description: str,
    params: ProblemParams,
    mass: float,
    norm_ratio: float,
    expected: Regime,
    cells: int,
) -> Scenario:
    """Gaussian of the given mass whose critical norm is ``norm_ratio`` times the threshold."""
    p = params.with_mass(mass)
    thr = compute_constants(p).threshold_norm
    sigma = gaussian_sigma_for_norm(params.n, mass, norm_ratio * thr)
    spec = GridSpec(GAUSSIAN_EXTENT * sigma, cells)
    return Scenario(name, description, p, expected, spec, lambda g: gaussian_density(g, mass, sigma))


WIDE_NORM_RATIO = 0.2
HEAVY_NORM_RATIO = 0.5
HEAVY_MASS_FACTOR = 100.0
NEAR_NORM_RATIO = 0.995
SUPERCRITICAL_NORM_RATIO = 15.0
SUPERCRITICAL_CELLS = 1400

SCENARIO_NAMES = ("wide-subcritical", "example1", "heavy-subcritical", "near-threshold", "supercritical")


def scenario_library(params: ProblemParams, cells: int = 2048, K_mult: float = 2.0) -> dict[str, Scenario]:
    """Named scenarios keyed by their stable identifiers.

    ``params.M0`` is the mass of every scenario except ``heavy-subcritical``,
    which carries ``HEAVY_MASS_FACTOR`` times more yet stays below the
    threshold norm.  For ``example1`` the mass plays the role of ``eps0``.
    ``cells`` sets the resolution of the subcritical Gaussians; the
    supercritical one has its own, finer relative to its width.
    """
    M = params.M0
    e = example1_thresholds(params, M, K_mult)
    return {
        "wide-subcritical": gaussian_scenario(
            "wide-subcritical",
            f"wide low Gaussian, critical norm at {WIDE_NORM_RATIO:g} of the threshold",
            params, M, WIDE_NORM_RATIO, Regime.GLOBAL_EXISTENCE, cells,
        ),
        "example1": Scenario(
            "example1",
            f"uniform ball of mass eps0={M:g} and radius 1/K with K={K_mult:g} K0",
            e.params,
            Regime.BLOW_UP,
            GridSpec(2 * e.radius, 256, "aligned", radius=e.radius),
            lambda g: example1_density(g, e),
        ),
        "heavy-subcritical": gaussian_scenario(
            "heavy-subcritical",
            f"Gaussian with {HEAVY_MASS_FACTOR:g}x the mass, widened to "
            f"{HEAVY_NORM_RATIO:g} of the threshold norm",
            params, HEAVY_MASS_FACTOR * M, HEAVY_NORM_RATIO, Regime.GLOBAL_EXISTENCE, cells,
        ),
        "near-threshold": gaussian_scenario(
            "near-threshold",
            f"Gaussian with critical norm at {NEAR_NORM_RATIO:g} of the threshold; its energy exceeds F*",
            params, M, NEAR_NORM_RATIO, Regime.OUTSIDE_THEOREM_SCOPE, cells,
        ),
        "supercritical": gaussian_scenario(
            "supercritical",
            f"compact Gaussian at {SUPERCRITICAL_NORM_RATIO:g}x the threshold norm",
            params, M, SUPERCRITICAL_NORM_RATIO, Regime.BLOW_UP, SUPERCRITICAL_CELLS,
        ),
    }
