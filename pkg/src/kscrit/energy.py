"""Free energy and the diagnostics built on it.

All integrals reuse the exact shell volumes of the grid and the symmetric
cell-level potential pairing, so algebraic identities such as
``F = F1 + F2`` hold to rounding error.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .criterion import CriterionConstants, ProblemParams, f_eval, hls_constant
from .potential import pairing, regularized_potential, solve_poisson_radial
from .radial import DensityField, integral_power, lp_norm, second_moment


def internal_energy_density(values: np.ndarray, m: float, epsilon: float = 0.0) -> np.ndarray:
    """``(rho+eps)^m - eps^m``; reduces to ``rho^m`` at eps = 0."""
    if epsilon == 0:
        return values**m
    return epsilon**m * np.expm1(m * np.log1p(values / epsilon))


def free_energy(rho: DensityField, m: float, epsilon: float = 0.0) -> float:
    """``1/(m-1) int ((rho+eps)^m - eps^m) - 1/2 int rho c_eps``."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    c = regularized_potential(rho, epsilon)
    internal = float(np.dot(internal_energy_density(rho.values, m, epsilon), rho.grid.volumes))
    return internal / (m - 1) - 0.5 * pairing(rho, c)


def _norm_weight(n: int, alpha: float) -> float:
    return hls_constant(n) / (2 * (n - 2) * n * alpha)


def energy_split(rho: DensityField, m: float) -> tuple[float, float]:
    """Split the (unregularised) free energy into ``F1 + F2``.

    ``F1`` keeps the internal energy minus the HLS bound on the interaction,
    ``F2`` is the HLS defect, nonnegative in the continuum.
    """
    g = rho.grid
    k = _norm_weight(g.n, g.alpha_n)
    norm2 = lp_norm(rho, 2 * g.n / (g.n + 2)) ** 2
    half_pair = 0.5 * pairing(rho, solve_poisson_radial(rho))
    f1 = integral_power(rho, m) / (m - 1) - k * norm2
    f2 = k * norm2 - half_pair
    return f1, f2


def f1_lower_bound_check(rho: DensityField, constants: CriterionConstants) -> tuple[float, float]:
    """Return ``(F1, f(s))`` with ``s = ||rho||_{2n/(n+2)}^(2n(m-1)/(n-2))``.

    ``f`` is evaluated with the field's own mass; ``F1 >= f(s)`` follows
    from interpolation between L^1 and L^m.
    """
    mass = rho.mass
    if not mass > 0:
        raise ValueError("the interpolation bound needs positive mass")
    n, m = constants.params.n, constants.params.m
    f1, _ = energy_split(rho, m)
    s = lp_norm(rho, 2 * n / (n + 2)) ** (2 * n * (m - 1) / (n - 2))
    return f1, f_eval(ProblemParams(n, m, mass), s)


def virial_coefficient(n: int, m: float) -> float:
    """``2n - 2(n-2)/(m-1)``, negative for every m below 2 - 2/n."""
    return 2 * n - 2 * (n - 2) / (m - 1)


def dm2dt_formula(rho: DensityField, m: float) -> float:
    """Virial identity ``dm2/dt = (2n - 2(n-2)/(m-1)) int rho^m + 2(n-2) F``."""
    n = rho.grid.n
    coef = virial_coefficient(n, m)
    if not coef < 0:
        raise ValueError(f"virial coefficient {coef} is not negative; m={m} >= 2-2/n")
    return coef * integral_power(rho, m) + 2 * (n - 2) * free_energy(rho, m)


def porous_medium_dm2dt(rho: DensityField, m: float) -> float:
    """Virial identity without attraction: ``2n int rho^m``."""
    return 2 * rho.grid.n * integral_power(rho, m)


def mass_bound_constant(n: int, m: float, alpha: float) -> float:
    """Prefactor of ``||rho||_1 <= K ||rho||_m^a m2^b``.

    Hoelder on the ball ``B_R`` gives ``alpha^((m-1)/m) R^(n(m-1)/m) ||rho||_m``
    and Chebyshev bounds the outside by ``m2 / R^2``.  Choosing R where the two
    terms are equal yields ``K = 2 alpha^(2(m-1)/((m-1)n+2m))``.
    """
    return 2.0 * alpha ** (2 * (m - 1) / ((m - 1) * n + 2 * m))


def mass_lower_bound_check(rho: DensityField, m: float) -> tuple[float, float]:
    """Return ``(mass, bound)``; the bound forces ``||rho||_m -> inf`` as ``m2 -> 0``.

    A positive mass with zero second moment returns ``bound = 0`` so the
    violation is visible to the caller.
    """
    g = rho.grid
    n = g.n
    mass = rho.mass
    if not mass > 0:
        raise ValueError("mass bound needs positive mass")
    m2 = second_moment(rho)
    denom = (m - 1) * n + 2 * m
    K = mass_bound_constant(n, m, g.alpha_n)
    bound = K * lp_norm(rho, m) ** (2 * m / denom) * m2 ** (n * (m - 1) / denom)
    return mass, bound


@dataclass(frozen=True)
class EnergyReport:
    free_energy: float
    f1: float
    f2: float
    lm_norm: float
    l_crit_norm: float
    mass: float
    m2: float
    dm2dt_formula: float
    epsilon: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def energy_report(rho: DensityField, m: float, epsilon: float = 0.0) -> EnergyReport:
    """All free-energy diagnostics of one state.

    ``free_energy`` honours ``epsilon``; the split and the virial formula use
    the limit (eps = 0) functional.
    """
    n = rho.grid.n
    f1, f2 = energy_split(rho, m)
    F = free_energy(rho, m, epsilon)
    coef = virial_coefficient(n, m)
    return EnergyReport(
        free_energy=F,
        f1=f1,
        f2=f2,
        lm_norm=lp_norm(rho, m),
        l_crit_norm=lp_norm(rho, 2 * n / (n + 2)),
        mass=rho.mass,
        m2=second_moment(rho),
        dm2dt_formula=coef * integral_power(rho, m)
        + 2 * (n - 2) * (F if epsilon == 0 else free_energy(rho, m)),
        epsilon=epsilon,
    )
