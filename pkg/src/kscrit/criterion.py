"""Threshold constants and the initial-data classifier.

Everything here is a closed-form function of the dimension ``n``, the
diffusion exponent ``m`` and the total mass ``M0``.  The admissible exponent
range is the open interval ``(2n/(n+2), 2 - 2/n)``; at either end the powers
in ``s_star`` and ``f_star`` degenerate, so such parameters are rejected
when a :class:`ProblemParams` is built.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n, ``pi^(n/2) / Gamma(n/2 + 1)``."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def hls_constant(n: int) -> float:
    """Sharp constant of the Hardy-Littlewood-Sobolev inequality with kernel |x-y|^(2-n).

    ``pi^((n-2)/2) / Gamma(n/2+1) * (Gamma(n/2)/Gamma(n))^(-2/n)``
    """
    if n < 3:
        raise ValueError(f"the |x-y|^(2-n) kernel needs n >= 3, got {n}")
    ratio = math.exp(math.lgamma(n / 2) - math.lgamma(n))
    return math.pi ** ((n - 2) / 2) / math.gamma(n / 2 + 1) * ratio ** (-2.0 / n)


def critical_exponents(n: int) -> tuple[float, float]:
    """Return ``(m_c, m_star) = (2n/(n+2), 2 - 2/n)``."""
    if n < 3:
        raise ValueError(f"critical exponents are defined for n >= 3, got {n}")
    return 2 * n / (n + 2), 2 - 2 / n


ENDPOINT_RTOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """Dimension, diffusion exponent and total mass."""

    n: int
    m: float
    M0: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n}")
        m_c, m_star = critical_exponents(self.n)
        # values within rounding of an endpoint are that endpoint
        if not (m_c * (1 + ENDPOINT_RTOL) < self.m < m_star * (1 - ENDPOINT_RTOL)):
            raise ValueError(
                f"m={self.m} outside the admissible open interval "
                f"({m_c:.12g}, {m_star:.12g}) for n={self.n}"
            )
        if not (self.M0 > 0 and math.isfinite(self.M0)):
            raise ValueError(f"total mass must be positive, got {self.M0}")

    def with_mass(self, M0: float) -> "ProblemParams":
        return ProblemParams(self.n, self.m, M0)


def admissible_interval(n: int) -> tuple[float, float]:
    return critical_exponents(n)


def _exponents(n: int, m: float):
    # mass exponent in f, power of s in the interaction term, and the s_star power
    mass_exp = (2 * n - m * (n + 2)) / (n - 2)
    s_power = (n - 2) / (n * (m - 1))
    star_exp = n * (m - 1) / (2 * n - 2 - m * n)
    return mass_exp, s_power, star_exp


def _hls_prefactor(n: int) -> float:
    """C(n) / (2 (n-2) n alpha(n)), the weight of the norm term in f."""
    return hls_constant(n) / (2 * (n - 2) * n * unit_ball_volume(n))


def f_eval(params: ProblemParams, s: float) -> float:
    """The concave profile ``f(s)`` bounding the first free-energy part from below."""
    if s < 0:
        raise ValueError(f"f is defined for s >= 0, got {s}")
    n, m, M0 = params.n, params.m, params.M0
    mass_exp, s_power, _ = _exponents(n, m)
    return M0**mass_exp * s / (m - 1) - _hls_prefactor(n) * s**s_power


def f_prime(params: ProblemParams, s: float) -> float:
    n, m, M0 = params.n, params.m, params.M0
    mass_exp, s_power, _ = _exponents(n, m)
    return M0**mass_exp / (m - 1) - _hls_prefactor(n) * s_power * s ** (s_power - 1)


@dataclass(frozen=True)
class CriterionConstants:
    params: ProblemParams
    alpha_n: float
    c_hls: float
    m_c: float
    m_star: float
    theta: float
    s_star: float
    f_star: float
    threshold_norm: float

    def as_dict(self) -> dict[str, float]:
        return {
            "alpha_n": self.alpha_n,
            "c_hls": self.c_hls,
            "m_c": self.m_c,
            "m_star": self.m_star,
            "theta": self.theta,
            "s_star": self.s_star,
            "f_star": self.f_star,
            "threshold_norm": self.threshold_norm,
        }


# consistency tolerance between the closed forms and the maximiser of f
_SELF_CHECK_RTOL = 1e-10


def compute_constants(params: ProblemParams) -> CriterionConstants:
    """Evaluate every threshold constant for ``params`` and self-check them.

    ``s_star`` is the unique maximiser of ``f``; ``f_star = f(s_star)`` is
    taken from its closed form and compared against direct evaluation.
    """
    n, m, M0 = params.n, params.m, params.M0
    m_c, m_star = critical_exponents(n)
    if not (m_c < m < m_star):
        raise ValueError(f"m={m} outside ({m_c}, {m_star})")
    alpha = unit_ball_volume(n)
    c_hls = hls_constant(n)
    mass_exp, _, star_exp = _exponents(n, m)
    base = 2 * n**2 * alpha / c_hls

    try:
        s_star = (base * M0**mass_exp) ** star_exp
        coeff = (2 - 2 / n - m) / ((m - 1) * (1 - 2 / n))
        f_star = coeff * base**star_exp * M0 ** ((2 * n - m * (n + 2)) / (2 * n - 2 - m * n))
    except OverflowError:
        raise ValueError(
            f"constants overflow for m={m!r}; it is too close to an end of the "
            f"admissible interval ({m_c:.12g}, {m_star:.12g})"
        ) from None
    if not (math.isfinite(s_star) and math.isfinite(f_star) and s_star > 0):
        raise ValueError(f"constants are not finite for m={m!r} (admissible interval ({m_c:.12g}, {m_star:.12g}))")
    threshold = s_star ** ((n - 2) / (2 * n * (m - 1)))
    theta = m * (n - 2) / (2 * n * (m - 1))

    # f'(s*) = 0: the two terms of f' must cancel
    lead = M0**mass_exp / (m - 1)
    if abs(f_prime(params, s_star)) > _SELF_CHECK_RTOL * lead:
        raise ArithmeticError(f"f'(s_star) does not vanish for {params}")
    direct = f_eval(params, s_star)
    if abs(direct - f_star) > _SELF_CHECK_RTOL * abs(f_star):
        raise ArithmeticError(f"f(s_star)={direct!r} disagrees with closed form {f_star!r}")

    return CriterionConstants(
        params=params,
        alpha_n=alpha,
        c_hls=c_hls,
        m_c=m_c,
        m_star=m_star,
        theta=theta,
        s_star=s_star,
        f_star=f_star,
        threshold_norm=threshold,
    )


class Regime(enum.Enum):
    GLOBAL_EXISTENCE = "GlobalExistence"
    BLOW_UP = "BlowUp"
    OUTSIDE_THEOREM_SCOPE = "OutsideTheoremScope"


@dataclass(frozen=True)
class Classification:
    norm_2n_np2: float
    free_energy0: float
    regime: Regime
    threshold_norm: float
    f_star: float

    @property
    def norm_margin(self) -> float:
        """``threshold_norm - norm``; positive on the subcritical side."""
        return self.threshold_norm - self.norm_2n_np2

    @property
    def energy_margin(self) -> float:
        """``f_star - F(rho0)``; positive when the energy hypothesis holds."""
        return self.f_star - self.free_energy0


def classify_initial_data(
    params: ProblemParams, norm_2n_np2: float, free_energy0: float
) -> Classification:
    """Place initial data in one of the three regimes.

    Only strict inequalities lead to a definite regime; equality in either
    the energy or the norm comparison is reported as outside scope.
    """
    if norm_2n_np2 < 0:
        raise ValueError("norm must be nonnegative")
    const = compute_constants(params)
    regime = Regime.OUTSIDE_THEOREM_SCOPE
    if free_energy0 < const.f_star:
        if norm_2n_np2 < const.threshold_norm:
            regime = Regime.GLOBAL_EXISTENCE
        elif norm_2n_np2 > const.threshold_norm:
            regime = Regime.BLOW_UP
    return Classification(
        norm_2n_np2=float(norm_2n_np2),
        free_energy0=float(free_energy0),
        regime=regime,
        threshold_norm=const.threshold_norm,
        f_star=const.f_star,
    )
