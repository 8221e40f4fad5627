import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import mp_k1, mp_k2
from kscrit import (
    SCENARIO_NAMES,
    ProblemParams,
    Regime,
    classify_density,
    compute_constants,
    critical_exponents,
    example1_density,
    example1_grid,
    example1_thresholds,
    free_energy,
    lp_norm,
    make_grid,
    scenario_library,
    second_moment,
    unit_ball_volume,
)
from kscrit.scenarios import (
    energy_condition_holds,
    example1_energy_upper_bound,
    gaussian_critical_norm,
    gaussian_density,
    gaussian_sigma_for_norm,
    norm_condition_holds,
)


def admissible_m(n, u):
    lo, hi = critical_exponents(n)
    return lo + u * (hi - lo)


# ten (n, m, eps0) points spread over dimensions, exponents and masses
GRID10 = [
    (3, 1.25, 1.0), (3, 1.22, 0.3), (3, 1.3, 5.0), (3, 1.3, 0.05), (4, 1.4, 0.5),
    (4, 1.36, 2.0), (4, 1.48, 1.0), (5, 1.5, 1.0), (5, 1.45, 0.2), (6, 1.6, 3.0),
]


def test_reference_k1():
    e = example1_thresholds(ProblemParams(3, 1.25, 1.0), 1.0)
    assert e.K1 == pytest.approx(1.8813e6, rel=1e-4)
    assert e.K2 == pytest.approx(3.8296e8, rel=1e-4)
    assert e.K0 == e.K2
    assert e.K == 2 * e.K0


@pytest.mark.parametrize("n,m,eps0", GRID10)
def test_thresholds_against_extended_precision(n, m, eps0):
    e = example1_thresholds(ProblemParams(n, m, 1.0), eps0)
    assert e.K1 == pytest.approx(float(mp_k1(n, m, eps0)), rel=1e-10)
    assert e.K2 == pytest.approx(float(mp_k2(n, m, eps0)), rel=1e-9)
    assert e.params.M0 == eps0


@pytest.mark.parametrize("m", [1.22, 1.25, 1.3])
def test_k1_scaling_in_eps0(m):
    # K1 ~ eps0^(-(2-m)/(4-3m)) in n = 3; at m = 1.25 that is eps0^-3
    p = ProblemParams(3, m, 1.0)
    a = example1_thresholds(p, 1.0).K1
    b = example1_thresholds(p, 0.1).K1
    assert b / a == pytest.approx(10 ** ((2 - m) / (4 - 3 * m)), rel=1e-12)


@pytest.mark.parametrize("n,m,eps0", GRID10)
def test_substitution_at_and_around_k0(n, m, eps0):
    e = example1_thresholds(ProblemParams(n, m, 1.0), eps0)
    for K in (1.01 * e.K0, 2 * e.K0):
        assert norm_condition_holds(n, m, eps0, K)
        assert energy_condition_holds(n, m, eps0, K)
    for K in (e.K0 / 2, 0.99 * min(e.K1, e.K2)):
        assert not (norm_condition_holds(n, m, eps0, K) and energy_condition_holds(n, m, eps0, K))


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 6), st.floats(0.05, 0.95), st.floats(-2.0, 1.5))
def test_substitution_random(n, u, log_eps):
    m = admissible_m(n, u)
    eps0 = 10.0**log_eps
    e = example1_thresholds(ProblemParams(n, m, 1.0), eps0)
    K = 1.01 * e.K0
    assert norm_condition_holds(n, m, eps0, K) and energy_condition_holds(n, m, eps0, K)
    K = 0.99 * min(e.K1, e.K2)
    assert not (norm_condition_holds(n, m, eps0, K) and energy_condition_holds(n, m, eps0, K))
    # beyond K2 the energy condition holds for good
    for f in (1.5, 10.0, 1e3):
        assert energy_condition_holds(n, m, eps0, f * e.K2)


def test_thresholds_close_to_upper_exponent():
    # K0 ~ 1e284: thresholds stay finite, but no float grid resolves the ball
    p = ProblemParams(3, 1.33, 1.0)
    e = example1_thresholds(p, 0.05)
    assert e.K1 == pytest.approx(float(mp_k1(3, 1.33, 0.05)), rel=1e-9)
    assert e.K2 == pytest.approx(float(mp_k2(3, 1.33, 0.05)), rel=1e-9)
    assert norm_condition_holds(3, 1.33, 0.05, 1.01 * e.K0)
    assert energy_condition_holds(3, 1.33, 0.05, 1.01 * e.K0)
    with pytest.raises(ValueError):
        example1_density(example1_grid(e), e)
    with pytest.raises(ValueError):
        example1_thresholds(ProblemParams(3, 1.333, 1.0), 0.05)


def test_threshold_errors():
    p = ProblemParams(3, 1.25, 1.0)
    for bad in (0.0, -1.0, float("inf"), float("nan")):
        with pytest.raises(ValueError):
            example1_thresholds(p, bad)
    with pytest.raises(ValueError):
        example1_thresholds(p, 1.0, K_mult=0.0)


@pytest.mark.parametrize("n,m,eps0", [(3, 1.25, 1.0), (4, 1.4, 0.5), (5, 1.5, 2.0)])
def test_ball_density_closed_forms(n, m, eps0):
    e = example1_thresholds(ProblemParams(n, m, 1.0), eps0)
    rho = example1_density(example1_grid(e), e)
    assert rho.mass == pytest.approx(eps0, rel=1e-12)
    a = unit_ball_volume(n)
    expect = eps0 * (e.K**n / a) ** ((n - 2) / (2 * n))
    assert lp_norm(rho, 2 * n / (n + 2)) == pytest.approx(expect, rel=1e-12)
    assert second_moment(rho) == pytest.approx(n / (n + 2) * eps0 * e.K**-2, rel=1e-12)
    assert np.max(rho.values) == pytest.approx(e.amplitude, rel=1e-12)


def test_ball_density_needs_aligned_grid():
    e = example1_thresholds(ProblemParams(3, 1.25, 1.0), 1.0)
    g = make_grid(3, 2.0 * e.radius * 1.001, 256)
    with pytest.raises(ValueError):
        example1_density(g, e)


@pytest.mark.parametrize("n,m,eps0", GRID10)
def test_energy_upper_bound_and_blow_up(n, m, eps0):
    e = example1_thresholds(ProblemParams(n, m, 1.0), eps0)
    rho = example1_density(example1_grid(e), e)
    F = free_energy(rho, m)
    bound = example1_energy_upper_bound(e)
    assert F <= bound + 1e-8 * abs(bound)
    cls = classify_density(e.params, rho)
    assert cls.regime is Regime.BLOW_UP


@pytest.mark.parametrize("n", [3, 4, 5])
def test_gaussian_norm_formula(n):
    mass, sigma = 2.5, 0.7
    rho = gaussian_density(make_grid(n, 7 * sigma, 4000), mass, sigma)
    p = 2 * n / (n + 2)
    assert lp_norm(rho, p) == pytest.approx(gaussian_critical_norm(n, mass, sigma), rel=1e-5)
    assert gaussian_sigma_for_norm(n, mass, gaussian_critical_norm(n, mass, sigma)) == pytest.approx(sigma, rel=1e-13)


@pytest.mark.parametrize("M0", [1.0, 50.0])
def test_library(M0):
    p = ProblemParams(3, 1.25, M0)
    lib = scenario_library(p, cells=1024)
    assert tuple(lib) == SCENARIO_NAMES
    for name, sc in lib.items():
        assert sc.classify().regime is sc.expected, name
        assert sc.density().tail_mass <= 1e-8 * sc.density().mass, name
    a, b, c, d = (lib[k] for k in ("wide-subcritical", "example1", "heavy-subcritical", "near-threshold"))
    assert free_energy(a.density(), 1.25) > 0
    assert c.density().mass >= 10 * b.density().mass
    thr_d = compute_constants(d.params).threshold_norm
    assert abs(lp_norm(d.density(), 1.2) / thr_d - 1) < 0.01
    assert d.classify().regime is Regime.OUTSIDE_THEOREM_SCOPE
