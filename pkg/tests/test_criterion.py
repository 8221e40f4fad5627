import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import mp_constants, mp_hls_constant, mp_unit_ball_volume
from kscrit import (
    ProblemParams,
    Regime,
    classify_initial_data,
    compute_constants,
    critical_exponents,
    f_eval,
    hls_constant,
    unit_ball_volume,
)
from kscrit.criterion import f_prime


def interior_ms(n, k=5):
    lo, hi = critical_exponents(n)
    return [lo + (hi - lo) * (i + 1) / (k + 1) for i in range(k)]


GRID = [(n, m) for n in (3, 4, 5, 6) for m in interior_ms(n)]


@pytest.mark.parametrize("n,expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_unit_ball_volume_small_dims(n, expected):
    assert unit_ball_volume(n) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("n", range(1, 13))
def test_unit_ball_volume_matches_mpmath(n):
    assert unit_ball_volume(n) == pytest.approx(float(mp_unit_ball_volume(n)), rel=1e-13)


def test_unit_ball_volume_rejects_zero_dim():
    with pytest.raises(ValueError):
        unit_ball_volume(0)


@pytest.mark.parametrize("n", range(3, 11))
def test_hls_constant_matches_mpmath(n):
    assert hls_constant(n) == pytest.approx(float(mp_hls_constant(n)), rel=1e-13)


def test_hls_constant_known_values():
    assert hls_constant(3) == pytest.approx(2.29401, abs=5e-5)
    assert hls_constant(4) == pytest.approx(math.pi / 2 * math.sqrt(6), rel=1e-13)
    assert hls_constant(5) == pytest.approx(5.3306, abs=5e-4)


@pytest.mark.parametrize("n", [1, 2])
def test_hls_constant_needs_n3(n):
    with pytest.raises(ValueError):
        hls_constant(n)


@pytest.mark.parametrize("n,mc,ms", [(3, 1.2, 4 / 3), (4, 4 / 3, 1.5), (6, 1.5, 5 / 3)])
def test_critical_exponents(n, mc, ms):
    lo, hi = critical_exponents(n)
    assert lo == pytest.approx(mc, rel=1e-15)
    assert hi == pytest.approx(ms, rel=1e-15)
    assert lo < hi


def test_critical_exponents_needs_n3():
    with pytest.raises(ValueError):
        critical_exponents(2)


@pytest.mark.parametrize(
    "args",
    [(2, 1.1, 1.0), (3, 1.2, 1.0), (3, 4 / 3, 1.0), (3, 1.1, 1.0), (3, 1.25, 0.0), (3, 1.25, -1.0),
     (3.5, 1.25, 1.0), (3, 1.25, float("inf"))],
)
def test_problem_params_rejects(args):
    with pytest.raises(ValueError):
        ProblemParams(*args)


def test_f_at_zero_and_negative():
    p = ProblemParams(3, 1.25, 1.0)
    assert f_eval(p, 0.0) == 0.0
    with pytest.raises(ValueError):
        f_eval(p, -1.0)


def test_reference_constants_n3():
    c = compute_constants(ProblemParams(3, 1.25, 1.0))
    assert c.s_star == pytest.approx(3.5506e4, rel=1e-4)
    assert c.f_star == pytest.approx(3.551e4, rel=1e-3)
    assert c.threshold_norm == pytest.approx(1.0802e3, rel=1e-4)
    # the coefficient of F* is exactly 1 here, so F* = s*
    assert c.f_star == pytest.approx(c.s_star, rel=1e-13)
    assert f_eval(c.params, 2 * c.s_star) < c.f_star


def test_mass_scaling_of_s_star():
    a = compute_constants(ProblemParams(3, 1.25, 1.0))
    b = compute_constants(ProblemParams(3, 1.25, 2.0))
    assert b.s_star / a.s_star == pytest.approx(2 ** (-0.75), rel=1e-13)


@pytest.mark.parametrize("n,m", GRID)
def test_constants_against_extended_precision(n, m):
    for M0 in (0.1, 1.0, 37.0):
        c = compute_constants(ProblemParams(n, m, M0))
        s, F, thr = mp_constants(n, m, M0)
        assert c.s_star == pytest.approx(float(s), rel=1e-10)
        assert c.f_star == pytest.approx(float(F), rel=1e-10)
        assert c.threshold_norm == pytest.approx(float(thr), rel=1e-10)


@pytest.mark.parametrize("n,m", GRID)
def test_constants_structure(n, m):
    p = ProblemParams(n, m, 1.0)
    c = compute_constants(p)
    for v in c.as_dict().values():
        assert v > 0
    assert c.m_c < c.m_star
    assert 0 < c.theta < 1
    lead = p.M0 ** ((2 * n - m * (n + 2)) / (n - 2)) / (m - 1)
    assert abs(f_prime(p, c.s_star)) <= 1e-10 * lead
    assert f_eval(p, c.s_star) == pytest.approx(c.f_star, rel=1e-10)


# u <= 0.95 keeps s* inside double range for n = 6 and M0 up to 100;
# the overflow past that point has its own test below
admissible = st.integers(3, 6).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.floats(0.02, 0.95).map(lambda u: critical_exponents(n)[0] + u * np.diff(critical_exponents(n))[0]),
        st.floats(0.01, 100.0),
    )
)


@settings(max_examples=60, deadline=None)
@given(admissible, st.floats(0.01, 5.0), st.floats(0.01, 5.0), st.floats(0.05, 0.95))
def test_f_strictly_concave(nmM, a, b, t):
    n, m, M0 = nmM
    p = ProblemParams(n, m, M0)
    s_star = compute_constants(p).s_star
    s1, s2 = a * s_star, b * s_star
    if abs(s1 - s2) < 1e-3 * s_star:
        return
    mid = f_eval(p, t * s1 + (1 - t) * s2)
    chord = t * f_eval(p, s1) + (1 - t) * f_eval(p, s2)
    assert mid > chord - 1e-12 * abs(chord)


@settings(max_examples=40, deadline=None)
@given(admissible)
def test_f_monotone_either_side_of_maximum(nmM):
    p = ProblemParams(*nmM)
    s_star = compute_constants(p).s_star
    left = [f_eval(p, s_star * x) for x in np.linspace(0.05, 0.99, 30)]
    right = [f_eval(p, s_star * x) for x in np.linspace(1.01, 4.0, 30)]
    assert np.all(np.diff(left) > 0)
    assert np.all(np.diff(right) < 0)


def test_classification_regimes_and_margins():
    p = ProblemParams(3, 1.25, 1.0)
    c = compute_constants(p)
    below = classify_initial_data(p, 0.5 * c.threshold_norm, 0.5 * c.f_star)
    assert below.regime is Regime.GLOBAL_EXISTENCE
    assert below.norm_margin == pytest.approx(0.5 * c.threshold_norm)
    assert below.energy_margin == pytest.approx(0.5 * c.f_star)
    above = classify_initial_data(p, 2 * c.threshold_norm, -1.0)
    assert above.regime is Regime.BLOW_UP
    assert above.norm_margin < 0
    for norm, F in [(c.threshold_norm, 0.0), (0.5 * c.threshold_norm, c.f_star), (2 * c.threshold_norm, 2 * c.f_star)]:
        assert classify_initial_data(p, norm, F).regime is Regime.OUTSIDE_THEOREM_SCOPE
    with pytest.raises(ValueError):
        classify_initial_data(p, -1.0, 0.0)


def test_classification_is_resolution_stable():
    from kscrit import scenario_library

    p = ProblemParams(3, 1.25, 1.0)
    for name in ("wide-subcritical", "heavy-subcritical", "near-threshold"):
        coarse = scenario_library(p, cells=256)[name].classify()
        fine = scenario_library(p, cells=2048)[name].classify()
        assert coarse.regime is fine.regime
        # margins move by far less than their size
        assert abs(coarse.norm_margin - fine.norm_margin) < 0.01 * abs(fine.norm_margin)


def test_degenerate_exponent_reports_value_error():
    # formally admissible, but so close to m* that the constants overflow
    with pytest.raises(ValueError):
        compute_constants(ProblemParams(3, 1.3333333, 1.0))


def test_mpmath_oracle_is_independent():
    # the oracle finds the maximiser from f' = 0, not from the closed form
    s, F, _ = mp_constants(4, 1.4, 3.0)
    n, m, M = mpmath.mpf(4), mpmath.mpf(1.4), mpmath.mpf(3)
    a = mp_unit_ball_volume(4)
    k = mp_hls_constant(4) / (2 * (n - 2) * n * a)
    f = lambda x: M ** ((2 * n - m * (n + 2)) / (n - 2)) * x / (m - 1) - k * x ** ((n - 2) / (n * (m - 1)))
    assert abs(mpmath.diff(f, s)) < mpmath.mpf(10) ** -20 * abs(F)
