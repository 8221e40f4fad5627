"""Shared simulation fixtures and independent oracles.

Runs are cached per process so the acceptance gate and the unit tests can
share them; each cached value carries the wall time of its first build.
"""

from __future__ import annotations

import functools
import time

import mpmath
import numpy as np

from kscrit import ProblemParams, RunConfig, compute_constants, run, scenario_library
from kscrit.dynamics import adapt_dt, initial_state

N3 = ProblemParams(3, 1.25, 1.0)

# subcritical fixture: wide low Gaussian, fine uniform grid
SUB_MASS = 50.0
SUB_CELLS = 2048
SUB_T_END = 2e-3

# supercritical fixture: compact Gaussian at 15x the threshold norm
SUPER_MASS = 1000.0
SUPER_DT_MIN = 1e-8

# porous-medium control
PME_CELLS = 1024
PME_T_END = 2e-3

# Gaussian sweep with a GlobalExistence cell heavier than a BlowUp cell
SWEEP_AMPS = "2e-11,1e-2,1e4"
SWEEP_WIDTHS = "0.1,10,2e4"

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def timed(fn):
    @functools.lru_cache(maxsize=None)
    def wrapper(*args):
        t0 = time.perf_counter()
        out = fn(*args)
        return out, time.perf_counter() - t0

    functools.update_wrapper(wrapper, fn)
    return wrapper


def sub_params() -> ProblemParams:
    return ProblemParams(3, 1.25, SUB_MASS)


def sub_scenario(cells: int = SUB_CELLS):
    return scenario_library(sub_params(), cells=cells)["wide-subcritical"]


def sub_config(rho, **kw) -> RunConfig:
    base = dict(
        params=sub_params(), t_end=SUB_T_END, dt_init=1e-3, dt_min=1e-12,
        r_max=rho.grid.r_max, cells=rho.grid.cells, output_every=10,
    )
    base.update(kw)
    return RunConfig(**base)


@timed
def subcritical_run():
    rho = sub_scenario().density()
    return rho, run(sub_config(rho), rho)


@timed
def supercritical_run():
    params = ProblemParams(3, 1.25, SUPER_MASS)
    rho = scenario_library(params)["supercritical"].density()
    cfg = RunConfig(
        params=params, t_end=1.0, dt_init=1e-3, dt_min=SUPER_DT_MIN,
        r_max=rho.grid.r_max, cells=rho.grid.cells, output_every=200,
    )
    return rho, cfg, run(cfg, rho)


@timed
def porous_run():
    rho = sub_scenario(PME_CELLS).density()
    cfg = sub_config(rho, t_end=PME_T_END, attraction_enabled=False, output_every=20)
    return rho, run(cfg, rho)


def initial_cfl_dt(cfg: RunConfig, rho) -> float:
    """CFL step of the initial state, before any clamping to dt_init."""
    big = RunConfig(**{**cfg.__dict__, "dt_init": 1e300})
    return adapt_dt(initial_state(rho, big), big)


@timed
def convergence_levels(levels: tuple[int, ...] = (512, 1024, 2048)):
    """F(t_end) of the subcritical fixture at several resolutions, dt proportional to h.

    The step is ``kappa * h`` with kappa chosen so that it sits below the
    CFL limit on the finest grid; the coarser grids then take exactly
    proportionally larger steps.
    """
    finest = sub_scenario(max(levels)).density()
    cfg = sub_config(finest)
    kappa = 0.5 * initial_cfl_dt(cfg, finest) / (finest.grid.r_max / finest.grid.cells)
    out = []
    for cells in levels:
        rho = sub_scenario(cells).density()
        h = rho.grid.r_max / cells
        # the floor must sit below every step, or the final partial step trips it
        rep = run(sub_config(rho, dt_init=kappa * h, dt_min=1e-6 * kappa * h, output_every=10**9), rho,
                  log_steps=False)
        out.append((cells, kappa * h, rep.series[-1].energy.free_energy, rep.final_state.step_count))
    return out


# --- oracles --------------------------------------------------------------

mpmath.mp.dps = 40


def mp_unit_ball_volume(n: int):
    return mpmath.pi ** (mpmath.mpf(n) / 2) / mpmath.gamma(mpmath.mpf(n) / 2 + 1)


def mp_hls_constant(n: int):
    n = mpmath.mpf(n)
    return mpmath.pi ** ((n - 2) / 2) / mpmath.gamma(n / 2 + 1) * (mpmath.gamma(n / 2) / mpmath.gamma(n)) ** (-2 / n)


def mp_constants(n: int, m: float, M0: float):
    """s*, F*, threshold in extended precision straight from their definitions."""
    n_, m_, M_ = mpmath.mpf(n), mpmath.mpf(m), mpmath.mpf(M0)
    a = mp_unit_ball_volume(n)
    C = mp_hls_constant(n)
    A = M_ ** ((2 * n_ - m_ * (n_ + 2)) / (n_ - 2)) / (m_ - 1)
    k = C / (2 * (n_ - 2) * n_ * a)
    q = (n_ - 2) / (n_ * (m_ - 1))
    # f(s) = A s - k s^q is maximal where A = k q s^(q-1)
    s_star = (A / (k * q)) ** (1 / (q - 1))
    f_star = A * s_star - k * s_star**q
    thr = s_star ** ((n_ - 2) / (2 * n_ * (m_ - 1)))
    return s_star, f_star, thr


def mp_k1(n: int, m: float, eps0: float):
    n_, m_, e = mpmath.mpf(n), mpmath.mpf(m), mpmath.mpf(eps0)
    a = mp_unit_ball_volume(n)
    C = mp_hls_constant(n)
    g = 2 * n_ - 2 - m_ * n_
    rhs = a ** ((n_ - 2) / (2 * n_)) * (2 * n_**2 * a / C) ** ((n_ - 2) / (2 * g))
    lhs_coef = e ** (1 + (m_ * (n_ + 2) - 2 * n_) / (2 * g))
    return (rhs / lhs_coef) ** (2 / (n_ - 2))


def mp_energy_sides(n: int, m: float, eps0: float, K):
    """(lhs, rhs) of the energy condition for the ball, in extended precision."""
    n_, m_, e, K = mpmath.mpf(n), mpmath.mpf(m), mpmath.mpf(eps0), mpmath.mpf(K)
    a = mp_unit_ball_volume(n)
    C = mp_hls_constant(n)
    g = 2 * n_ - 2 - m_ * n_
    sh = (m_ * (n_ + 2) - 2 * n_) / g
    lhs = e ** (m_ + sh) * K ** (n_ * (m_ - 1)) * a ** (1 - m_)
    rhs = (m_ - 1) * mpmath.mpf(2) ** (2 - n_) / (2 * (n_ - 2) * n_ * a) * e ** (2 + sh) * K ** (n_ - 2)
    rhs += (2 - 2 / n_ - m_) / (1 - 2 / n_) * (2 * n_**2 * a / C) ** (n_ * (m_ - 1) / g)
    return lhs, rhs


def mp_k2(n: int, m: float, eps0: float):
    """Largest K where the energy condition turns from failing to holding.

    Scans log K downward from far above any threshold until the condition
    fails, then refines the sign change by bisection; no closed form for
    the minimiser is used.  Returns 0 if the condition never fails.
    """
    def g(u):
        lhs, rhs = mp_energy_sides(n, m, eps0, mpmath.exp(u))
        return mpmath.log(rhs) - mpmath.log(lhs)

    u = mpmath.mpf(2000)
    assert g(u) > 0
    while g(u - 1) > 0:
        u -= 1
        if u < -2000:
            return mpmath.mpf(0)
    lo, hi = u - 1, u
    for _ in range(200):
        mid = (lo + hi) / 2
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return mpmath.exp(hi)


def observed_dt_ratio(dts: np.ndarray, reference: float) -> np.ndarray:
    return np.asarray(dts) / reference


def threshold(params: ProblemParams) -> float:
    return compute_constants(params).threshold_norm
