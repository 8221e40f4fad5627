"""Explicit finite-volume time stepping with blow-up detection.

The update is written in gradient-flow form: with the chemical potential
``mu = m/(m-1) (rho+eps)^(m-1) - c`` the outward face flux is

    J = -(rho+eps)_up * (mu_{i+1} - mu_i) / (r_{i+1} - r_i)

with the mobility upwinded by the sign of the face velocity (the ``eps``
part capped at the donor density, see ``_Scheme.face_terms``).  Because the
potential comes from a symmetric quadratic form, the semi-discrete scheme
dissipates the discrete free energy at exactly the discrete entropy
production rate.  Fluxes vanish at r = 0 and r = r_max and telescope, so
mass is conserved to rounding.

Time steps follow a CFL rule and are halved on a positivity failure.  Blow-up
is reported only when the L^m norm has grown by ``blowup_lm_factor`` and the
step has been pinned at ``dt_min`` for ``collapse_steps`` consecutive steps.
"""

from __future__ import annotations

import enum
import logging
import math
from array import array
from dataclasses import dataclass, field

import numpy as np

from .criterion import ProblemParams
from .energy import EnergyReport, energy_report, internal_energy_density
from .potential import CellPotential, PotentialField, _regularized_matrix, regularized_potential
from .radial import DensityField, RadialGrid

logger = logging.getLogger(__name__)

MAX_HALVINGS = 30


class StepRejected(RuntimeError):
    """An explicit update produced a negative cell."""


class TruncationError(RuntimeError):
    """Mass reached the outer boundary of the computational domain."""


@dataclass(frozen=True)
class RunConfig:
    params: ProblemParams
    t_end: float
    dt_init: float
    dt_min: float
    epsilon: float = 0.0
    r_max: float = 10.0
    cells: int = 512
    spacing: str = "uniform"
    ratio: float = 1.05
    max_width: float | None = None
    cfl: float = 0.4
    output_every: int = 10
    attraction_enabled: bool = True
    blowup_lm_factor: float = 10.0
    tail_mass_tol: float = 1e-8
    collapse_steps: int = 100
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.dt_min < self.dt_init:
            raise ValueError("need 0 < dt_min < dt_init")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")


@dataclass(frozen=True)
class RunState:
    t: float
    dt: float
    rho: DensityField
    c: PotentialField
    step_count: int = 0


class VerdictKind(enum.Enum):
    GLOBAL_LOOKING = "GlobalLooking"
    BLOW_UP_DETECTED = "BlowUpDetected"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class BlowUpVerdict:
    kind: VerdictKind
    t_detect: float | None
    lm_growth: float
    m2_summary: tuple[float, float, float]
    collapse_steps: int = 0
    reason: str = ""


@dataclass(frozen=True)
class OutputRecord:
    t: float
    dt: float
    energy: EnergyReport
    entropy_production: float
    dm2dt_measured: float
    step: int


@dataclass
class RunReport:
    verdict: BlowUpVerdict
    series: list[OutputRecord]
    config: RunConfig
    final_state: RunState
    step_log: dict[str, np.ndarray] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        """One output column by name, e.g. ``"t"``, ``"m2"``, ``"free_energy"``."""
        if name in ("t", "dt", "entropy_production", "dm2dt_measured", "step"):
            return np.array([getattr(r, name) for r in self.series])
        return np.array([getattr(r.energy, name) for r in self.series])


class _Scheme:
    """Raw-array operators for one grid and one parameter set."""

    def __init__(self, grid: RadialGrid, m: float, epsilon: float, attraction: bool):
        self.grid = grid
        self.m = m
        self.eps = epsilon
        self.attraction = attraction
        self.vol = np.asarray(grid.volumes)
        self.area = np.asarray(grid.face_areas)
        self.h = np.diff(grid.centers)
        if attraction and epsilon == 0:
            self._exact = CellPotential(grid)
        elif attraction:
            self._B = _regularized_matrix(grid, epsilon, 3)

    def potential(self, v: np.ndarray) -> np.ndarray:
        if not self.attraction:
            return np.zeros_like(v)
        if self.eps == 0:
            return self._exact(v)
        return (self._B @ v) / self.vol

    def chemical_potential(self, v, c):
        m = self.m
        return m / (m - 1) * (v + self.eps) ** (m - 1) - c

    def face_terms(self, v, c):
        """Face velocity and upwinded mobility.

        The mobility is ``rho + eps`` taken from the donor cell, except that
        the ``eps`` part never exceeds the donor density: an empty cell next
        to a wall has nothing to give, and the walls are closed.
        """
        mu = self.chemical_potential(v, c)
        vel = -np.diff(mu) / self.h
        donor = np.where(vel > 0, v[:-1], v[1:])
        mob = donor + np.minimum(donor, self.eps) if self.eps else donor
        return vel, mob

    def rhs(self, v, c):
        vel, mob = self.face_terms(v, c)
        flux = self.area * mob * vel
        out = np.zeros_like(v)
        out[:-1] -= flux
        out[1:] += flux
        return out / self.vol

    def energy(self, v, c):
        internal = np.dot(internal_energy_density(v, self.m, self.eps), self.vol) / (self.m - 1)
        return internal - 0.5 * np.dot(v * c, self.vol)

    def entropy_production(self, v, c):
        vel, mob = self.face_terms(v, c)
        return float(np.sum(self.area * mob * vel**2 * self.h))

    def dt_bounds(self, v, c) -> dict[str, float]:
        m = self.m
        D = m * (v + self.eps) ** (m - 1)
        Df = 0.5 * (D[:-1] + D[1:])
        with np.errstate(divide="ignore"):
            diffusive = np.min(np.where(Df > 0, self.h**2 / (2 * Df), np.inf))
            if self.attraction:
                cp = np.abs(np.diff(c) / self.h)
                drift = np.min(np.where(cp > 0, self.h / cp, np.inf))
            else:
                drift = np.inf
            # exact positivity limit of the upwind update: outflow rate per unit mass
            vel, mob = self.face_terms(v, c)
            donor = np.where(vel > 0, v[:-1], v[1:])
            gain = np.where(donor > 0, mob / np.where(donor > 0, donor, 1.0), 1.0)
            out_rate = np.zeros_like(v)
            out_rate[:-1] += self.area * np.maximum(vel, 0.0) * gain
            out_rate[1:] += self.area * np.maximum(-vel, 0.0) * gain
            transport = np.min(np.where(out_rate > 0, self.vol / out_rate, np.inf))
        return {"diffusive": float(diffusive), "drift": float(drift), "transport": float(transport)}


_SCHEME_CACHE: dict[tuple, _Scheme] = {}


def _scheme(grid: RadialGrid, config: RunConfig) -> _Scheme:
    key = (grid.key(), config.params.m, config.epsilon, config.attraction_enabled)
    s = _SCHEME_CACHE.get(key)
    if s is None:
        if len(_SCHEME_CACHE) > 8:
            _SCHEME_CACHE.clear()
        s = _SCHEME_CACHE[key] = _Scheme(grid, config.params.m, config.epsilon, config.attraction_enabled)
    return s


def _potential_field(rho: DensityField, config: RunConfig) -> PotentialField:
    if not config.attraction_enabled:
        g = rho.grid
        return PotentialField(g, np.zeros(g.cells), np.zeros(g.cells - 1), config.epsilon, rho)
    return regularized_potential(rho, config.epsilon)


def initial_state(rho: DensityField, config: RunConfig) -> RunState:
    return RunState(0.0, config.dt_init, rho, _potential_field(rho, config), 0)


def dt_bounds(state: RunState, config: RunConfig) -> dict[str, float]:
    """The unscaled diffusive, drift and positivity step limits."""
    s = _scheme(state.rho.grid, config)
    return s.dt_bounds(state.rho.values, state.c.c_values)


def adapt_dt(state: RunState, config: RunConfig) -> float:
    """``cfl`` times the tightest step limit, clamped to ``[dt_min, dt_init]``."""
    raw = config.cfl * min(dt_bounds(state, config).values())
    return float(min(max(raw, config.dt_min), config.dt_init))


def step(state: RunState, config: RunConfig, dt: float | None = None) -> RunState:
    """One explicit Euler step; raises :class:`StepRejected` on a negative cell."""
    dt = state.dt if dt is None else dt
    s = _scheme(state.rho.grid, config)
    v = state.rho.values
    new = v + dt * s.rhs(v, state.c.c_values)
    if np.any(new < 0):
        raise StepRejected(f"negative density after dt={dt:.3e}")
    rho = DensityField(state.rho.grid, new)
    return RunState(state.t + dt, dt, rho, _potential_field(rho, config), state.step_count + 1)


def entropy_production(state: RunState, config: RunConfig) -> float:
    """``int (rho+eps) |grad mu|^2`` summed over faces with the upwinded mobility."""
    s = _scheme(state.rho.grid, config)
    return s.entropy_production(state.rho.values, state.c.c_values)


def _verdict(kind, t_detect, lm0, lm_max, m2_t, m2_v, collapse, reason):
    slope = float(np.polyfit(m2_t, m2_v, 1)[0]) if len(m2_t) > 1 else 0.0
    return BlowUpVerdict(
        kind=kind,
        t_detect=t_detect,
        lm_growth=lm_max / lm0 if lm0 > 0 else 1.0,
        m2_summary=(float(m2_v[0]), float(m2_v[-1]), slope),
        collapse_steps=collapse,
        reason=reason,
    )


def run(config: RunConfig, initial: DensityField, log_steps: bool = True) -> RunReport:
    """Integrate to ``t_end`` or until blow-up is detected.

    Outputs are taken every ``output_every`` accepted steps plus at the
    start and end.  ``dm2dt_measured`` is the second-order finite difference
    of the output second moments in time.  With ``log_steps`` the per-step
    time, step size, Lyapunov energy, entropy production and L^m norm are
    kept in ``step_log``; the energy there is the functional the simulated
    flow dissipates (internal energy only when attraction is disabled).
    """
    grid = initial.grid
    if grid.n != config.params.n:
        raise ValueError("grid dimension does not match params")
    mass0 = initial.mass
    if not mass0 > 0:
        raise ValueError("initial density has no mass")
    if initial.tail_mass > config.tail_mass_tol * mass0:
        raise TruncationError(
            f"initial tail mass {initial.tail_mass:.3e} exceeds {config.tail_mass_tol:g} of the total"
        )
    s = _scheme(grid, config)
    m = config.params.m
    v = np.array(initial.values, dtype=float)
    c = s.potential(v)
    t = 0.0
    lm0 = float(np.dot(v**m, s.vol)) ** (1 / m)
    lm_max = lm0
    steps = 0
    collapse = 0
    max_collapse = 0
    t_detect = None
    kind = None
    reason = ""

    outputs: list[tuple] = []
    logs = {k: array("d") for k in ("t", "dt", "energy", "entropy_production", "lm_norm", "mass")}

    def record(dt_now):
        rho = DensityField(grid, v)
        rep = energy_report(rho, m, config.epsilon)
        outputs.append((t, dt_now, rep, s.entropy_production(v, c), steps))

    def clamped_dt():
        raw = config.cfl * min(s.dt_bounds(v, c).values())
        return raw, min(max(raw, config.dt_min), config.dt_init)

    record(clamped_dt()[1])
    while True:
        if t >= config.t_end * (1 - 1e-14):
            break
        if steps >= config.max_steps:
            reason = "max_steps reached"
            break
        raw, dt = clamped_dt()
        final_step = dt >= config.t_end - t
        if final_step:
            dt = config.t_end - t
        pinned = raw <= config.dt_min and not final_step

        if log_steps:
            logs["t"].append(t)
            logs["energy"].append(s.energy(v, c))
            logs["entropy_production"].append(s.entropy_production(v, c))
            logs["lm_norm"].append(float(np.dot(v**m, s.vol)) ** (1 / m))
            logs["mass"].append(float(np.dot(v, s.vol)))

        # advance over dt, splitting the interval on positivity failure
        remaining = dt
        sub = dt
        halvings = 0
        while remaining > 0:
            sub = min(sub, remaining)
            new = v + sub * s.rhs(v, c)
            if np.any(new < 0):
                halvings += 1
                if halvings > MAX_HALVINGS:
                    raise StepRejected(f"positivity lost even at dt={sub:.3e} (t={t:.6e})")
                sub *= 0.5
                continue
            v = new
            c = s.potential(v)
            remaining -= sub
            if remaining <= 1e-15 * dt:
                remaining = 0.0
        if halvings and dt <= config.dt_min * (1 + 1e-12):
            pinned = True
        t = t + dt if not final_step else config.t_end
        steps += 1
        if log_steps:
            logs["dt"].append(dt)

        lm = float(np.dot(v**m, s.vol)) ** (1 / m)
        lm_max = max(lm_max, lm)
        collapse = collapse + 1 if pinned else 0
        max_collapse = max(max_collapse, collapse)

        if v[-1] * s.vol[-1] > config.tail_mass_tol * mass0:
            raise TruncationError(
                f"tail mass {v[-1] * s.vol[-1]:.3e} at t={t:.6e} exceeds "
                f"{config.tail_mass_tol:g} of the total; enlarge r_max"
            )

        if collapse >= config.collapse_steps and lm_max >= config.blowup_lm_factor * lm0:
            kind = VerdictKind.BLOW_UP_DETECTED
            t_detect = t
            reason = "L^m growth with dt pinned at dt_min"
            record(dt)
            break
        if steps % config.output_every == 0:
            record(dt)

    if outputs[-1][0] != t:
        record(dt if steps else config.dt_init)
    if log_steps:
        logs["t"].append(t)
        logs["energy"].append(s.energy(v, c))
        logs["entropy_production"].append(s.entropy_production(v, c))
        logs["lm_norm"].append(float(np.dot(v**m, s.vol)) ** (1 / m))
        logs["mass"].append(float(np.dot(v, s.vol)))

    ts = np.array([o[0] for o in outputs])
    m2 = np.array([o[2].m2 for o in outputs])
    measured = np.gradient(m2, ts) if len(ts) > 1 else np.zeros(1)
    series = [
        OutputRecord(t=o[0], dt=o[1], energy=o[2], entropy_production=o[3], dm2dt_measured=float(d), step=o[4])
        for o, d in zip(outputs, measured)
    ]

    if kind is None:
        if reason:
            kind = VerdictKind.INCONCLUSIVE
        elif max_collapse == 0 and lm_max < config.blowup_lm_factor * lm0:
            kind = VerdictKind.GLOBAL_LOOKING
            reason = "reached t_end without dt collapse"
        else:
            kind = VerdictKind.INCONCLUSIVE
            reason = "dt collapse or L^m growth without both blow-up symptoms"
    verdict = _verdict(kind, t_detect, lm0, lm_max, ts, m2, max_collapse, reason)
    rho = DensityField(grid, v)
    final = RunState(t, dt if steps else config.dt_init, rho, _potential_field(rho, config), steps)
    step_log = {k: np.frombuffer(a, dtype=float).copy() for k, a in logs.items()} if log_steps else {}
    logger.info("run finished: %s after %d steps at t=%.6e", kind.value, steps, t)
    return RunReport(verdict=verdict, series=series, config=config, final_state=final, step_log=step_log)
