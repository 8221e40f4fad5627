"""Command-line entry point: ``kscrit <command> [options]``.

Commands: ``criterion``, ``classify``, ``simulate``, ``example1``, ``sweep``.
``simulate`` and ``sweep`` accept ``--config FILE``, a flat ``key = value``
file with ``#`` comments; flags given on the command line win over the file.
All files are written below ``--output-dir``.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .criterion import ProblemParams, Regime, compute_constants, critical_exponents
from .dynamics import RunConfig, RunReport, TruncationError, VerdictKind, run
from .energy import energy_report
from .radial import DensityField, lp_norm, make_grid, read_snapshot, write_snapshot
from .scenarios import (
    GAUSSIAN_EXTENT,
    SCENARIO_NAMES,
    GridSpec,
    classify_density,
    energy_condition_holds,
    example1_thresholds,
    gaussian_density,
    norm_condition_holds,
    scenario_library,
)

REGIME_EXIT = {Regime.GLOBAL_EXISTENCE: 0, Regime.BLOW_UP: 2, Regime.OUTSIDE_THEOREM_SCOPE: 3}
VERDICT_EXIT = {VerdictKind.GLOBAL_LOOKING: 0, VerdictKind.BLOW_UP_DETECTED: 2, VerdictKind.INCONCLUSIVE: 3}
EXIT_ERROR = 1

SERIES_COLUMNS = (
    "t", "dt", "mass", "lm_norm", "lcrit_norm", "m2", "F", "F1", "F2",
    "entropy_production", "dm2dt_formula", "dm2dt_measured",
)
PHASE_COLUMNS = ("amp", "width", "mass", "lcrit_norm", "F0", "regime", "verdict")


class CommandError(Exception):
    """A user-facing failure; the message is printed and the exit code is 1."""


def fmt(x: float) -> str:
    return f"{x:.17g}"


# --- flat config files ----------------------------------------------------

def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


# every key of a simulation config and its parser
SIM_KEYS: dict[str, Callable[[str], Any]] = {
    "n": int,
    "m": float,
    "mass": float,
    "init": str,
    "K_mult": float,
    "t_end": float,
    "dt_init": float,
    "dt_min": float,
    "epsilon": float,
    "r_max": float,
    "cells": int,
    "spacing": str,
    "ratio": float,
    "max_width": _optional_float,
    "cfl": float,
    "output_every": int,
    "attraction_enabled": _parse_bool,
    "blowup_lm_factor": float,
    "tail_mass_tol": float,
    "collapse_steps": int,
    "max_steps": int,
}

# mass 50 puts the default Gaussian at unit-ish scale; at mass 1 it is a
# micron-wide spike whose front leaves any fixed domain within ~1e-14
SIM_DEFAULTS: dict[str, Any] = {
    "n": 3,
    "m": 1.25,
    "mass": 50.0,
    "init": "wide-subcritical",
    "K_mult": 2.0,
    "t_end": 2e-3,
    "dt_init": 1e-3,
    "dt_min": 1e-12,
    "epsilon": 0.0,
    "spacing": "uniform",
    "ratio": 1.05,
    "max_width": None,
    "cfl": 0.4,
    "output_every": 10,
    "attraction_enabled": True,
    "blowup_lm_factor": 10.0,
    "tail_mass_tol": 1e-8,
    "collapse_steps": 100,
    "max_steps": 5_000_000,
}


def read_config(path: str | os.PathLike, keys: dict[str, Callable[[str], Any]]) -> dict[str, Any]:
    """Parse ``key = value`` lines; unknown keys and malformed lines are errors."""
    out: dict[str, Any] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CommandError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CommandError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in keys:
            raise CommandError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = keys[key](value)
        except ValueError as exc:
            raise CommandError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


def _render_value(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def write_config(path: str | os.PathLike, values: dict[str, Any]) -> None:
    lines = [f"{k} = {_render_value(v)}" for k, v in values.items()]
    Path(path).write_text("\n".join(lines) + "\n")


# --- helpers --------------------------------------------------------------

def _params(n: int, m: float, mass: float) -> ProblemParams:
    try:
        return ProblemParams(n, m, mass)
    except ValueError as exc:
        msg = str(exc)
        if n >= 3 and "admissible" not in msg:
            lo, hi = critical_exponents(n)
            msg += f"; admissible m lies in ({lo:.12g}, {hi:.12g})"
        raise CommandError(msg) from None


def _emit(lines: Sequence[tuple[str, Any]], out=None) -> str:
    text = "\n".join(f"{k}={_render_value(v)}" for k, v in lines) + "\n"
    (out or sys.stdout).write(text)
    return text


def _output_dir(path: str | None) -> Path:
    d = Path(path or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_initial(init: str, params: ProblemParams, K_mult: float, grid_keys: dict[str, Any]):
    """Resolve ``init`` (scenario name or snapshot path) to a density.

    Returns the density and the grid keys actually used, so the effective
    config can be written back out.
    """
    if init in SCENARIO_NAMES:
        sc = scenario_library(params, K_mult=K_mult)[init]
        base = dataclasses.asdict(sc.grid)
        for k in ("r_max", "cells", "spacing", "ratio", "max_width"):
            if grid_keys.get(k) is not None:
                base[k] = grid_keys[k]
        spec = GridSpec(**base)
        rho = sc.density(spec.build(params.n))
        used = {k: base[k] for k in ("r_max", "cells", "spacing", "ratio", "max_width")}
        return rho, used, sc.params
    try:
        rho = read_snapshot(init)
    except (OSError, ValueError) as exc:
        raise CommandError(f"cannot load initial data {init!r}: {exc}") from None
    if rho.grid.n != params.n:
        raise CommandError(f"snapshot dimension {rho.grid.n} differs from n={params.n}")
    g = rho.grid
    used = {"r_max": g.r_max, "cells": g.cells}
    return rho, used, params.with_mass(rho.mass)


# --- commands -------------------------------------------------------------

def cmd_criterion(args) -> int:
    p = _params(args.n, args.m, args.mass)
    c = compute_constants(p)
    _emit([("n", p.n), ("m", p.m), ("mass", p.M0)] + list(c.as_dict().items()))
    return 0


def _classification_lines(rho: DensityField, params: ProblemParams):
    cl = classify_density(params, rho)
    rep = energy_report(rho, params.m)
    return cl, [
        ("mass", rho.mass),
        ("lcrit_norm", cl.norm_2n_np2),
        ("lm_norm", rep.lm_norm),
        ("m2", rep.m2),
        ("F0", cl.free_energy0),
        ("F1", rep.f1),
        ("F2", rep.f2),
        ("threshold_norm", cl.threshold_norm),
        ("f_star", cl.f_star),
        ("norm_margin", cl.norm_margin),
        ("energy_margin", cl.energy_margin),
        ("regime", cl.regime.value),
    ]


def cmd_classify(args) -> int:
    p = _params(args.n, args.m, args.mass)
    if args.snapshot:
        rho, _, p = _load_initial(args.snapshot, p, args.K_mult, {})
        source = args.snapshot
    else:
        sc = scenario_library(p, cells=args.cells, K_mult=args.K_mult)[args.scenario]
        rho, p, source = sc.density(), sc.params, args.scenario
    cl, lines = _classification_lines(rho, p)
    _emit([("init", source), ("n", p.n), ("m", p.m)] + lines)
    return REGIME_EXIT[cl.regime]


def cmd_example1(args) -> int:
    p = _params(args.n, args.m, 1.0)
    if not (args.eps0 > 0 and math.isfinite(args.eps0)):
        raise CommandError(f"eps0 must be positive, got {args.eps0}")
    e = example1_thresholds(p, args.eps0, args.K_mult)
    n, m = p.n, p.m
    norm_ok = norm_condition_holds(n, m, e.eps0, e.K)
    energy_ok = energy_condition_holds(n, m, e.eps0, e.K)
    _emit([
        ("n", n), ("m", m), ("eps0", e.eps0),
        ("K1", e.K1), ("K2", e.K2), ("K0", e.K0), ("K", e.K),
        ("norm_condition_at_K", norm_ok),
        ("energy_condition_at_K", energy_ok),
    ])
    return 0 if (norm_ok and energy_ok) or args.K_mult <= 1 else EXIT_ERROR


def resolve_sim_config(args) -> dict[str, Any]:
    """Defaults, then the config file, then explicit flags."""
    values = dict(SIM_DEFAULTS)
    if args.config:
        values.update(read_config(args.config, SIM_KEYS))
    for key in SIM_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def _series_rows(report: RunReport):
    for rec in report.series:
        e = rec.energy
        yield (rec.t, rec.dt, e.mass, e.lm_norm, e.l_crit_norm, e.m2, e.free_energy, e.f1, e.f2,
               rec.entropy_production, e.dm2dt_formula, rec.dm2dt_measured)


def write_series(path: Path, report: RunReport) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for row in _series_rows(report):
            fh.write(",".join(fmt(x) for x in row) + "\n")


def _report_lines(report: RunReport, cl) -> list[tuple[str, Any]]:
    v = report.verdict
    m2_0, m2_1, slope = v.m2_summary
    return [
        ("verdict", v.kind.value),
        ("reason", v.reason),
        ("t_detect", "none" if v.t_detect is None else fmt(v.t_detect)),
        ("t_final", report.final_state.t),
        ("steps", report.final_state.step_count),
        ("lm_growth", v.lm_growth),
        ("collapse_steps", v.collapse_steps),
        ("m2_initial", m2_0),
        ("m2_final", m2_1),
        ("m2_slope", slope),
        ("initial_regime", cl.regime.value),
        ("initial_lcrit_norm", cl.norm_2n_np2),
        ("threshold_norm", cl.threshold_norm),
        ("initial_F", cl.free_energy0),
        ("f_star", cl.f_star),
    ]


def cmd_simulate(args) -> int:
    values = resolve_sim_config(args)
    params = _params(values["n"], values["m"], values["mass"])
    grid_keys = {k: values.get(k) for k in ("r_max", "cells", "spacing", "ratio", "max_width")}
    rho, used, params = _load_initial(values["init"], params, values["K_mult"], grid_keys)
    values.update(used)
    out = _output_dir(args.output_dir)
    try:
        cfg = RunConfig(
            params=params,
            **{f.name: values[f.name] for f in dataclasses.fields(RunConfig) if f.name != "params"},
        )
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    cl, _ = _classification_lines(rho, params)
    try:
        report = run(cfg, rho, log_steps=False)
    except TruncationError as exc:
        (out / "report.txt").write_text(f"verdict=error\nreason={exc}\n")
        raise CommandError(f"truncation: {exc}") from None
    write_series(out / "series.csv", report)
    write_snapshot(report.final_state.rho, out / "final_density.txt")
    write_config(out / "effective_config.txt", values)
    with open(out / "report.txt", "w") as fh:
        text = _emit(_report_lines(report, cl), fh)
    sys.stdout.write(text)
    return VERDICT_EXIT[report.verdict.kind]


# --- sweep ----------------------------------------------------------------

SWEEP_KEYS: dict[str, Callable[[str], Any]] = {
    "n": int,
    "m": float,
    "amps": str,
    "widths": str,
    "cells": int,
    "simulate": _parse_bool,
    "t_end": float,
    "dt_init": float,
    "dt_min": float,
    "collapse_steps": int,
    "jobs": int,
}

SWEEP_DEFAULTS: dict[str, Any] = {
    "n": 3,
    "m": 1.25,
    "amps": "",
    "widths": "",
    "cells": 512,
    "simulate": False,
    "t_end": 0.01,
    "dt_init": 1e-3,
    "dt_min": 1e-12,
    "collapse_steps": 100,
    "jobs": 1,
}


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def gaussian_mass(n: int, amp: float, width: float) -> float:
    """Mass of ``amp * exp(-r^2 / (2 width^2))`` in R^n."""
    return amp * (2 * math.pi * width**2) ** (n / 2)


def sweep_cell(task: tuple) -> tuple:
    """One phase-diagram cell; failures are reported in the row."""
    amp, width, opts = task
    n, m = opts["n"], opts["m"]
    mass = gaussian_mass(n, amp, width)
    try:
        params = ProblemParams(n, m, mass)
        g = make_grid(n, GAUSSIAN_EXTENT * width, opts["cells"])
        rho = gaussian_density(g, mass, width)
        cl = classify_density(params, rho)
        verdict = "-"
        if opts["simulate"]:
            cfg = RunConfig(
                params=params, t_end=opts["t_end"], dt_init=opts["dt_init"], dt_min=opts["dt_min"],
                r_max=g.r_max, cells=g.cells, collapse_steps=opts["collapse_steps"],
                output_every=10**9,
            )
            verdict = run(cfg, rho, log_steps=False).verdict.kind.value
        return (amp, width, rho.mass, cl.norm_2n_np2, cl.free_energy0, cl.regime.value, verdict)
    except Exception as exc:  # noqa: BLE001 - recorded in the row, sweep goes on
        msg = f"error: {type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        return (amp, width, mass, float("nan"), float("nan"), "error", msg)


def run_sweep(opts: dict[str, Any]) -> list[tuple]:
    amps = _float_list(opts["amps"])
    widths = _float_list(opts["widths"])
    tasks = [(a, w, opts) for a in amps for w in widths]
    jobs = max(1, int(opts["jobs"]))
    if jobs == 1 or len(tasks) <= 1:
        return [sweep_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(sweep_cell, tasks))


def write_phase(path: Path, rows: Sequence[tuple]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(PHASE_COLUMNS) + "\n")
        for amp, width, mass, norm, F0, regime, verdict in rows:
            fh.write(",".join([fmt(amp), fmt(width), fmt(mass), fmt(norm), fmt(F0), regime, verdict]) + "\n")


def cmd_sweep(args) -> int:
    opts = dict(SWEEP_DEFAULTS)
    if args.config:
        opts.update(read_config(args.config, SWEEP_KEYS))
    for key in SWEEP_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            opts[key] = flag
    _params(opts["n"], opts["m"], 1.0)
    try:
        _float_list(opts["amps"]), _float_list(opts["widths"])
    except ValueError as exc:
        raise CommandError(f"bad amplitude or width list: {exc}") from None
    rows = run_sweep(opts)
    out = _output_dir(args.output_dir)
    write_phase(out / "phase.csv", rows)
    counts = {r.value: sum(row[5] == r.value for row in rows) for r in Regime}
    _emit([("cells", len(rows))] + list(counts.items()) + [("errors", sum(row[5] == "error" for row in rows))])
    return 0


# --- argument parsing -----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit code 2 is reserved for blow-up."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _add_problem(p: argparse.ArgumentParser, mass: bool = True):
    p.add_argument("--n", type=int, default=3, help="space dimension (>= 3)")
    p.add_argument("--m", type=float, default=1.25, help="diffusion exponent")
    if mass:
        p.add_argument("--mass", type=float, default=1.0, help="total mass M0")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kscrit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("criterion", help="print the threshold constants")
    _add_problem(p)
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("classify", help="classify initial data")
    _add_problem(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", choices=SCENARIO_NAMES, default="wide-subcritical")
    src.add_argument("--snapshot", help="density snapshot file")
    p.add_argument("--K-mult", dest="K_mult", type=float, default=2.0, help="K / K0 for example1")
    p.add_argument("--cells", type=int, default=2048, help="cells for the Gaussian scenarios")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="run the time stepper and write series.csv/report.txt")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--init", help="scenario name or snapshot path")
    p.add_argument("--K-mult", dest="K_mult", type=float)
    for key, conv in SIM_KEYS.items():
        if key in ("init", "K_mult"):
            continue
        flag = "--" + key.replace("_", "-")
        p.add_argument(flag, dest=key, type=conv, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("example1", help="thresholds K1, K2, K0 of the small-mass ball")
    _add_problem(p, mass=False)
    p.add_argument("--eps0", type=float, default=1.0, help="mass of the ball")
    p.add_argument("--K-mult", dest="K_mult", type=float, default=2.0, help="check both conditions at K_mult*K0")
    p.set_defaults(func=cmd_example1)

    p = sub.add_parser("sweep", help="classify (and optionally simulate) a grid of Gaussians")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=float)
    p.add_argument("--amps", help="comma-separated peak amplitudes")
    p.add_argument("--widths", help="comma-separated standard deviations")
    p.add_argument("--cells", type=int)
    p.add_argument("--simulate", action="store_const", const=True)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--dt-init", dest="dt_init", type=float)
    p.add_argument("--dt-min", dest="dt_min", type=float)
    p.add_argument("--collapse-steps", dest="collapse_steps", type=int)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
