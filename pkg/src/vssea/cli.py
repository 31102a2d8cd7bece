"""Command-line entry point: ``vssea {run,catalog,sweep-static,validate}``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from .beam import BeamSpec, solve_deflection, solve_force_for_deflection
from .csvio import write_csv, write_metrics, write_sweep_csv
from .errors import ConfigInvalid, VsseaError
from .experiments import compare_models_sweep, get_scenario, run_many, scenario_catalog
from .oracles import central_difference, shoot_elastica
from .vsam import StiffnessModelKind, spring_torque, stiffness, stored_energy

USAGE_ERROR = 2
VALIDATION_FAILED = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vssea", description="Variable stiffness series elastic actuator simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path, help="dotted-key configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")

    run = sub.add_parser("run", help="run catalog scenarios and write CSV + metrics")
    run.add_argument("scenarios", nargs="*", metavar="scenario")
    run.add_argument("--out", type=Path, help="output directory (default $VSSEA_OUT_DIR or .)")
    run.add_argument("--workers", type=int, help="parallel worker processes")
    common(run)

    sub.add_parser("catalog", help="list scenario names")

    sweep = sub.add_parser("sweep-static", help="large vs small deflection model sweep to CSV")
    sweep.add_argument("--out", type=Path)
    sweep.add_argument("--angles", type=int, default=11, help="link deflection samples over +-limit")
    sweep.add_argument("--positions", type=int, default=9, help="roller positions over the travel")
    common(sweep)

    validate = sub.add_parser("validate", help="check solvers against independent oracles")
    common(validate)
    return p


def _load(args) -> cfg.RunConfig:
    return cfg.load_config(args.config, args.set)


def _out_dir(args, run_config) -> Path:
    out = args.out or run_config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_catalog(args) -> int:
    for s in scenario_catalog():
        print(f"{s.name:30s} {s.description}")
    return 0


def _cmd_run(args) -> int:
    rc = _load(args)
    names = args.scenarios or ([rc.scenario] if rc.scenario else [])
    if not names:
        raise _UsageError("vssea run: name at least one scenario (or set sim.scenario)")
    try:
        scenarios = [get_scenario(n, rc.params, rc.physics_dt, rc.control_dt) for n in names]
    except KeyError as exc:
        raise _UsageError(f"vssea run: {exc.args[0]}") from None
    out = _out_dir(args, rc)
    for result in run_many(scenarios, args.workers or rc.workers):
        write_csv(result, out / f"{result.scenario}.csv")
        write_metrics(result, out / f"{result.scenario}_metrics.json")
        summary = ", ".join(f"{k}={v:.6g}" for k, v in result.metrics.items())
        print(f"{result.scenario}: {summary}")
    return 0


def _cmd_sweep(args) -> int:
    rc = _load(args)
    if args.angles < 2 or args.positions < 2:
        raise _UsageError("vssea sweep-static: need at least 2 samples per axis")
    vsam = rc.params.vsam
    q = np.linspace(-vsam.deflection_limit, vsam.deflection_limit, args.angles)
    x = np.linspace(vsam.x_min, vsam.x_max, args.positions)
    sweep = compare_models_sweep(vsam, q, x, rc.settings)
    path = _out_dir(args, rc) / "static_sweep.csv"
    write_sweep_csv(sweep, path)
    print(f"wrote {path} ({q.size * x.size} rows); max torque gap {np.max(sweep.torque_gap()):.4%}")
    return 0


def validation_checks(rc: cfg.RunConfig):
    """Yield ``(name, passed, detail)`` for the built-in consistency checks."""
    settings, vsam = rc.settings, rc.params.vsam
    unit = BeamSpec(1.0, 1.0, 1.0)
    for alpha in (0.1, 0.5, 1.0, 2.0):
        sol = solve_deflection(unit, 1.0, alpha, settings)
        ref = shoot_elastica(alpha)
        worst = max(abs(sol.tip_slope / ref.tip_slope - 1),
                    abs(sol.deflection_x / ref.deflection_x - 1),
                    abs(sol.deflection_y / ref.deflection_y - 1))
        yield f"elastica vs shooting oracle, alpha={alpha:g}", worst <= 1e-5, f"rel err {worst:.2e}"

    for d in (0.05, 0.2, 0.4):
        f = solve_force_for_deflection(unit, 1.0, d, settings)
        back = solve_deflection(unit, 1.0, f, settings).deflection_y
        err = abs(back / d - 1)
        yield f"force/deflection round trip, d={d:g}", err <= 1e-8, f"rel err {err:.2e}"

    small = StiffnessModelKind.SMALL
    soft = stiffness(vsam, small, vsam.q_m2_soft, 0.0)
    stiff = stiffness(vsam, small, vsam.q_m2_stiff, 0.0)
    err = max(abs(soft / rc["vsam.k_soft"] - 1), abs(stiff / rc["vsam.k_stiff"] - 1))
    yield "calibrated stiffness endpoints", err <= 1e-6, f"{soft:.6g} / {stiff:.6g} Nm/rad"

    worst = 0.0
    for q in np.linspace(-0.99 * vsam.deflection_limit, 0.99 * vsam.deflection_limit, 7):
        for q_m2 in (vsam.q_m2_stiff, 0.5 * (vsam.q_m2_stiff + vsam.q_m2_soft), vsam.q_m2_soft):
            fd = central_difference(lambda v: spring_torque(vsam, small, q_m2, v), q, 1e-6)
            worst = max(worst, abs(fd - stiffness(vsam, small, q_m2, q)) / stiffness(vsam, small, q_m2, q))
    yield "small-model stiffness vs torque gradient", worst <= 1e-6, f"rel err {worst:.2e}"

    large = StiffnessModelKind.LARGE
    q = math.radians(15.0)
    fd = central_difference(lambda v: stored_energy(vsam, large, vsam.q_m2_soft, v, settings), q, 1e-4)
    tau = spring_torque(vsam, large, vsam.q_m2_soft, q, settings)
    err = abs(fd / tau - 1)
    yield "large-model energy gradient vs torque", err <= 1e-5, f"rel err {err:.2e}"


def _cmd_validate(args) -> int:
    rc = _load(args)
    ok = True
    for name, passed, detail in validation_checks(rc):
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return 0 if ok else VALIDATION_FAILED


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
        handler = {"run": _cmd_run, "catalog": _cmd_catalog,
                   "sweep-static": _cmd_sweep, "validate": _cmd_validate}[args.command]
        return handler(args)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        print(parser.format_help(), file=sys.stderr)
        return USAGE_ERROR
    except ConfigInvalid as exc:
        print(f"vssea: invalid configuration: {exc}", file=sys.stderr)
        return VALIDATION_FAILED
    except VsseaError as exc:
        print(f"vssea: {type(exc).__name__}: {exc}", file=sys.stderr)
        return VALIDATION_FAILED


if __name__ == "__main__":
    sys.exit(main())
