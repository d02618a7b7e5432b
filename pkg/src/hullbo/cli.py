"""Command-line front end: run campaigns, generate reports, query oracles.

Configuration is a single JSON document; command-line flags override file
values, which override defaults. Unknown config keys are rejected by name.

Exit codes: 0 success, 2 configuration error, 3 evaluator failure,
4 report input error.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .design_space import DesignSpace, Dimension, space_by_name
from .acquisition import AcquisitionConfig
from .driver import (
    CampaignAborted,
    ConfigError,
    DatasetFormatError,
    RunConfig,
    best_feasible,
    run,
    save_dataset,
)
from .evaluators import BUILTIN_EVALUATORS, EvaluatorSpec, EvaluatorUnavailableError
from .gp import GpConfig
from .oracle import ldmos9_search_optimum, toy2d_grid_optimum
from .report import write_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVALUATOR = 3
EXIT_REPORT = 4

_TOP_KEYS = {
    "space", "evaluator", "mode", "bv_target", "bv_low", "bv_high",
    "n_init", "n_total", "seed", "warmup_unconstrained", "feasibility",
    "gp", "acq", "out_dir",
}
_SPACE_KEYS = {"dims"}
_DIM_KEYS = {"name", "lower", "upper", "scale"}
_EVALUATOR_KEYS = {"command", "timeout"}
_FEASIBILITY_KEYS = {"rule", "tol"}
_GP_KEYS = {"length_scale", "jitter_start", "jitter_max", "optimize_length_scale"}
_ACQ_KEYS = {"n_restarts", "lbfgs_max_iterations", "candidate_pool", "xi"}


def _reject_unknown(data: dict, allowed: set, context: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown {context} key {key!r}")


def _parse_space(value) -> DesignSpace:
    if isinstance(value, str):
        try:
            return space_by_name(value)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    if not isinstance(value, dict):
        raise ConfigError("space must be a builtin name or an object with dims")
    _reject_unknown(value, _SPACE_KEYS, "space")
    dims = value.get("dims")
    if not isinstance(dims, list) or not dims:
        raise ConfigError("space.dims must be a non-empty list")
    parsed = []
    for entry in dims:
        if not isinstance(entry, dict):
            raise ConfigError("each space dimension must be an object")
        _reject_unknown(entry, _DIM_KEYS, "space dimension")
        try:
            parsed.append(Dimension(
                entry["name"], float(entry["lower"]), float(entry["upper"]),
                entry.get("scale", "linear"),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad space dimension {entry!r}: {exc}") from exc
    return DesignSpace(parsed)


def _parse_evaluator(value) -> EvaluatorSpec:
    if isinstance(value, str):
        return _evaluator_from_flag(value)
    if not isinstance(value, dict):
        raise ConfigError("evaluator must be a builtin name or an object with a command")
    _reject_unknown(value, _EVALUATOR_KEYS, "evaluator")
    command = value.get("command")
    if not isinstance(command, list) or not command:
        raise ConfigError("evaluator.command must be a non-empty list")
    try:
        return EvaluatorSpec("subprocess", tuple(str(c) for c in command),
                             float(value.get("timeout", 30.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _evaluator_from_flag(text: str) -> EvaluatorSpec:
    if text.startswith("cmd:"):
        command = shlex.split(text[len("cmd:"):])
        if not command:
            raise ConfigError("empty evaluator command")
        return EvaluatorSpec("subprocess", tuple(command))
    if text not in BUILTIN_EVALUATORS:
        raise ConfigError(
            f"unknown evaluator {text!r}; builtins are {list(BUILTIN_EVALUATORS)} "
            "(prefix external commands with 'cmd:')"
        )
    return EvaluatorSpec(text)


def _parse_feasibility(value) -> tuple[str, float | None]:
    if isinstance(value, str):
        return value, None
    if not isinstance(value, dict):
        raise ConfigError("feasibility must be a rule name or an object")
    _reject_unknown(value, _FEASIBILITY_KEYS, "feasibility")
    rule = value.get("rule", "bv_at_least_target")
    tol = value.get("tol")
    return rule, (None if tol is None else float(tol))


def _sub_config(data: dict, keys: set, context: str, cls):
    _reject_unknown(data, keys, context)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {context} config: {exc}") from exc


def _load_config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    _reject_unknown(data, _TOP_KEYS, "config")
    return data


def _build_run_config(args) -> tuple[RunConfig, Path]:
    data = _load_config_file(args.config) if args.config else {}

    mode = args.mode or data.get("mode")
    if mode is None:
        raise ConfigError("mode is required (flag --mode or config key 'mode')")

    if args.evaluator is not None:
        evaluator = _evaluator_from_flag(args.evaluator)
    elif "evaluator" in data:
        evaluator = _parse_evaluator(data["evaluator"])
    else:
        raise ConfigError("evaluator is required (flag --evaluator or config key 'evaluator')")

    space = _parse_space(data["space"]) if "space" in data and data["space"] is not None else None

    bv_target = args.target if args.target is not None else data.get("bv_target")
    bv_low, bv_high = data.get("bv_low"), data.get("bv_high")
    if args.target_range is not None:
        try:
            lo_text, hi_text = args.target_range.split(":", 1)
            bv_low, bv_high = float(lo_text), float(hi_text)
        except ValueError as exc:
            raise ConfigError(f"--target-range must be LO:HI, got {args.target_range!r}") from exc

    n_total = args.n_total if args.n_total is not None else data.get("n_total")
    if n_total is None:
        raise ConfigError("n_total is required (flag --n-total or config key 'n_total')")

    rule, tol = _parse_feasibility(data.get("feasibility", "bv_at_least_target"))

    try:
        config = RunConfig(
            evaluator=evaluator,
            mode=mode,
            n_total=int(n_total),
            space=space,
            bv_target=None if bv_target is None else float(bv_target),
            bv_low=None if bv_low is None else float(bv_low),
            bv_high=None if bv_high is None else float(bv_high),
            n_init=int(args.n_init if args.n_init is not None else data.get("n_init", 10)),
            seed=int(args.seed if args.seed is not None else data.get("seed", 0)),
            warmup_unconstrained=int(data.get("warmup_unconstrained", 2)),
            feasibility_rule=rule,
            feasibility_tol=tol,
            gp=_sub_config(dict(data.get("gp", {})), _GP_KEYS, "gp", GpConfig),
            acq=_sub_config(dict(data.get("acq", {})), _ACQ_KEYS, "acq", AcquisitionConfig),
        ).resolved()
    except (ConfigError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    out = args.out or data.get("out_dir") or f"runs/{mode}-seed{config.seed}"
    return config, Path(out)


def _describe(record) -> str:
    ev = record.evaluation
    coords = ", ".join(f"{v:.6g}" for v in record.x)
    return (f"fom={ev.fom:.6g} kW/mm^2, bv={ev.bv:.6g} V, "
            f"rsp_on={ev.rsp_on:.6g} mOhm*mm^2, x=[{coords}] (iteration {record.iteration})")


def _cmd_run(args) -> int:
    try:
        config, out_dir = _build_run_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stride = max(1, (config.n_total - config.n_init) // 4)

    def progress(iteration, incumbent, lam):
        if iteration % stride == 0 and incumbent is not None:
            print(f"  iteration {iteration}: incumbent label {incumbent:.6g}, lambda {lam:.6g}")

    try:
        dataset = run(config, progress=progress)
    except CampaignAborted as exc:
        save_dataset(exc.dataset, out_dir)
        print(f"campaign aborted: {exc.reason}", file=sys.stderr)
        print(f"partial dataset saved to {out_dir}", file=sys.stderr)
        return EXIT_EVALUATOR
    except EvaluatorUnavailableError as exc:
        print(f"evaluator unavailable: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR

    save_dataset(dataset, out_dir)
    valid = dataset.valid_records()
    incumbent = max(valid, key=lambda r: r.evaluation.fom)
    print(f"run complete: {len(dataset.records)} records "
          f"({dataset.n_valid} valid) in {out_dir}")
    print(f"incumbent: {_describe(incumbent)}")
    if config.mode == "constrained":
        feasible = best_feasible(dataset, config.bv_target,
                                 config.feasibility_rule, config.feasibility_tol)
        if feasible is None:
            print(f"no feasible record for target {config.bv_target:g} V")
        else:
            print(f"best feasible (target {config.bv_target:g} V): {_describe(feasible)}")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        written = write_report(args.run_dir)
    except (DatasetFormatError, ValueError) as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_REPORT
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _print_oracle(label: str, result) -> None:
    if result is None:
        print(f"{label}: infeasible")
        return
    coords = ", ".join(f"{v:.17g}" for v in result.x)
    print(f"{label}: fom={result.fom:.17g} bv={result.bv:.17g} "
          f"rsp_on={result.rsp_on:.17g} x=[{coords}]")


def _cmd_oracle(args) -> int:
    if args.evaluator == "toy2d":
        _print_oracle("best", toy2d_grid_optimum(args.resolution))
        if args.target is not None:
            _print_oracle(
                f"best with bv >= {args.target:g}",
                toy2d_grid_optimum(args.resolution, bv_target=args.target),
            )
        return EXIT_OK
    if args.evaluator == "ldmos9-surrogate":
        _print_oracle("best", ldmos9_search_optimum(args.samples, args.seed))
        if args.target is not None:
            _print_oracle(
                f"best with bv >= {args.target:g}",
                ldmos9_search_optimum(args.samples, args.seed, bv_target=args.target),
            )
        return EXIT_OK
    print(f"config error: unknown evaluator {args.evaluator!r} "
          f"(oracles exist for {list(BUILTIN_EVALUATORS)})", file=sys.stderr)
    return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hullbo",
        description="Constrained Bayesian optimization with hull-derived Lagrange multipliers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a campaign and persist the run directory")
    p_run.add_argument("--config", help="JSON config file")
    p_run.add_argument("--seed", type=int, help="random seed")
    p_run.add_argument("--out", help="output run directory")
    p_run.add_argument("--mode", choices=["unconstrained", "constrained", "frontier"])
    p_run.add_argument("--target", type=float, help="target BV in volts (constrained mode)")
    p_run.add_argument("--target-range", help="LO:HI volts (frontier mode)")
    p_run.add_argument("--n-init", type=int, help="random initialization evaluations")
    p_run.add_argument("--n-total", type=int, help="total valid evaluations")
    p_run.add_argument("--evaluator",
                       help="builtin name, or 'cmd:<argv>' for an external evaluator")
    p_run.set_defaults(handler=_cmd_run)

    p_report = sub.add_parser("report", help="emit plots and CSVs for a run directory")
    p_report.add_argument("run_dir", help="directory written by 'hullbo run'")
    p_report.set_defaults(handler=_cmd_report)

    p_oracle = sub.add_parser("oracle", help="exhaustive-search reference for a builtin evaluator")
    p_oracle.add_argument("evaluator", help="toy2d or ldmos9-surrogate")
    p_oracle.add_argument("--target", type=float, help="also report the best with bv >= target")
    p_oracle.add_argument("--resolution", type=int, default=1001, help="toy2d grid resolution")
    p_oracle.add_argument("--samples", type=int, default=1_000_000,
                          help="ldmos9-surrogate random-search samples")
    p_oracle.add_argument("--seed", type=int, default=0, help="ldmos9-surrogate search seed")
    p_oracle.set_defaults(handler=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
