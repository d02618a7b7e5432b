"""Campaign orchestration: seeded initialization, per-iteration multiplier
update, relabeling of history, surrogate fit, acquisition, evaluation.

Three run modes:

* ``unconstrained`` — plain maximization of the figure of merit.
* ``constrained``   — one fixed target BV; the objective is the Lagrangian
  with a multiplier re-priced from the hull every iteration.
* ``frontier``      — a fresh target drawn uniformly per iteration, sweeping
  out the whole FOM-vs-BV boundary in one campaign.

A campaign is strictly sequential and fully determined by its config
(including the seed): bitwise-identical datasets on replay.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import AcquisitionConfig, maximize
from .design_space import DesignSpace, Dimension
from .evaluators import (
    Evaluation,
    EvaluatorSpec,
    EvaluatorUnavailableError,
    make_evaluator,
)
from .gp import GpConfig, fit
from .lagrange import FrontierPoint, LagrangeState, UpperHull, lagrangian, multiplier, upper_hull

MODES = ("unconstrained", "constrained", "frontier")

# Feasibility of a record against a target BV: at-least is the default; the
# windowed rule accepts BV within +-tol of the target.
FEASIBILITY_RULES = ("bv_at_least_target", "bv_within_tolerance")

MAX_EVAL_RETRIES = 3


class ConfigError(ValueError):
    """The run configuration is inconsistent."""


class CampaignAborted(RuntimeError):
    """The campaign could not finish; ``dataset`` holds everything acquired."""

    def __init__(self, reason: str, dataset: "Dataset"):
        super().__init__(reason)
        self.reason = reason
        self.dataset = dataset


@dataclass(frozen=True)
class RunConfig:
    evaluator: EvaluatorSpec
    mode: str
    n_total: int
    space: DesignSpace | None = None          # None: builtin evaluator's canonical space
    bv_target: float | None = None            # constrained mode
    bv_low: float | None = None               # frontier mode
    bv_high: float | None = None
    n_init: int = 10
    seed: int = 0
    warmup_unconstrained: int = 2             # leading BO iterations forced to lambda = 0
    feasibility_rule: str = "bv_at_least_target"
    feasibility_tol: float | None = None
    gp: GpConfig = field(default_factory=GpConfig)
    acq: AcquisitionConfig = field(default_factory=AcquisitionConfig)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {list(MODES)}")
        if self.n_init < 1:
            raise ConfigError("n_init must be >= 1")
        if self.n_total <= self.n_init:
            raise ConfigError(f"n_total ({self.n_total}) must exceed n_init ({self.n_init})")
        if self.warmup_unconstrained < 0:
            raise ConfigError("warmup_unconstrained must be >= 0")
        if self.mode == "constrained" and self.bv_target is None:
            raise ConfigError("constrained mode needs bv_target")
        if self.mode == "frontier":
            if self.bv_low is None or self.bv_high is None:
                raise ConfigError("frontier mode needs bv_low and bv_high")
            if not (self.bv_low < self.bv_high):
                raise ConfigError("frontier mode needs bv_low < bv_high")
        if self.feasibility_rule not in FEASIBILITY_RULES:
            raise ConfigError(
                f"unknown feasibility rule {self.feasibility_rule!r}; "
                f"expected one of {list(FEASIBILITY_RULES)}"
            )
        if self.feasibility_rule == "bv_within_tolerance" and (
            self.feasibility_tol is None or self.feasibility_tol < 0.0
        ):
            raise ConfigError("bv_within_tolerance needs feasibility_tol >= 0")

    def resolved(self) -> "RunConfig":
        """Validate and fill in the evaluator's canonical space when unset."""
        self.validate()
        if self.space is not None:
            return self
        probe = make_evaluator_space(self.evaluator)
        if probe is None:
            raise ConfigError("subprocess evaluator needs an explicit design space")
        return replace(self, space=probe)


def make_evaluator_space(spec: EvaluatorSpec) -> DesignSpace | None:
    """Canonical space of a builtin evaluator spec, None for subprocess."""
    if spec.kind == "subprocess":
        return None
    from .evaluators import BuiltinEvaluator

    return BuiltinEvaluator(spec.kind).space


@dataclass(frozen=True)
class RunRecord:
    """One evaluation in campaign order.

    ``objective_label`` is the value handed to the surrogate at this record's
    own iteration (later iterations relabel history transiently; storage is
    never rewritten). Invalid evaluations carry no label.
    """

    iteration: int
    phase: str                       # "init" | "bo"
    x: tuple[float, ...]
    evaluation: Evaluation
    lambda_used: float
    target_used: float | None
    objective_label: float | None


@dataclass
class Dataset:
    """Append-only campaign history plus the resolved config snapshot."""

    config: RunConfig
    records: list[RunRecord] = field(default_factory=list)

    def valid_records(self) -> list[RunRecord]:
        return [r for r in self.records if r.evaluation.valid]

    @property
    def n_valid(self) -> int:
        return sum(1 for r in self.records if r.evaluation.valid)


def objective_labels(records, state: LagrangeState | None) -> np.ndarray:
    """Labels the surrogate is fitted to, under the current multiplier state.

    With no state (unconstrained mode) the label is the FOM itself; otherwise
    every valid record is re-priced with the current Lagrangian.
    """
    if state is None:
        return np.array([r.evaluation.fom for r in records])
    return np.array([lagrangian(r.evaluation.fom, r.evaluation.bv, state) for r in records])


def frontier_points(records) -> list[FrontierPoint]:
    """Valid records as frontier points, tagged with their iteration."""
    return [
        FrontierPoint(r.evaluation.bv, r.evaluation.fom, r.iteration)
        for r in records
        if r.evaluation.valid
    ]


def run(config: RunConfig, progress=None) -> Dataset:
    """Execute one campaign and return its dataset.

    ``progress``, when given, is called as ``progress(iteration, incumbent,
    lam)`` after every appended record, where ``incumbent`` is the best
    objective label among valid records under the current state.

    Raises :class:`CampaignAborted` (with the partial dataset attached) if
    the evaluator cannot be started or an iteration exhausts its retries.
    """
    config = config.resolved()
    space = config.space
    rng = np.random.default_rng(config.seed)
    dataset = Dataset(config=config)

    try:
        evaluator = make_evaluator(config.evaluator, space)
    except EvaluatorUnavailableError as exc:
        raise CampaignAborted(str(exc), dataset) from exc

    def notify(state: LagrangeState | None):
        if progress is None:
            return
        valid = dataset.valid_records()
        incumbent = float(np.max(objective_labels(valid, state))) if valid else None
        lam = 0.0 if state is None else state.lam
        progress(len(dataset.records), incumbent, lam)

    def append(phase: str, x, evaluation: Evaluation, state: LagrangeState | None):
        label = None
        if evaluation.valid:
            if state is None:
                label = evaluation.fom
            else:
                label = lagrangian(evaluation.fom, evaluation.bv, state)
        record = RunRecord(
            iteration=len(dataset.records) + 1,
            phase=phase,
            x=tuple(float(v) for v in x),
            evaluation=evaluation,
            lambda_used=0.0 if state is None else state.lam,
            target_used=None if state is None else state.bv_target,
            objective_label=label,
        )
        dataset.records.append(record)
        notify(state)
        return record

    def acquire(phase: str, x, state: LagrangeState | None):
        """Evaluate x; on an invalid result retry fresh random points."""
        record = append(phase, x, evaluator.evaluate(x), state)
        retries = 0
        while not record.evaluation.valid:
            if retries >= MAX_EVAL_RETRIES:
                raise CampaignAborted(
                    f"evaluation failed {retries + 1} times in a row "
                    f"(iteration {record.iteration})",
                    dataset,
                )
            retries += 1
            retry_x = space.denormalize(rng.random(space.ndim))
            record = append(phase, retry_x, evaluator.evaluate(retry_x), state)
        return record

    try:
        with evaluator:
            for _ in range(config.n_init):
                x = space.denormalize(rng.random(space.ndim))
                acquire("init", x, None)

            bo_iteration = 0
            while dataset.n_valid < config.n_total:
                bo_iteration += 1

                if config.mode == "unconstrained":
                    target = None
                elif config.mode == "constrained":
                    target = float(config.bv_target)
                else:
                    target = float(config.bv_low + (config.bv_high - config.bv_low) * rng.random())

                if target is None:
                    state = None
                elif bo_iteration <= config.warmup_unconstrained:
                    state = LagrangeState.inactive(target)
                else:
                    state = multiplier(upper_hull(frontier_points(dataset.records)), target)

                valid = dataset.valid_records()
                labels = objective_labels(valid, state)
                inputs = space.normalize(np.array([r.x for r in valid]))
                model = fit(inputs, labels, config.gp)
                u_next = maximize(model, config.acq, rng)
                acquire("bo", space.denormalize(u_next), state)
    except CampaignAborted:
        raise
    except EvaluatorUnavailableError as exc:
        raise CampaignAborted(str(exc), dataset) from exc
    return dataset


def is_feasible(evaluation: Evaluation, target: float, rule: str, tol: float | None = None) -> bool:
    if rule == "bv_at_least_target":
        return evaluation.bv >= target
    if rule == "bv_within_tolerance":
        if tol is None:
            raise ValueError("bv_within_tolerance needs a tolerance")
        return abs(evaluation.bv - target) <= tol
    raise ValueError(f"unknown feasibility rule {rule!r}")


def best_feasible(
    dataset: Dataset,
    target: float,
    rule: str = "bv_at_least_target",
    tol: float | None = None,
) -> RunRecord | None:
    """Highest-FOM valid record meeting the feasibility rule, earliest on ties."""
    best = None
    for record in dataset.records:
        if not record.evaluation.valid:
            continue
        if not is_feasible(record.evaluation, target, rule, tol):
            continue
        if best is None or record.evaluation.fom > best.evaluation.fom:
            best = record
    return best


def frontier_report(dataset: Dataset) -> UpperHull:
    """Upper hull over every valid record of the campaign."""
    points = frontier_points(dataset.records)
    if not points:
        raise ValueError("no valid records to build a frontier from")
    return upper_hull(points)


# ---------------------------------------------------------------------------
# Run-directory persistence
#
# config.json   resolved config snapshot
# records.csv   one row per record, 17 significant digits for exact replay
# manifest.json seed, engine version, record counts

RECORDS_FILE = "records.csv"
CONFIG_FILE = "config.json"
MANIFEST_FILE = "manifest.json"


class DatasetFormatError(ValueError):
    """A run directory is missing or corrupt; ``row`` locates CSV defects."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


def _format_value(v: float | None) -> str:
    return "" if v is None else f"{v:.17g}"


def config_to_dict(config: RunConfig) -> dict:
    return {
        "space": {
            "dims": [
                {"name": d.name, "lower": d.lower, "upper": d.upper, "scale": d.scale}
                for d in config.space.dims
            ]
        },
        "evaluator": {
            "kind": config.evaluator.kind,
            "command": list(config.evaluator.command),
            "timeout": config.evaluator.timeout,
        },
        "mode": config.mode,
        "bv_target": config.bv_target,
        "bv_low": config.bv_low,
        "bv_high": config.bv_high,
        "n_init": config.n_init,
        "n_total": config.n_total,
        "seed": config.seed,
        "warmup_unconstrained": config.warmup_unconstrained,
        "feasibility_rule": config.feasibility_rule,
        "feasibility_tol": config.feasibility_tol,
        "gp": {
            "length_scale": config.gp.length_scale,
            "jitter_start": config.gp.jitter_start,
            "jitter_max": config.gp.jitter_max,
            "optimize_length_scale": config.gp.optimize_length_scale,
        },
        "acq": {
            "n_restarts": config.acq.n_restarts,
            "lbfgs_max_iterations": config.acq.lbfgs_max_iterations,
            "candidate_pool": config.acq.candidate_pool,
            "xi": config.acq.xi,
        },
    }


def config_from_dict(data: dict) -> RunConfig:
    space = DesignSpace(
        Dimension(d["name"], d["lower"], d["upper"], d.get("scale", "linear"))
        for d in data["space"]["dims"]
    )
    ev = data["evaluator"]
    return RunConfig(
        evaluator=EvaluatorSpec(ev["kind"], tuple(ev.get("command", ())), ev.get("timeout", 30.0)),
        mode=data["mode"],
        n_total=data["n_total"],
        space=space,
        bv_target=data.get("bv_target"),
        bv_low=data.get("bv_low"),
        bv_high=data.get("bv_high"),
        n_init=data.get("n_init", 10),
        seed=data.get("seed", 0),
        warmup_unconstrained=data.get("warmup_unconstrained", 2),
        feasibility_rule=data.get("feasibility_rule", "bv_at_least_target"),
        feasibility_tol=data.get("feasibility_tol"),
        gp=GpConfig(**data.get("gp", {})),
        acq=AcquisitionConfig(**data.get("acq", {})),
    )


def records_csv(dataset: Dataset) -> str:
    """Serialize records with a stable header and 17-significant-digit floats."""
    d = dataset.config.space.ndim
    header = (
        ["iteration", "phase"]
        + [f"x_{k + 1}" for k in range(d)]
        + ["bv", "rsp_on", "fom", "valid", "lambda_used", "target_used"]
    )
    lines = [",".join(header)]
    for r in dataset.records:
        ev = r.evaluation
        row = (
            [str(r.iteration), r.phase]
            + [_format_value(v) for v in r.x]
            + [
                _format_value(ev.bv),
                _format_value(ev.rsp_on),
                _format_value(ev.fom),
                "1" if ev.valid else "0",
                _format_value(r.lambda_used),
                _format_value(r.target_used),
            ]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def save_dataset(dataset: Dataset, run_dir) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / CONFIG_FILE).write_text(
        json.dumps(config_to_dict(dataset.config), indent=2, sort_keys=True) + "\n"
    )
    (run_dir / RECORDS_FILE).write_text(records_csv(dataset))
    manifest = {
        "engine": "hullbo",
        "engine_version": __version__,
        "seed": dataset.config.seed,
        "records": len(dataset.records),
        "valid_records": dataset.n_valid,
    }
    (run_dir / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return run_dir


def load_dataset(run_dir) -> Dataset:
    """Read a run directory back; raises DatasetFormatError on any defect."""
    run_dir = Path(run_dir)
    config_path = run_dir / CONFIG_FILE
    records_path = run_dir / RECORDS_FILE
    if not config_path.is_file():
        raise DatasetFormatError(f"missing {config_path}")
    if not records_path.is_file():
        raise DatasetFormatError(f"missing {records_path}")
    try:
        config = config_from_dict(json.loads(config_path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"corrupt {config_path}: {exc}") from exc

    d = config.space.ndim
    expected_columns = 2 + d + 6
    dataset = Dataset(config=config)
    with records_path.open(newline="") as handle:
        reader = csv.reader(handle)
        for row_number, row in enumerate(reader, start=1):
            if row_number == 1:
                if len(row) != expected_columns or row[0] != "iteration":
                    raise DatasetFormatError(
                        f"bad header in {records_path} (row 1)", row=1
                    )
                continue
            if len(row) != expected_columns:
                raise DatasetFormatError(
                    f"row {row_number} of {records_path} has {len(row)} fields, "
                    f"expected {expected_columns}",
                    row=row_number,
                )
            try:
                iteration = int(row[0])
                phase = row[1]
                x = tuple(float(v) for v in row[2 : 2 + d])
                bv, rsp, fom_value = (float(v) for v in row[2 + d : 5 + d])
                valid = row[5 + d] == "1"
                lam = float(row[6 + d])
                target = float(row[7 + d]) if row[7 + d] else None
            except ValueError as exc:
                raise DatasetFormatError(
                    f"row {row_number} of {records_path}: {exc}", row=row_number
                ) from exc
            evaluation = Evaluation(bv, rsp, fom_value, valid)
            label = None
            if valid:
                if target is None:
                    label = fom_value
                else:
                    label = lagrangian(fom_value, bv, LagrangeState(lam, target, None, None))
            dataset.records.append(
                RunRecord(iteration, phase, x, evaluation, lam, target, label)
            )
    return dataset
