"""Shared test helpers."""

from hullbo.driver import Dataset
from hullbo.lagrange import FrontierPoint, multiplier, upper_hull


def replay_lambdas(dataset: Dataset) -> dict[int, float]:
    """Recompute the multiplier every BO record should have used, from the
    records stored before it (valid ones only, exactly as the driver fits).

    Returns {iteration: lambda}. Retries within one BO iteration share the
    state computed at the top of that iteration.
    """
    config = dataset.config
    expected: dict[int, float] = {}
    valid_so_far = []
    bo_iteration = 0
    current_lam = 0.0
    starting_new_iteration = True
    for record in dataset.records:
        if record.phase == "init":
            if record.evaluation.valid:
                valid_so_far.append(record)
            continue
        if starting_new_iteration:
            bo_iteration += 1
            if config.mode == "unconstrained" or bo_iteration <= config.warmup_unconstrained:
                current_lam = 0.0
            else:
                hull = upper_hull([
                    FrontierPoint(r.evaluation.bv, r.evaluation.fom, r.iteration)
                    for r in valid_so_far
                ])
                current_lam = multiplier(hull, record.target_used).lam
            starting_new_iteration = False
        expected[record.iteration] = current_lam
        if record.evaluation.valid:
            valid_so_far.append(record)
            starting_new_iteration = True
    return expected


def assert_replay_consistent(dataset: Dataset) -> None:
    """Every stored lambda must equal its recomputation, bit for bit."""
    expected = replay_lambdas(dataset)
    for record in dataset.records:
        if record.phase == "bo":
            assert record.lambda_used == expected[record.iteration], (
                f"iteration {record.iteration}: stored lambda {record.lambda_used!r} "
                f"!= replayed {expected[record.iteration]!r}"
            )
