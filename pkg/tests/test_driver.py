import numpy as np
import pytest
from support import assert_replay_consistent

from hullbo.design_space import DesignSpace, Dimension
from hullbo.driver import (
    CampaignAborted,
    ConfigError,
    Dataset,
    RunConfig,
    RunRecord,
    best_feasible,
    frontier_report,
    load_dataset,
    objective_labels,
    records_csv,
    run,
    save_dataset,
)
from hullbo.evaluators import Evaluation, EvaluatorSpec
from hullbo.lagrange import LagrangeState

ECHO_SPACE = DesignSpace([Dimension("bv_in", 20.0, 60.0), Dimension("rsp_in", 1.0, 10.0)])


def toy_config(**overrides):
    base = dict(
        evaluator=EvaluatorSpec("toy2d"),
        mode="unconstrained",
        n_total=16,
        n_init=6,
        seed=0,
    )
    base.update(overrides)
    return RunConfig(**base)


def fake_record(iteration, bv, fom_value, valid=True, phase="bo"):
    rsp = bv * bv / fom_value if valid else float("nan")
    ev = Evaluation(bv, rsp, fom_value, valid) if valid else Evaluation.invalid()
    return RunRecord(iteration, phase, (0.5, 0.5), ev, 0.0, None,
                     fom_value if valid else None)


class TestConfigValidation:
    def test_counts(self):
        with pytest.raises(ConfigError, match="n_total"):
            toy_config(n_total=6).validate()
        with pytest.raises(ConfigError, match="n_init"):
            toy_config(n_init=0).validate()

    def test_constrained_needs_target(self):
        with pytest.raises(ConfigError, match="bv_target"):
            toy_config(mode="constrained").validate()

    def test_frontier_needs_ordered_range(self):
        with pytest.raises(ConfigError, match="bv_low"):
            toy_config(mode="frontier", bv_low=50.0, bv_high=30.0).validate()

    def test_unknown_mode(self):
        with pytest.raises(ConfigError, match="mode"):
            toy_config(mode="both").validate()

    def test_resolution_fills_builtin_space(self):
        config = toy_config().resolved()
        assert config.space is not None and config.space.ndim == 2

    def test_subprocess_without_space_rejected(self):
        config = toy_config(evaluator=EvaluatorSpec("subprocess", ("true",)))
        with pytest.raises(ConfigError, match="space"):
            config.resolved()


class TestUnconstrainedRun:
    def test_shape_of_the_campaign(self):
        ds = run(toy_config())
        assert len(ds.records) == 16
        assert ds.n_valid == 16
        assert [r.iteration for r in ds.records] == list(range(1, 17))
        assert all(r.phase == "init" for r in ds.records[:6])
        assert all(r.phase == "bo" for r in ds.records[6:])
        assert all(r.lambda_used == 0.0 for r in ds.records)
        assert all(r.target_used is None for r in ds.records)
        assert all(r.objective_label == r.evaluation.fom for r in ds.records)

    def test_every_stored_point_is_valid_for_the_space(self):
        ds = run(toy_config())
        for r in ds.records:
            assert ds.config.space.validate(np.array(r.x)) == []

    def test_deterministic(self):
        a = run(toy_config(seed=7))
        b = run(toy_config(seed=7))
        assert records_csv(a) == records_csv(b)

    def test_different_seed_differs(self):
        a = run(toy_config(seed=7))
        b = run(toy_config(seed=8))
        assert records_csv(a) != records_csv(b)

    def test_incumbent_is_monotone(self):
        incumbents = []
        run(toy_config(), progress=lambda i, inc, lam: incumbents.append(inc))
        assert all(a <= b for a, b in zip(incumbents, incumbents[1:]))


class TestConstrainedRun:
    def test_warmup_then_hull_multipliers(self):
        ds = run(toy_config(mode="constrained", bv_target=50.0, n_total=14))
        bo = [r for r in ds.records if r.phase == "bo"]
        assert bo[0].lambda_used == 0.0
        assert bo[1].lambda_used == 0.0
        assert any(r.lambda_used != 0.0 for r in bo[2:])
        assert all(r.target_used == 50.0 for r in bo)
        assert_replay_consistent(ds)

    def test_zero_warmup_and_long_warmup(self):
        short = run(toy_config(mode="constrained", bv_target=50.0, warmup_unconstrained=0))
        assert_replay_consistent(short)
        long = run(toy_config(mode="constrained", bv_target=50.0, warmup_unconstrained=100))
        assert all(r.lambda_used == 0.0 for r in long.records)

    def test_relabeling_uses_current_state(self):
        records = [fake_record(1, 45.0, 300.0), fake_record(2, 55.0, 200.0)]
        state = LagrangeState(4.0, 50.0, None, None)
        labels = objective_labels(records, state)
        assert labels[0] == 300.0 + 4.0 * (45.0 - 50.0)
        assert labels[1] == 200.0 + 4.0 * (55.0 - 50.0)
        assert np.array_equal(objective_labels(records, None), [300.0, 200.0])

    def test_mode_equivalence_with_forced_zero_multiplier(self):
        # a constrained run whose warmup spans every BO iteration must retrace
        # the unconstrained trajectory bit for bit
        plain = run(toy_config(seed=5))
        forced = run(toy_config(seed=5, mode="constrained", bv_target=47.0,
                                warmup_unconstrained=10_000))
        assert len(plain.records) == len(forced.records)
        for a, b in zip(plain.records, forced.records):
            assert a.x == b.x
            assert a.evaluation.bv == b.evaluation.bv
            assert a.evaluation.fom == b.evaluation.fom
            assert b.lambda_used == 0.0


class TestFrontierRun:
    def test_targets_drawn_inside_the_range(self):
        ds = run(toy_config(mode="frontier", bv_low=35.0, bv_high=50.0, n_total=14))
        bo = [r for r in ds.records if r.phase == "bo"]
        targets = {r.target_used for r in bo}
        assert all(35.0 <= t <= 50.0 for t in targets)
        assert len(targets) > 1  # redrawn per iteration
        assert_replay_consistent(ds)

    def test_deterministic(self):
        cfg = toy_config(mode="frontier", bv_low=35.0, bv_high=50.0, seed=3)
        assert records_csv(run(cfg)) == records_csv(run(cfg))


class TestInvalidEvaluations:
    def test_flaky_evaluator_completes_with_retries(self, echo_command):
        config = RunConfig(
            evaluator=EvaluatorSpec("subprocess", echo_command("flaky:4")),
            space=ECHO_SPACE,
            mode="constrained",
            bv_target=45.0,
            n_total=12,
            n_init=5,
            seed=1,
        )
        ds = run(config)
        assert ds.n_valid == 12
        invalid = [r for r in ds.records if not r.evaluation.valid]
        assert invalid, "flaky evaluator should have produced failures"
        assert all(r.objective_label is None for r in invalid)
        assert [r.iteration for r in ds.records] == list(range(1, len(ds.records) + 1))
        assert_replay_consistent(ds)

    def test_hopeless_evaluator_aborts_with_partial_dataset(self, echo_command):
        config = RunConfig(
            evaluator=EvaluatorSpec("subprocess", echo_command("error")),
            space=ECHO_SPACE,
            mode="unconstrained",
            n_total=12,
            n_init=5,
            seed=1,
        )
        with pytest.raises(CampaignAborted) as info:
            run(config)
        partial = info.value.dataset
        assert len(partial.records) == 4  # first attempt plus three retries
        assert partial.n_valid == 0

    def test_unspawnable_evaluator_aborts_before_any_record(self):
        config = RunConfig(
            evaluator=EvaluatorSpec("subprocess", ("/no/such/binary",)),
            space=ECHO_SPACE,
            mode="unconstrained",
            n_total=12,
            n_init=5,
        )
        with pytest.raises(CampaignAborted) as info:
            run(config)
        assert info.value.dataset.records == []


class TestBestFeasible:
    def test_prefers_feasible_over_higher_fom(self):
        ds = Dataset(toy_config(), [fake_record(1, 49.0, 250.0), fake_record(2, 51.0, 207.0)])
        best = best_feasible(ds, 50.0)
        assert best.evaluation.fom == 207.0

    def test_empty_dataset(self):
        assert best_feasible(Dataset(toy_config(), []), 50.0) is None

    def test_all_feasible_returns_global_max(self):
        ds = Dataset(toy_config(), [fake_record(1, 52.0, 250.0), fake_record(2, 55.0, 207.0)])
        assert best_feasible(ds, 50.0).evaluation.fom == 250.0

    def test_tolerance_rule(self):
        ds = Dataset(toy_config(), [fake_record(1, 49.0, 250.0), fake_record(2, 56.0, 400.0)])
        best = best_feasible(ds, 50.0, "bv_within_tolerance", tol=1.5)
        assert best.evaluation.fom == 250.0

    def test_ties_break_to_the_earliest(self):
        ds = Dataset(toy_config(), [fake_record(1, 51.0, 207.0), fake_record(2, 52.0, 207.0)])
        assert best_feasible(ds, 50.0).iteration == 1

    def test_invalid_records_never_qualify(self):
        ds = Dataset(toy_config(), [fake_record(1, 60.0, 500.0, valid=False)])
        assert best_feasible(ds, 50.0) is None


class TestFrontierReport:
    def test_single_record(self):
        ds = Dataset(toy_config(), [fake_record(1, 40.0, 250.0)])
        hull = frontier_report(ds)
        assert len(hull.points) == 1
        assert hull.points[0].source_index == 1

    def test_duplicate_bv_collapses(self):
        ds = Dataset(toy_config(), [fake_record(1, 40.0, 250.0), fake_record(2, 40.0, 300.0)])
        hull = frontier_report(ds)
        assert len(hull.points) == 1
        assert hull.points[0].fom == 300.0

    def test_vertices_reference_stored_records(self):
        ds = run(toy_config())
        hull = frontier_report(ds)
        by_iteration = {r.iteration: r for r in ds.records}
        for p in hull.points:
            record = by_iteration[p.source_index]
            assert record.evaluation.bv == p.bv
            assert record.evaluation.fom == p.fom

    def test_no_valid_records_rejected(self):
        ds = Dataset(toy_config(), [fake_record(1, 40.0, 250.0, valid=False)])
        with pytest.raises(ValueError, match="no valid"):
            frontier_report(ds)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        ds = run(toy_config(mode="constrained", bv_target=48.0))
        save_dataset(ds, tmp_path / "run")
        loaded = load_dataset(tmp_path / "run")
        assert records_csv(loaded) == records_csv(ds)
        assert loaded.config == ds.config
        assert [r.objective_label for r in loaded.records] == [
            r.objective_label for r in ds.records
        ]

    def test_save_is_reproducible(self, tmp_path):
        ds = run(toy_config(seed=9))
        save_dataset(ds, tmp_path / "a")
        save_dataset(ds, tmp_path / "b")
        assert (tmp_path / "a" / "records.csv").read_bytes() == (
            tmp_path / "b" / "records.csv"
        ).read_bytes()

    def test_manifest_contents(self, tmp_path):
        import json

        ds = run(toy_config(seed=4))
        save_dataset(ds, tmp_path / "run")
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["seed"] == 4
        assert manifest["records"] == len(ds.records)
        assert manifest["valid_records"] == ds.n_valid

    def test_truncated_row_reports_its_number(self, tmp_path):
        from hullbo.driver import DatasetFormatError

        ds = run(toy_config())
        save_dataset(ds, tmp_path / "run")
        csv_path = tmp_path / "run" / "records.csv"
        lines = csv_path.read_text().splitlines()
        lines[5] = lines[5].rsplit(",", 2)[0]  # chop two fields from row 6 (1-based)
        csv_path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError) as info:
            load_dataset(tmp_path / "run")
        assert info.value.row == 6
        assert "row 6" in str(info.value)

    def test_missing_files_rejected(self, tmp_path):
        from hullbo.driver import DatasetFormatError

        with pytest.raises(DatasetFormatError, match="missing"):
            load_dataset(tmp_path / "nowhere")
