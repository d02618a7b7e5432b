"""Protocol tests against the reference echo evaluator."""

import numpy as np
import pytest

from hullbo.design_space import DesignSpace, Dimension
from hullbo.evaluators import (
    EvaluatorSpec,
    EvaluatorUnavailableError,
    SubprocessEvaluator,
    make_evaluator,
)

SPACE = DesignSpace([Dimension("bv_in", 1.0, 100.0), Dimension("rsp_in", 0.5, 20.0)])


def spawn(echo_command, mode="echo", timeout=10.0):
    return SubprocessEvaluator(echo_command(mode), SPACE, timeout=timeout)


class TestHappyPath:
    def test_echo_round_trip(self, echo_command):
        with spawn(echo_command) as ev:
            result = ev.evaluate([40.0, 4.0])
        assert result.valid
        assert (result.bv, result.rsp_on, result.fom) == (40.0, 4.0, 400.0)
        assert result.wall_time is not None and result.wall_time >= 0.0

    def test_many_requests_one_child(self, echo_command):
        rng = np.random.default_rng(0)
        with spawn(echo_command) as ev:
            for x in SPACE.sample(rng, 10):
                result = ev.evaluate(x)
                assert result.valid
                assert result.bv == x[0] and result.rsp_on == x[1]

    def test_fom_recomputed_not_trusted(self, echo_command):
        with spawn(echo_command) as ev:
            result = ev.evaluate([3.0, 2.0])
        assert result.fom == 4.5


class TestFailurePaths:
    def test_error_response_is_invalid(self, echo_command):
        with spawn(echo_command, "error") as ev:
            result = ev.evaluate([40.0, 4.0])
        assert not result.valid

    def test_garbage_response_is_invalid(self, echo_command):
        with spawn(echo_command, "garbage") as ev:
            result = ev.evaluate([40.0, 4.0])
        assert not result.valid

    def test_nonpositive_bv_is_invalid(self, echo_command):
        with spawn(echo_command, "negative") as ev:
            result = ev.evaluate([40.0, 4.0])
        assert not result.valid

    def test_child_exit_is_invalid_not_crash(self, echo_command):
        with spawn(echo_command, "exit") as ev:
            first = ev.evaluate([40.0, 4.0])
            second = ev.evaluate([41.0, 4.0])
        assert not first.valid
        assert not second.valid

    def test_timeout_never_blocks_past_deadline(self, echo_command):
        with spawn(echo_command, "sleep:5", timeout=0.4) as ev:
            result = ev.evaluate([40.0, 4.0])
        assert not result.valid
        assert result.wall_time < 2.0

    def test_stale_response_ids_are_skipped(self, echo_command):
        with spawn(echo_command, "stale-then-ok") as ev:
            result = ev.evaluate([7.0, 2.0])
        assert result.valid
        assert result.bv == 7.0

    def test_spawn_failure_after_retry_is_fatal(self):
        with pytest.raises(EvaluatorUnavailableError):
            SubprocessEvaluator(["/nonexistent/evaluator-binary"], SPACE)


class TestFactory:
    def test_subprocess_requires_space(self, echo_command):
        spec = EvaluatorSpec("subprocess", echo_command("echo"))
        with pytest.raises(ValueError, match="space"):
            make_evaluator(spec)
        ev = make_evaluator(spec, SPACE)
        try:
            assert ev.evaluate([2.0, 1.0]).valid
        finally:
            ev.close()
