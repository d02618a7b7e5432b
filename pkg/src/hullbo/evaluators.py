"""Black-box device evaluators.

Every evaluator maps a design point to an :class:`Evaluation` carrying the
breakdown voltage BV (V), the specific on-resistance R_sp(on) (mOhm*mm^2) and
the figure of merit FOM = BV^2 / R_sp(on) (kW/mm^2). Two analytic builtins
stand in for an expensive device simulator; arbitrary external simulators are
reached through a line-delimited JSON subprocess protocol.

A failed evaluation (simulator error, malformed response, timeout) is a
normal outcome, reported as ``valid=False`` and never as an exception; only
failure to start the external process at all is fatal.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading
import time
from dataclasses import dataclass

import numpy as np

from .design_space import DesignSpace, ldmos9_space, toy2d_space

BUILTIN_EVALUATORS = ("toy2d", "ldmos9-surrogate")


class EvaluatorUnavailableError(RuntimeError):
    """The external evaluator process could not be started."""


@dataclass(frozen=True)
class Evaluation:
    """One black-box result.

    When ``valid`` is false the numeric fields carry no meaning and must not
    enter any surrogate fit or hull.
    """

    bv: float
    rsp_on: float
    fom: float
    valid: bool
    wall_time: float | None = None

    @staticmethod
    def invalid(wall_time: float | None = None) -> "Evaluation":
        return Evaluation(math.nan, math.nan, math.nan, False, wall_time)


def fom(bv: float, rsp_on: float) -> float:
    """Figure of merit BV^2 / R_sp(on), in kW/mm^2 for V and mOhm*mm^2 inputs."""
    if rsp_on <= 0.0:
        raise ValueError(f"rsp_on must be positive, got {rsp_on}")
    return bv * bv / rsp_on


@dataclass(frozen=True)
class EvaluatorSpec:
    """How to obtain an evaluator: a builtin by name, or an external command."""

    kind: str                       # "toy2d" | "ldmos9-surrogate" | "subprocess"
    command: tuple[str, ...] = ()
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind == "subprocess":
            if not self.command:
                raise ValueError("subprocess evaluator needs a command")
            if self.timeout <= 0.0:
                raise ValueError("subprocess timeout must be positive")
        elif self.kind not in BUILTIN_EVALUATORS:
            raise ValueError(
                f"unknown evaluator kind {self.kind!r}; builtins are {list(BUILTIN_EVALUATORS)}"
            )


def toy2d_values(x1, x2):
    """Vectorized toy response surface on the unit square.

    BV rises linearly with x1 while R_sp(on) grows quadratically, so the
    figure of merit peaks at an interior x1 and decays toward high BV; x2 has
    a BV-dependent sweet spot. Returns ``(bv, rsp_on, fom)`` arrays.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    bv = 30.0 + 25.0 * x1
    rsp = 1.0 + 4.0 * x1 ** 2 + 3.0 * (x2 - 0.3 - 0.4 * x1) ** 2
    return bv, rsp, bv * bv / rsp


def ldmos9_values_normalized(u):
    """Vectorized nine-parameter response surface on unit-cube coordinates.

    An analytic stand-in for the device simulator, tuned so BV lands in the
    tens of volts and FOM in the 10^2..10^3 kW/mm^2 range. ``u`` is ``(n, 9)``
    in the ldmos9 dimension order. Returns ``(bv, rsp_on, fom)`` arrays.
    """
    u = np.asarray(u, dtype=float)
    nd1, ld1, ld2, gp, ljfet, lfox, nsurf, tfox, r = (u[..., k] for k in range(9))
    bv = (25.0 + 20.0 * ld1 + 5.0 * lfox + 6.0 * tfox
          - 12.0 * nd1 - 4.0 * nsurf
          + 3.0 * np.sin(np.pi * r) * (1.0 - nd1) + 2.0 * ld2)
    rsp = (1.5 + 4.0 * ld1 + 1.5 * lfox + 1.0 * ljfet
           + 3.0 * (1.0 - nd1) + 0.8 * (1.0 - nsurf) + 0.5 * tfox
           + 0.3 * (gp - 0.6) ** 2 + 0.5 * ld2)
    return bv, rsp, bv * bv / rsp


class BuiltinEvaluator:
    """Pure, deterministic analytic evaluator with a canonical design space."""

    def __init__(self, name: str):
        if name == "toy2d":
            self.space = toy2d_space()
        elif name == "ldmos9-surrogate":
            self.space = ldmos9_space()
        else:
            raise ValueError(f"unknown builtin evaluator {name!r}")
        self.name = name

    def evaluate(self, x) -> Evaluation:
        x = self.space.check(x)
        if self.name == "toy2d":
            bv, rsp, f = toy2d_values(x[0], x[1])
        else:
            bv, rsp, f = ldmos9_values_normalized(self.space.normalize(x))
        return Evaluation(float(bv), float(rsp), float(f), True)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SubprocessEvaluator:
    """Bridge to an external simulator over its standard streams.

    The child is spawned once and receives one request line per evaluation:

        {"id": <int>, "names": [<dim names>], "x": [<native-unit reals>]}

    and must answer with one line:

        {"id": <same int>, "bv": <real>, "rsp_on": <real>}
        {"id": <same int>, "error": <text>}

    FOM is never transmitted; it is always recomputed here. EOF on the
    child's stdin signals shutdown. A handle serves one campaign at a time.
    """

    def __init__(self, command, space: DesignSpace, timeout: float = 30.0):
        self.space = space
        self.timeout = timeout
        self._command = list(command)
        self._next_id = 0
        self._eof = False
        self._lines: queue.Queue = queue.Queue()
        self._proc = self._spawn()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _spawn(self):
        last_error = None
        for _ in range(2):  # one automatic retry on spawn failure
            try:
                return subprocess.Popen(
                    self._command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                    bufsize=1,
                )
            except OSError as exc:
                last_error = exc
        raise EvaluatorUnavailableError(
            f"could not start evaluator {self._command!r}: {last_error}"
        )

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # child closed its stdout

    def evaluate(self, x) -> Evaluation:
        start = time.perf_counter()
        x = np.asarray(x, dtype=float)
        self._next_id += 1
        request_id = self._next_id

        def done(valid_eval=None):
            elapsed = time.perf_counter() - start
            if valid_eval is None:
                return Evaluation.invalid(wall_time=elapsed)
            bv, rsp = valid_eval
            return Evaluation(bv, rsp, bv * bv / rsp, True, wall_time=elapsed)

        if self._eof:
            return done()
        request = json.dumps({
            "id": request_id,
            "names": list(self.space.names),
            "x": [float(v) for v in x],
        })
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError):
            self._eof = True
            return done()

        deadline = start + self.timeout
        while True:
            remaining = deadline - time.perf_counter()
            if remaining <= 0.0:
                return done()
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                return done()
            if line is None:
                self._eof = True
                return done()
            try:
                message = json.loads(line)
                if message.get("id") != request_id:
                    continue  # stale response from an earlier timed-out request
                if "error" in message:
                    return done()
                bv = float(message["bv"])
                rsp = float(message["rsp_on"])
            except (json.JSONDecodeError, TypeError, KeyError, ValueError):
                return done()
            if not (math.isfinite(bv) and math.isfinite(rsp) and bv > 0.0 and rsp > 0.0):
                return done()
            return done((bv, rsp))

    def close(self):
        if self._proc.stdin is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        self._reader.join(timeout=2.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_evaluator(spec: EvaluatorSpec, space: DesignSpace | None = None):
    """Build an evaluator from its spec.

    Builtins carry their own canonical space; passing a different one is an
    error. Subprocess evaluators need the space to know the dimension names
    they send on the wire.
    """
    if spec.kind in BUILTIN_EVALUATORS:
        ev = BuiltinEvaluator(spec.kind)
        if space is not None and space != ev.space:
            raise ValueError(
                f"builtin evaluator {spec.kind!r} uses its canonical design space; "
                "leave the space unset or pass the matching one"
            )
        return ev
    if space is None:
        raise ValueError("subprocess evaluator needs an explicit design space")
    return SubprocessEvaluator(spec.command, space, timeout=spec.timeout)
