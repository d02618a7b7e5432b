import sys
from pathlib import Path

import pytest

ECHO_SCRIPT = Path(__file__).parent / "echo_evaluator.py"


@pytest.fixture
def echo_command():
    """Argv prefix for the reference external evaluator."""

    def command(mode: str = "echo") -> tuple[str, ...]:
        return (sys.executable, str(ECHO_SCRIPT), mode)

    return command
