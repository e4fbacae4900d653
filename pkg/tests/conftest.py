import sys
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
PYTHON = sys.executable


@pytest.fixture
def data():
    return DATA


@pytest.fixture
def cli(capsys):
    """Run the command line in-process; returns (exit code, stdout, stderr)."""
    from modalembed.cli import main

    def run(*argv):
        code = main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err

    return run
