import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from plate_discipline import synth

DATA = Path(__file__).parent / "data"


@pytest.fixture
def sample_csv():
    return DATA / "statcast_sample.csv"


@pytest.fixture
def sample_manifest():
    return json.loads((DATA / "statcast_sample_manifest.json").read_text())


@pytest.fixture(scope="session")
def small_synth():
    """20k training / 2k query synthetic balls, fixed seed."""
    return synth.generate(11, n_train=20_000, n_query=2_000)


def write_statcast(df: pd.DataFrame, path: Path) -> Path:
    df.to_csv(path, index=False)
    return path


@pytest.fixture
def statcast_1000(tmp_path):
    rng = np.random.default_rng(2024)
    return write_statcast(synth.statcast_frame(rng, 1000), tmp_path / "statcast_1000.csv")


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance check and assert it."""

    def check(criterion: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    def skip(criterion: str, reason: str):
        _ACCEPTANCE.append(f"SKIP  criterion {criterion}: {reason}")
        pytest.skip(reason)

    check.skip = skip
    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
