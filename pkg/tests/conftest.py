import numpy as np
import pytest

from windcast.series import write_series
from windcast.synthetic import generate, preset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def windlike():
    series, _ = generate(preset("windlike"))
    return series


@pytest.fixture
def write_csv(tmp_path):
    """Write ``timestamp,wind_speed_mps`` rows and return the path."""

    def _write(rows, name="data.csv", header="timestamp,wind_speed_mps"):
        path = tmp_path / name
        lines = [header] + [f"{t},{v}" for t, v in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


@pytest.fixture
def series_csv(tmp_path):
    def _write(series, name="series.csv"):
        path = tmp_path / name
        write_series(path, series)
        return path

    return _write


ACCEPTANCE = pytest.StashKey[dict]()
N_CRITERIA = 10


@pytest.fixture
def criterion(request):
    """``criterion(n, passed, detail)`` records one acceptance verdict."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, passed, detail):
        results[number] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        passed, detail = results.get(n, (False, "not reached"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
