import os

import pytest

from mfflow.hierarchy import C_LOOP


@pytest.fixture
def c():
    return C_LOOP


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("MFFLOW_OUT", str(tmp_path))
    return tmp_path


def pytest_report_header(config):
    from mfflow import _config

    return f"mfflow kernels: numba={'on' if _config.USE_NUMBA else 'off'} (MFFLOW_DISABLE_NUMBA={os.getenv('MFFLOW_DISABLE_NUMBA', '')})"


# acceptance criteria results, printed as one line each at the end of the run
CRITERIA = []


@pytest.fixture
def criterion():
    def record(cid, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}"
        CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
