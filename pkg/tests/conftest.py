import os

import numpy as np
import pytest

from mflr.models import cdr_pair, tabulate
from mflr.statistics import exact_moments_exp, exact_stats_exp

ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store a criterion outcome for the summary printed at the end of the run."""
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def exp_stats():
    return exact_stats_exp()


@pytest.fixture(scope="session")
def exp_moments():
    return exact_moments_exp()


@pytest.fixture(scope="session")
def cdr_dataset(tmp_path_factory):
    """Tabulated stand-in CDR dataset (fine and coarse grid on common inputs)."""
    path = os.environ.get("MFLR_TEST_CDR_TABLE")
    if path and os.path.exists(path):
        return path
    path = str(tmp_path_factory.mktemp("cdr") / "cdr1d.csv")
    tabulate(cdr_pair(), 10000, 11, path=path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
