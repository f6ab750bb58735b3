from pathlib import Path

import numpy as np
import pytest

from schottky import fixtures
from schottky.integrals import period_matrix
from schottky.series import holomorphic_basis


@pytest.fixture(scope="session")
def g1():
    return fixtures.genus1()


@pytest.fixture(scope="session")
def g2():
    return fixtures.genus2()


@pytest.fixture(scope="session")
def basis2(g2):
    return holomorphic_basis(g2, fixtures.GENUS2_WORD_LEN)


@pytest.fixture(scope="session")
def pm2(g2, basis2):
    return period_matrix(g2, basis2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def configs_dir():
    return Path(__file__).resolve().parents[1] / "configs"


# -- acceptance summary ---------------------------------------------------------

_verdicts = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")
    config.stash[_verdicts] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark and (report.when == "call" or report.failed):
        n, title = mark.args
        detail = dict(report.user_properties).get("detail", "")
        item.config.stash[_verdicts][n] = (title, "PASS" if report.passed else "FAIL", detail)
    return report


def pytest_terminal_summary(terminalreporter, config):
    verdicts = config.stash[_verdicts]
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        title, status, detail = verdicts[n]
        terminalreporter.write_line(f"{status} criterion {n:2d}: {title}" + (f" [{detail}]" if detail else ""))
