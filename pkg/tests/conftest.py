import numpy as np
import pytest

from econsel.dataset import Dataset, standardize


def make_data(n=60, p=3, seed=0, noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = rng.uniform(-1, 1, p)
    y = 2.0 + X @ beta + noise * rng.standard_normal(n)
    return standardize(Dataset(y, X, tuple(f"x{j + 1}" for j in range(p))))


@pytest.fixture
def small_data():
    return make_data()


# one summary line per acceptance criterion, filled in by the report hook below
_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    if rep.skipped:
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
        _criteria[number] = (title, "SKIPPED", reason.removeprefix("Skipped: "))
    elif rep.failed:
        _criteria[number] = (title, "FAIL", detail or str(rep.longrepr).splitlines()[-1])
    elif rep.when == "call":
        _criteria[number] = (title, "PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status, detail = _criteria[number]
        line = f"[{status}] {number}. {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
