import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pcasvm import _accel, _pure  # noqa: E402

BACKENDS = ["python"] + (["cython"] if _accel._core is not None else [])

_criteria = {}


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    if request.param == "python":
        monkeypatch.setattr(_accel, "_core", None)
        monkeypatch.setattr(_accel, "jacobi_eigh", _pure.jacobi_eigh)
    return request.param

@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))

def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    number, title = props["criterion"]
    entry = _criteria.setdefault(number, {"title": title, "failed": False, "skipped": False, "ran": False})
    if report.failed:
        entry["failed"] = True
    elif report.skipped and report.when in ("setup", "call"):
        entry["skipped"] = True
    elif report.when == "call" and report.passed:
        entry["ran"] = True

def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        if entry["failed"]:
            status = "FAIL"
        elif entry["ran"]:
            status = "PASS"
        else:
            status = "SKIP"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {entry['title']}")


@pytest.fixture(scope="session")
def planted():
    from pcasvm.synthetic import planted_signal_panel

    return planted_signal_panel(seed=0)


@pytest.fixture(scope="session")
def planted_report(planted):
    from pcasvm.backtest import run_backtest
    from pcasvm.config import config_from_dict

    return run_backtest(config_from_dict(planted.config), planted.panel)
