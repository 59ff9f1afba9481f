import pytest

from svmf import toy_catalog

_RESULTS = {}
_NOTES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion reported in the summary")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    label = marker.args[0]
    ok = call.excinfo is None
    _RESULTS[label] = _RESULTS.get(label, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS, key=lambda s: int(s.split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if _RESULTS[label] else 'FAIL'}  {label}")
        for note in _NOTES.get(label, []):
            terminalreporter.write_line(f"        {note}")


@pytest.fixture
def note(request):
    """Attach a line of measured output to the test's acceptance label."""
    label = request.node.get_closest_marker("acceptance").args[0]
    return lambda text: _NOTES.setdefault(label, []).append(text)


@pytest.fixture
def toy3():
    """ids 0, 1, 2 with kinds FG, FG, CB."""
    return toy_catalog("FFC")


@pytest.fixture
def toy12():
    """n = 12; classes 9-11 are carbon backbones."""
    return toy_catalog("FFFFFFFFFCCC")
