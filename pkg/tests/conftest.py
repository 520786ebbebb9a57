import pytest

from mtk.units import default_parameter_set

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def pset():
    return default_parameter_set()


@pytest.fixture(scope="session")
def mt(pset):
    return pset.mt


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


class Criterion:
    """Named sub-checks of one acceptance criterion."""

    def __init__(self, label: str, store: dict):
        self.label, self.store = label, store
        self.checks: list[tuple[str, bool, str]] = []
        self.concluded = False

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    def conclude(self):
        self.concluded = True
        self.store[self.label] = self.checks
        failed = [f"{n} ({d})" for n, ok, d in self.checks if not ok]
        assert not failed, "failed checks: " + "; ".join(failed)


@pytest.fixture
def criterion(request):
    label = request.node.get_closest_marker("criterion").args[0]
    c = Criterion(label, request.config.stash[_ACCEPTANCE_KEY])
    yield c
    if not c.concluded:
        c.store[label] = c.checks + [("run", False, "aborted before all checks ran")]


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(results, key=lambda s: int(s.split()[0])):
        checks = results[label]
        status = "PASS" if checks and all(ok for _, ok, _ in checks) else "FAIL"
        terminalreporter.write_line(f"{status}  {label}")
        for name, ok, detail in checks:
            terminalreporter.write_line(f"        {'ok ' if ok else 'BAD'} {name}: {detail}")
