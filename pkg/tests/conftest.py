import time

import pytest

from depthsep.verify import SuiteConfig, SuiteContext

ACCEPTANCE_LINES: list[str] = []


class TimedContext:
    """Default-config suite context plus the wall time of its expensive parts."""

    def __init__(self, cfg):
        self.ctx = SuiteContext(cfg)
        self.seconds = {}

    def timed(self, name):
        t0 = time.perf_counter()
        value = getattr(self.ctx, name)
        self.seconds.setdefault(name, time.perf_counter() - t0)
        return value


@pytest.fixture(scope="session")
def default_ctx():
    return TimedContext(SuiteConfig())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
