import functools

import pytest

from latent_fpr.model import StudyDesign, preset_rate_vectors
from latent_fpr.simulator import run_study

ACCEPTANCE_SEED = 2019
ACCEPTANCE_N = 1000


@functools.lru_cache(maxsize=None)
def preset_run(name, seed=ACCEPTANCE_SEED, n=ACCEPTANCE_N):
    """Simulation summaries are shared between test modules; each preset runs once."""
    return run_study(seed, StudyDesign(), preset_rate_vectors(name), n, keep_per_iteration=True)


@pytest.fixture(scope="session")
def runs():
    return preset_run


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on its own."""

    def record(number, text, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number:>2}: {text}" + (f" ({detail})" if detail else ""))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
