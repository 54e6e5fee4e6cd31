import numpy as np
import pytest

from gigmix.data import build_histogram
from gigmix.documents import DEMO_SPEC, model_from_dict
from gigmix.sampling import sample_mixture

VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[VERDICTS] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])


@pytest.fixture
def verdict(request, capsys):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, failures, elapsed=None, limit=None):
        failures = list(failures)
        if limit is not None and elapsed > limit:
            failures.append(f"runtime {elapsed:.1f} s exceeds {limit} s")
        status = "PASS" if not failures else "FAIL"
        timing = f" [{elapsed:.1f} s]" if elapsed is not None else ""
        line = f"criterion {number:2d} {status}: {title}{timing}"
        if failures:
            line += " -- " + "; ".join(failures[:3])
        request.config.stash[VERDICTS].append((number, line))
        with capsys.disabled():
            print(f"\n{line}")
        assert not failures, line

    return record


@pytest.fixture(scope="session")
def demo_model():
    return model_from_dict(DEMO_SPEC)


@pytest.fixture(scope="session")
def demo_draws(demo_model):
    values, labels = sample_mixture(demo_model, 50000, 42)
    return values, labels


@pytest.fixture(scope="session")
def exp_hist():
    """Histogram of 5000 Exp(rate 2) draws, 30 bins."""
    rng = np.random.default_rng(11)
    return build_histogram(rng.exponential(0.5, 5000), bins=30)
