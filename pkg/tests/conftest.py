import mpmath
import numpy as np
import pytest
from hypothesis import settings

from ellhyp.numerics import DOUBLE, DOUBLE_DOUBLE, SamplerConfig

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def dd():
    return DOUBLE_DOUBLE


@pytest.fixture
def dbl():
    return DOUBLE


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def cfg():
    return SamplerConfig()


def mpc(x):
    """Exact mpmath image of a tier value."""
    from ellhyp.numerics import to_mp

    return to_mp(x)


def close_mp(x, y, rel):
    x, y = mpc(x), mpc(y)
    return abs(x - y) <= rel * max(abs(x), abs(y), mpmath.mpf("1e-300"))


#: criterion number -> one-line outcome, filled by the acceptance suite
ACCEPTANCE_RESULTS: dict = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title, self.detail = number, title, ""


@pytest.fixture
def criterion(capsys):
    """Context manager recording one acceptance criterion as PASS or FAIL.

    The outcome line is printed immediately (bypassing output capture) and
    repeated in the terminal summary.
    """
    from contextlib import contextmanager

    @contextmanager
    def record(number: int, title: str):
        c = _Criterion(number, title)
        ok = False
        try:
            yield c
            ok = True
        except AssertionError as exc:
            c.detail = c.detail or str(exc).splitlines()[0]
            raise
        finally:
            line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" -- {c.detail}" if c.detail else "")
            ACCEPTANCE_RESULTS[number] = line
            with capsys.disabled():
                print("\n" + line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
