import sys

import numpy as np
import pytest

from holoapprox import JetSection


def mountain_delta(x, eps, N):
    return 2.0 * (1.0 - np.cos(2 * np.pi * N * x)) / (eps * np.pi * N)


def mountain_h(x, N):
    return x - np.sin(4 * np.pi * N * x) / (4 * np.pi * N)


def mountain_g(x, eps, N):
    s = np.sin(2 * np.pi * N * x)
    return 4 * eps * (1 - np.cos(4 * np.pi * N * x)) * s / (eps**2 + 16 * s**2)


def mountain_f1(x, y, eps, N):
    return mountain_h(x, N) + (y - mountain_delta(x, eps, N)) * mountain_g(x, eps, N)


@pytest.fixture
def mountain():
    return JetSection.from_strings(["x1"], [["0", "0"]], m=1, k=0, n=1)


from hypothesis import settings  # noqa: E402

import os  # noqa: E402

settings.register_profile("repro", derandomize=True, print_blob=True)
settings.register_profile("stress", max_examples=3000, print_blob=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
