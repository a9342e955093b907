import cmath
import sys

import numpy as np
import pytest


def naive_dft(v):
    """O(n^2) DFT by direct summation, independent of numpy.fft."""
    n = len(v)
    return np.array([sum(v[j] * cmath.exp(-2j * cmath.pi * k * j / n) for j in range(n)) for k in range(n)])


def naive_circular(a, x):
    """y_k = sum_j a_j x_{(k - j) mod n} with a zero-padded to len(x)."""
    n = len(x)
    a = list(a) + [0.0] * (n - len(a))
    return np.array([sum(a[j] * x[(k - j) % n] for j in range(n)) for k in range(n)])


def naive_circular_2d(a, x):
    H, W = x.shape
    out = np.zeros((H, W))
    for p in range(H):
        for q in range(W):
            for i in range(a.shape[0]):
                for j in range(a.shape[1]):
                    out[p, q] += a[i, j] * x[(p - i) % H, (q - j) % W]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
