import numpy as np
import pytest

from randfact.sketch import gaussian


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def gauss(seed, m, n):
    """Test-local Gaussian matrix, independent of the library's sketch tags."""
    return np.random.default_rng(seed).standard_normal((m, n))


def planted(m, n, sigma, seed=0):
    """``U diag(sigma) V^T`` with numpy-generated orthonormal factors (independent of the library)."""
    rng = np.random.default_rng(seed + 1000)
    r = len(sigma)
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    V, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return (U * sigma) @ V.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
