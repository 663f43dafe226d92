import numpy as np
import pytest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def direct_dft2(grid):
    """Literal double sum for every (u, v); deliberately shares nothing with the library."""
    grid = np.asarray(grid, dtype=np.complex128)
    m, n = grid.shape
    x = np.arange(m)[:, None]
    y = np.arange(n)[None, :]
    out = np.empty((m, n), dtype=np.complex128)
    for u in range(m):
        for v in range(n):
            phase = -2j * np.pi * (u * x / m + v * y / n)
            out[u, v] = np.sum(grid * np.exp(phase))
    return out


def binomial_downsample_matrix(n):
    """Dense (n/2, n) blur-then-decimate operator built index by index."""
    k = [1, 4, 6, 4, 1]
    mat = np.zeros((n // 2, n))
    for i in range(n // 2):
        for t in range(5):
            mat[i, (2 * i + t - 2) % n] += k[t] / 16.0
    return mat


def binomial_upsample_matrix(n):
    """Dense (2n, n) zero-insert-then-blur operator with gain 2 per axis."""
    k = [1, 4, 6, 4, 1]
    mat = np.zeros((2 * n, n))
    for j in range(2 * n):
        for t in range(5):
            src = (j + t - 2) % (2 * n)
            if src % 2 == 0:
                mat[j, src // 2] += 2 * k[t] / 16.0
    return mat


def central_difference(f, x, h=1e-6):
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        grad[idx] = (f(xp) - f(xm)) / (2 * h)
    return grad


def max_relative_error(got, want):
    """Largest entrywise error scaled by the largest reference magnitude."""
    return float(np.max(np.abs(got - want)) / np.max(np.abs(want)))
