import itertools
import math

import numpy as np
import pytest

from robustmmv.solver import init_scale, pseudo_residual


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def gaussian_instance(rng, n, p, K, q, snr_db=None):
    """Unit-norm complex Gaussian dictionary and a K-rowsparse CN(0,1) signal."""
    A = crandn(rng, n, p)
    A /= np.linalg.norm(A, axis=0)
    support = np.sort(rng.choice(p, K, replace=False))
    S = np.zeros((p, q), dtype=complex)
    S[support] = crandn(rng, K, q)
    Y = A @ S
    if snr_db is not None:
        noise_var = np.mean(np.abs(Y) ** 2) / 10 ** (snr_db / 10)
        Y = Y + np.sqrt(noise_var) * crandn(rng, n, q)
    return Y, A, S, support


def golden_section(f, lo, hi, tol=1e-11):
    """Plain golden-section minimization of a unimodal scalar function."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def stepsize_problem(rng, loss, n=4, p=6, q=3, K=2, outliers=True):
    """Residual, direction and scale of one robust SNIHT step on random data."""
    A = crandn(rng, n, p)
    Y = crandn(rng, n, q) * 2
    if outliers:
        Y[rng.integers(n), rng.integers(q)] *= 20
    support = np.sort(rng.choice(p, K, replace=False))
    S = np.zeros((p, q), complex)
    S[support] = crandn(rng, K, q) * 0.3
    E = Y - A @ S
    sigma = init_scale(Y)
    G = A.conj().T @ pseudo_residual(E, sigma, loss)
    return E, A, G, support, sigma


def best_support_lstsq(Y, A, K):
    best = (np.inf, None, None)
    for T in itertools.combinations(range(A.shape[1]), K):
        X, *_ = np.linalg.lstsq(A[:, T], Y, rcond=None)
        r = np.linalg.norm(Y - A[:, T] @ X)
        if r < best[0]:
            best = (r, np.array(T), X)
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance report -------------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one verdict line per acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def report(number, ok, detail):
        lines[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
