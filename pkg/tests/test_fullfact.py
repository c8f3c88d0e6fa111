import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randfact.core import cpqr, frob
from randfact.diagnostics import test_matrix as make_matrix
from randfact.errors import ParameterError
from randfact.fullfact import hqrrp, randutv

from conftest import gauss, planted


def orth_err(Q):
    return np.abs(Q.T @ Q - np.eye(Q.shape[1])).max()


def utv_ok(A, f):
    m, n = A.shape
    assert orth_err(f.U) < 1e-11 and orth_err(f.V) < 1e-11
    lower = np.tril(f.T, -1) if m >= n else np.triu(f.T, 1)
    assert np.abs(lower).max(initial=0.0) <= 1e-11 * frob(A)
    assert frob(A - f.reconstruct()) <= 1e-10 * frob(A)
    assert frob(f.T) == pytest.approx(frob(A), rel=1e-10)


# --- hqrrp

def test_hqrrp_identity():
    f = hqrrp(np.eye(6), b=2, p=2)
    assert np.allclose(np.abs(f.R), np.eye(6))
    assert sorted(f.perm.tolist()) == list(range(6))


def test_hqrrp_exact_200x150():
    A = gauss(1, 200, 150)
    f = hqrrp(A, b=32, p=10, seed=3)
    assert frob(A[:, f.perm] - f.Q @ f.R) < 1e-11 * frob(A)
    assert orth_err(f.Q) < 1e-11
    assert np.allclose(f.R, np.triu(f.R))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 25), st.integers(1, 25), st.integers(1, 8), st.integers(0, 4), st.integers(0, 10**6))
def test_hqrrp_always_valid(m, n, b, p, seed):
    A = gauss(seed, m, n)
    f = hqrrp(A, b=b, p=p, seed=seed)
    assert sorted(f.perm.tolist()) == list(range(n))
    assert frob(A[:, f.perm] - f.Q @ f.R) <= 1e-11 * frob(A)
    assert orth_err(f.Q) < 1e-11


@pytest.mark.parametrize("seed", range(5))
def test_hqrrp_norm_rule_is_cpqr(seed):
    A = gauss(seed, 30, 20)
    assert np.array_equal(hqrrp(A, b=1, pivot_rule="norms").perm, cpqr(A).perm)


def test_hqrrp_rank_revealing():
    n = 80
    A = make_matrix("fast_decay", 100, n, seed=0, beta=0.8)
    s = 0.8 ** np.arange(n)
    grid = np.arange(1, 40, 4)
    ok = 0
    for seed in range(100):
        d = np.abs(np.diagonal(hqrrp(A, b=8, p=5, seed=seed).R))
        ok += np.all(d[grid] <= 10 * s[grid])
    assert ok >= 95


def test_hqrrp_rejects():
    with pytest.raises(ParameterError):
        hqrrp(np.eye(3), b=0)
    with pytest.raises(ParameterError):
        hqrrp(np.eye(3), pivot_rule="volume")


# --- randutv

def test_randutv_validity_120x90():
    A = gauss(2, 120, 90)
    utv_ok(A, randutv(A, b=16, q=1, seed=1))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 6), st.integers(0, 2), st.integers(0, 10**6))
def test_randutv_always_valid(m, n, b, q, seed):
    A = gauss(seed, m, n)
    utv_ok(A, randutv(A, b=b, q=q, seed=seed))


def test_randutv_wide_matrix():
    A = gauss(3, 40, 70)
    f = randutv(A, b=8, q=1)
    assert f.U.shape == (40, 40) and f.V.shape == (70, 70)
    utv_ok(A, f)


def test_randutv_diagonal_single_block():
    sigma = np.array([5.0, 4.0, 3.0, 2.0, 1.0])
    f = randutv(np.diag(sigma), b=8)
    assert np.allclose(f.diag, sigma, atol=1e-10)
    assert np.abs(f.T - np.diag(np.diagonal(f.T))).max() <= 1e-10


def test_randutv_diagonal_separated_blocks():
    sigma = np.r_[np.array([4.0, 3.0, 2.0]), 1e-3 * np.array([4.0, 3.0, 2.0]), 1e-6 * np.array([4.0, 3.0])]
    f = randutv(np.diag(sigma), b=3, q=2, seed=4)
    assert np.allclose(f.diag, sigma, rtol=1e-6, atol=1e-10)
    assert np.abs(f.T - np.diag(np.diagonal(f.T))).max() <= 1e-8


def test_randutv_within_block_monotone():
    A = make_matrix("fast_decay", 100, 100, seed=0, beta=0.8)
    d = randutv(A, b=10, q=2).diag
    for j in range(0, 100, 10):
        assert np.all(np.diff(d[j:j + 10]) <= 1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_randutv_first_step_residual(seed):
    b = 10
    A = make_matrix("fast_decay", 100, 100, seed=seed, beta=0.8)
    s = 0.8 ** np.arange(100)
    f = randutv(A, b=b, q=2, seed=seed)
    # the first step leaves A_22 = T[b:, b:] up to the later orthogonal steps
    assert np.linalg.norm(f.T[b:, b:], 2) <= 2 * s[b]
    assert np.allclose(f.diag[:5], s[:5], rtol=1e-3)


def test_randutv_rejects():
    with pytest.raises(ParameterError):
        randutv(np.eye(3), b=0)
    with pytest.raises(ParameterError):
        randutv(np.eye(3), q=-1)
