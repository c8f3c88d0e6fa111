"""Range finders: fixed-rank samplers and rank-adaptive schemes.

All routines return a :class:`RangeBasis` whose ``Q`` has orthonormal columns
approximately spanning the column space of ``A``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .core import EPS, as_matrix, frob, householder_qr, orth, svd_dense
from .errors import NumericalError, ParameterError
from .sketch import gaussian

DEFAULT_P = 10
CERTIFY_ALPHA = 0.1


@dataclass
class RangeBasis:
    Q: np.ndarray
    B: np.ndarray = None
    residual_frob: float = None
    indices: list = None
    failure_probability: float = None
    info: dict = field(default_factory=dict)

    @property
    def rank(self):
        return self.Q.shape[1]


@dataclass
class RangeConfig:
    """Target rank ``k``, over-sampling ``p``, power steps ``q``."""

    k: int
    p: int = DEFAULT_P
    q: int = 0
    reorthonormalize: bool = False
    seed: int = 0

    def validate(self, shape, fixed_rank=True):
        m, n = shape
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.p < 0:
            raise ParameterError(f"p must be >= 0, got {self.p}")
        if self.q < 0:
            raise ParameterError(f"q must be >= 0, got {self.q}")
        if fixed_rank and self.k + self.p > min(m, n):
            raise ParameterError(f"k + p = {self.k + self.p} exceeds min(m, n) = {min(m, n)}")

    @property
    def ell(self):
        return self.k + self.p


def frob_residual(a, B):
    """``||A - Q B||_F`` from ``a = ||A||_F`` and ``B = Q^T A`` (Pythagoras)."""
    b = 0.0 if B is None or np.size(B) == 0 else frob(np.asarray(B))
    if b > a * (1 + 1e-8):
        raise NumericalError(f"||B||_F = {b:.6e} exceeds ||A||_F = {a:.6e}; basis lost orthonormality")
    return math.sqrt(max(0.0, a * a - b * b))


def _finish(A, Q, **kw):
    B = Q.T @ A
    return RangeBasis(Q=Q, B=B, residual_frob=frob_residual(frob(A), B), **kw)


def _sample(A, cfg):
    G = gaussian(cfg.seed, A.shape[1], cfg.ell, tag="range")
    return A @ G


def basic_range(A, cfg):
    """``Q = orth(A G)`` for an ``n x (k + p)`` Gaussian ``G``."""
    A = as_matrix(A)
    cfg.validate(A.shape)
    return _finish(A, orth(_sample(A, cfg)))


def power_range(A, cfg):
    """Range of ``(A A^T)^q A G``.

    With ``cfg.reorthonormalize`` every application of ``A`` or ``A^T`` is
    followed by ``orth``, which keeps directions whose singular values fall
    below ``eps**(1/(2q+1))`` relative to the largest.
    """
    A = as_matrix(A)
    cfg.validate(A.shape)
    Y = _sample(A, cfg)
    if cfg.reorthonormalize:
        Q = orth(Y)
        for _ in range(cfg.q):
            W = orth(A.T @ Q)
            Q = orth(A @ W)
        return _finish(A, Q)
    for _ in range(cfg.q):
        Z = A.T @ Y
        Y = A @ Z
    return _finish(A, orth(Y))


def extended_range(A, cfg):
    """Range of the Krylov-type sample ``[A G, A^2 G, ..., A^q G]`` (square ``A`` only)."""
    A = as_matrix(A)
    m, n = A.shape
    if m != n:
        raise ParameterError("extended_range needs a square matrix (it samples powers of A)")
    cfg.validate(A.shape)
    if cfg.q < 1:
        raise ParameterError("extended_range needs q >= 1")
    if cfg.q * cfg.ell > n:
        raise ParameterError(f"q (k + p) = {cfg.q * cfg.ell} exceeds n = {n}")
    Y = _sample(A, cfg)
    blocks = [Y]
    for _ in range(cfg.q - 1):
        Y = A @ Y
        blocks.append(Y)
    return _finish(A, orth(np.hstack(blocks)))


# ---------------------------------------------------------------------------
# adaptive rank, with updating


class _ResidualNorm:
    """Frobenius norm of the residual, via down-dating.

    Switches to direct evaluation once cancellation in ``a^2 - ||B||^2``
    would cost more than half the available digits.
    """

    def __init__(self, A):
        self.a = frob(A)
        self.b2 = 0.0

    def add(self, rows):
        self.b2 += float(np.sum(np.square(rows)))

    def value(self, R):
        r2 = self.a * self.a - self.b2
        if r2 > 1e-8 * self.a * self.a:
            return math.sqrt(r2)
        return frob(R)


def _spectral_check(R, seed, step):
    from .diagnostics import estimate_spectral_norm
    return estimate_spectral_norm(R, R.shape[1], r=10, alpha=CERTIFY_ALPHA, seed=seed, tag=f"residual/{step}")


def greedy_lowrank(A, eps, strategy="random", seed=0, q=1, norm="fro", oracle=False):
    """Build ``Q``, ``B`` one vector at a time until ``||A - Q B|| <= eps``.

    Parameters
    ----------
    strategy : {"largest", "random", "random_power", "locally_optimal"}
        How the next vector of ``Ran(A_k)`` is picked. ``"largest"`` takes the
        largest remaining column (column pivoted Gram-Schmidt; the pivots end
        up in ``indices``), ``"random"`` a Gaussian combination of the
        columns, ``"random_power"`` the same after ``q`` power steps.
        ``"locally_optimal"`` uses the dominant left singular vector of the
        residual; it is an expensive reference and needs ``oracle=True``.
    norm : {"fro", "spectral"}
        Stopping norm. The spectral mode uses a randomized bound that holds
        with probability ``1 - 10**-10``.
    """
    A = as_matrix(A)
    m, n = A.shape
    if not eps > 0:
        raise ParameterError("eps must be positive")
    if strategy not in ("largest", "random", "random_power", "locally_optimal"):
        raise ParameterError(f"unknown strategy {strategy!r}")
    if strategy == "locally_optimal" and not oracle:
        raise ParameterError("locally_optimal is a dense-SVD reference; pass oracle=True")
    if norm not in ("fro", "spectral"):
        raise ParameterError(f"unknown norm {norm!r}")
    R = np.array(A, order="F", copy=True)
    Q = np.zeros((m, 0))
    B = np.zeros((0, n))
    pivots = []
    tracker = _ResidualNorm(A)
    kmax = min(m, n)

    def done(step):
        if norm == "fro":
            return tracker.value(R) <= eps
        return _spectral_check(R, seed, step) <= eps

    k = 0
    while k < kmax and not done(k):
        if strategy == "largest":
            j = int(np.argmax(np.einsum("ij,ij->j", R, R)))
            y = R[:, j].copy()
            pivots.append(j)
        elif strategy == "locally_optimal":
            y = svd_dense(R).U[:, 0].copy()
        else:
            g = gaussian(seed, n, 1, tag=f"greedy/{k}")[:, 0]
            y = R @ g
            if strategy == "random_power":
                for _ in range(q):
                    y = R @ (R.T @ y)
        # re-projection against Q is redundant in exact arithmetic
        for _ in range(2):
            y -= Q @ (Q.T @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        qv = y / ny
        b = qv @ R
        Q = np.hstack([Q, qv[:, None]])
        B = np.vstack([B, b[None, :]])
        R -= np.outer(qv, b)
        tracker.add(b)
        k += 1
    res = frob_residual(tracker.a, B)
    return RangeBasis(Q=np.asfortranarray(Q), B=B, residual_frob=res,
                      indices=pivots if strategy == "largest" else None)


def blocked_adaptive(A, eps, b=10, q=0, seed=0):
    """Blocked greedy range finder: add ``b`` columns per step until ``||A - Q B||_F <= eps``.

    Each new block is orthonormalized against the accumulated basis through
    a Householder QR of ``[Q, Y]``, so ``Q^T Q = I`` holds to working
    precision and every block contributes exactly ``b`` columns.
    """
    A = as_matrix(A)
    m, n = A.shape
    if b < 1:
        raise ParameterError("block size must be >= 1")
    if not eps > 0:
        raise ParameterError("eps must be positive")
    R = np.array(A, order="F", copy=True)
    Q = np.zeros((m, 0))
    B = np.zeros((0, n))
    tracker = _ResidualNorm(A)
    step = 0
    while Q.shape[1] < min(m, n) and tracker.value(R) > eps:
        bb = min(b, min(m, n) - Q.shape[1])
        G = gaussian(seed, n, bb, tag=f"blocked/{step}")
        Y = R @ G
        for _ in range(q):
            Y = R @ (R.T @ Y)
        k = Q.shape[1]
        Qf, _ = householder_qr(np.hstack([Q, Y]))
        Qn = Qf[:, k:k + bb]
        Bn = Qn.T @ R
        Q = np.hstack([Q, Qn])
        B = np.vstack([B, Bn])
        R -= Qn @ Bn
        tracker.add(Bn)
        step += 1
    return RangeBasis(Q=np.asfortranarray(Q), B=B, residual_frob=frob_residual(tracker.a, B))


# ---------------------------------------------------------------------------
# adaptive rank, without updating


def certified_range(A, eps, r=10, seed=0):
    """Grow ``Q`` one sample at a time until ``r`` consecutive residual samples are small.

    On return ``||A - Q Q^T A|| <= eps`` (spectral norm) with probability at
    least ``1 - min(m, n) * 10**-r``. ``A`` is only touched through
    products ``A g``.
    """
    A = as_matrix(A)
    m, n = A.shape
    if r < 1:
        raise ParameterError("r must be >= 1")
    if not eps > 0:
        raise ParameterError("eps must be positive")
    thresh = eps / (10.0 * math.sqrt(2.0 / math.pi))
    draws = 0

    def sample():
        nonlocal draws
        g = gaussian(seed, n, 1, tag=f"certify/{draws}")[:, 0]
        draws += 1
        return A @ g

    ys = [sample() for _ in range(r)]
    qs = []
    Q = np.zeros((m, 0))
    kmax = min(m, n)
    redraws = 0
    while len(qs) < kmax and max(np.linalg.norm(y) for y in ys[:r]) > thresh:
        y = ys.pop(0)
        y = y - Q @ (Q.T @ y)
        ny = np.linalg.norm(y)
        if ny <= EPS * thresh or ny == 0.0:
            # degenerate draw: replace it with a fresh projected sample
            redraws += 1
            fresh = sample()
            ys.insert(0, fresh - Q @ (Q.T @ fresh))
            if redraws > 10 * r:
                break
            continue
        qv = y / ny
        qs.append(qv)
        Q = np.column_stack(qs)
        fresh = sample()
        fresh = fresh - Q @ (Q.T @ fresh)
        ys = [yi - qv * (qv @ yi) for yi in ys] + [fresh]
    prob = min(1.0, min(m, n) * 10.0 ** (-r))
    return RangeBasis(Q=np.asfortranarray(Q), failure_probability=prob,
                      info={"threshold": thresh, "samples": draws, "r": r})
