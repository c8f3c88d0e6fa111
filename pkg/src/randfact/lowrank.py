"""Low-rank factorizations assembled from a range finder and a small dense step.

RSVD, single-pass EVD and SVD over a :class:`MatrixStream`, Nystrom EVD,
interpolative decompositions (deterministic, randomized, SRFT-based) and CUR.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .core import (SvdFactors, as_matrix, cholesky, cpqr, eigh_jacobi, frob, least_squares,
                   orth, singular_values, solve_triangular, svd_dense)
from .errors import NotPositiveDefiniteError, ParameterError, SinglePassViolation
from .rangefinder import RangeConfig, power_range
from .sketch import gaussian, srft_sample

SOLVE_WARN_COND = 1e12
CUR_WARN_COND = 1e8
NYSTROM_SHIFT = 1e-12


@dataclass
class LowRankEvd:
    """``A ~= U diag(lam) U^T``."""

    U: np.ndarray
    lam: np.ndarray
    warnings: list = field(default_factory=list)

    def reconstruct(self):
        return (self.U * self.lam) @ self.U.T


@dataclass
class IdFactors:
    """Interpolative decomposition.

    ``side == "col"``: ``A ~= A[:, Js] @ Z`` with ``Z[:, Js] = I``.
    ``side == "row"``: ``A ~= X @ A[Is, :]`` with ``X[Is, :] = I``.
    ``side == "double"``: ``A ~= X @ A[Is][:, Js] @ Z``.
    ``residual`` is the Frobenius norm of the neglected CPQR block.
    """

    side: str
    Js: np.ndarray = None
    Is: np.ndarray = None
    Z: np.ndarray = None
    X: np.ndarray = None
    residual: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def rank(self):
        return len(self.Js if self.Js is not None else self.Is)

    def reconstruct(self, A):
        A = np.asarray(A)
        if self.side == "col":
            return A[:, self.Js] @ self.Z
        if self.side == "row":
            return self.X @ A[self.Is, :]
        return self.X @ A[np.ix_(self.Is, self.Js)] @ self.Z


@dataclass
class CurFactors:
    """``A ~= A[:, Js] @ U @ A[Is, :]``."""

    Js: np.ndarray
    Is: np.ndarray
    U: np.ndarray
    cond_C: float = None
    cond_R: float = None
    warnings: list = field(default_factory=list)

    def C(self, A):
        return np.asarray(A)[:, self.Js]

    def R(self, A):
        return np.asarray(A)[self.Is, :]

    def reconstruct(self, A):
        return self.C(A) @ self.U @ self.R(A)


class MatrixStream:
    """One-shot iterator over column blocks ``(j0, A[:, j0:j1])``.

    Iterating a second time raises :class:`SinglePassViolation`.
    ``access_count`` counts started traversals and ``entries_read`` the
    number of matrix entries handed out.
    """

    def __init__(self, A, block=32):
        self._A = as_matrix(A)
        if block < 1:
            raise ParameterError("block must be >= 1")
        self.block = block
        self.access_count = 0
        self.entries_read = 0

    @property
    def shape(self):
        return self._A.shape

    def __iter__(self):
        if self.access_count:
            raise SinglePassViolation("matrix stream already consumed; single-pass methods may read it only once")
        self.access_count += 1
        return self._blocks()

    def _blocks(self):
        m, n = self._A.shape
        for j0 in range(0, n, self.block):
            blk = self._A[:, j0:j0 + self.block].copy()
            self.entries_read += blk.size
            yield j0, blk

    @property
    def passes(self):
        """Completed full passes (an entry-count view of ``access_count``)."""
        m, n = self._A.shape
        return self.entries_read / (m * n) if m * n else float(self.access_count)


def _check_kp(k, p, limit):
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if p < 0:
        raise ParameterError(f"p must be >= 0, got {p}")
    if k + p > limit:
        raise ParameterError(f"k + p = {k + p} exceeds {limit}")


def _cond(M):
    s = singular_values(M)
    if s.size == 0:
        return 1.0
    return math.inf if s[-1] == 0.0 else float(s[0] / s[-1])


# ---------------------------------------------------------------------------
# RSVD


def rsvd(A, k, p=10, q=0, seed=0, reorthonormalize=False, truncate=True):
    """Randomized SVD: range finder, then the SVD of ``B = Q^T A``.

    Without truncation all ``rank(Q)`` terms are kept and
    ``||A - U D V^T|| = ||A - Q Q^T A||`` exactly.
    """
    A = as_matrix(A)
    cfg = RangeConfig(k=k, p=p, q=q, reorthonormalize=reorthonormalize, seed=seed)
    basis = power_range(A, cfg)
    if basis.rank == 0:
        m, n = A.shape
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))
    f = svd_dense(basis.B)
    out = SvdFactors(np.asfortranarray(basis.Q @ f.U), f.D, f.V)
    return out.truncate(k) if truncate else out


# ---------------------------------------------------------------------------
# single pass


def _dominant_left(Y, k):
    return svd_dense(Y).U[:, :k]


def single_pass_evd(stream, k, p=None, seed=0, width="k"):
    """EVD of a symmetric matrix read once, block by block.

    ``Y = A G`` is accumulated during the pass. ``Q`` holds the ``k``
    dominant left singular vectors of ``Y`` (``width="k"``) or an
    orthonormal basis of all of ``Y`` (``width="ell"``). The core ``C``
    solves ``C (Q^T G) = Q^T Y`` in least squares and is then symmetrized.
    ``p`` defaults to ``k``.
    """
    m, n = stream.shape
    if m != n:
        raise ParameterError("single_pass_evd needs a square matrix")
    p = k if p is None else p
    _check_kp(k, p, n)
    if width not in ("k", "ell"):
        raise ParameterError("width must be 'k' or 'ell'")
    ell = k + p
    G = gaussian(seed, n, ell, tag="range")
    Y = np.zeros((n, ell), order="F")
    for j0, blk in stream:
        Y += blk @ G[j0:j0 + blk.shape[1]]
    Q = _dominant_left(Y, k) if width == "k" else orth(Y)
    QG, QY = Q.T @ G, Q.T @ Y
    warnings = []
    c = _cond(QG)
    if c > SOLVE_WARN_COND:
        warnings.append(f"Q^T G is ill-conditioned (cond = {c:.3e})")
    C = least_squares(QG.T, QY.T).T
    C = 0.5 * (C + C.T)
    w, E = eigh_jacobi(C)
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    w, E = w[order], E[:, order]
    desc = np.argsort(-w, kind="stable")
    return LowRankEvd(U=np.asfortranarray(Q @ E[:, desc]), lam=w[desc], warnings=warnings)


def solve_two_sided(P, E1, M, E2):
    """Least-squares ``C`` for the pair ``P C = E1`` and ``C M = E2`` jointly.

    The normal equations ``P^T P C + C M M^T = P^T E1 + E2 M^T`` are
    diagonalized by the eigenvectors of ``P^T P`` and ``M M^T``, which is the
    same as solving the stacked Kronecker system, without forming it.
    """
    l1, W1 = eigh_jacobi(P.T @ P)
    l2, W2 = eigh_jacobi(M @ M.T)
    l1, l2 = np.maximum(l1, 0.0), np.maximum(l2, 0.0)
    rhs = W1.T @ (P.T @ E1 + E2 @ M.T) @ W2
    den = l1[:, None] + l2[None, :]
    cut = 1e-24 * den.max() if den.size else 0.0
    Ct = np.where(den > cut, rhs / np.where(den > cut, den, 1.0), 0.0)
    return W1 @ Ct @ W2.T


def solve_two_sided_stacked(P, E1, M, E2):
    """Reference solver: vectorize ``C`` and solve the tall stacked system directly."""
    k1, k2 = P.shape[1], M.shape[0]
    K1 = np.kron(np.eye(k2), P)
    K2 = np.kron(M.T, np.eye(k1))
    rhs = np.concatenate([E1.ravel(order="F"), E2.ravel(order="F")])
    c = least_squares(np.vstack([K1, K2]), rhs)
    return c.reshape((k1, k2), order="F")


def single_pass_svd(stream, k, p=None, seed=0, solver="sylvester"):
    """SVD of a general matrix read once.

    Both ``Y_c = A G_c`` and ``Y_r = A^T G_r`` are formed from the same
    pass over column blocks. ``Q_c``, ``Q_r`` are the ``k`` dominant left
    singular vectors of each, and the core ``C`` is the joint least-squares
    solution of ``(G_r^T Q_c) C = Y_r^T Q_r`` and ``C (Q_r^T G_c) = Q_c^T Y_c``.
    """
    m, n = stream.shape
    p = k if p is None else p
    _check_kp(k, p, min(m, n))
    if solver not in ("sylvester", "stacked"):
        raise ParameterError("solver must be 'sylvester' or 'stacked'")
    ell = k + p
    Gc = gaussian(seed, n, ell, tag="range")
    Gr = gaussian(seed, m, ell, tag="range/rows")
    Yc = np.zeros((m, ell), order="F")
    Yr = np.zeros((n, ell), order="F")
    for j0, blk in stream:
        j1 = j0 + blk.shape[1]
        Yc += blk @ Gc[j0:j1]
        Yr[j0:j1] = blk.T @ Gr
    Qc, Qr = _dominant_left(Yc, k), _dominant_left(Yr, k)
    P, E1 = Gr.T @ Qc, Yr.T @ Qr
    M, E2 = Qr.T @ Gc, Qc.T @ Yc
    warnings = []
    for name, X in (("G_r^T Q_c", P), ("Q_r^T G_c", M)):
        c = _cond(X)
        if c > SOLVE_WARN_COND:
            warnings.append(f"{name} is ill-conditioned (cond = {c:.3e})")
    C = (solve_two_sided if solver == "sylvester" else solve_two_sided_stacked)(P, E1, M, E2)
    f = svd_dense(C)
    return SvdFactors(np.asfortranarray(Qc @ f.U), f.D, np.asfortranarray(Qr @ f.V), warnings)


# ---------------------------------------------------------------------------
# Nystrom


def nystrom_evd(A, k, p=10, seed=0, truncate=True):
    """Nystrom EVD of a positive semi-definite matrix.

    ``B1 = A Q``, ``B2 = Q^T B1 = C^T C``, ``F = B1 C^{-1}`` and
    ``A ~= U Sigma^2 U^T`` from the SVD of ``F``. If ``B2`` is numerically
    singular the Cholesky step is retried once with ``B2 + nu I``,
    ``nu = 1e-12 trace(A)``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ParameterError("nystrom_evd needs a square matrix")
    asym = frob(A - A.T)
    if asym > 1e-10 * max(frob(A), 1e-300):
        raise ParameterError(f"matrix is not symmetric (||A - A^T||_F = {asym:.3e})")
    A = 0.5 * (A + A.T)
    _check_kp(k, p, n)
    Q = orth(A @ gaussian(seed, n, k + p, tag="range"))
    warnings = []
    if Q.shape[1] == 0:
        return LowRankEvd(np.zeros((n, 0)), np.zeros(0))
    B1 = A @ Q
    B2 = Q.T @ B1
    B2 = 0.5 * (B2 + B2.T)
    try:
        C = cholesky(B2)
    except NotPositiveDefiniteError:
        nu = NYSTROM_SHIFT * float(np.trace(A))
        warnings.append(f"Cholesky of Q^T A Q failed; retried with shift {nu:.3e}")
        try:
            C = cholesky(B2 + nu * np.eye(B2.shape[0]))
        except NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(f"matrix is not positive semi-definite: {exc}") from exc
    F = solve_triangular(C, B1.T, trans=True).T
    f = svd_dense(F)
    out = LowRankEvd(U=f.U, lam=f.D ** 2, warnings=warnings)
    if truncate:
        out = LowRankEvd(out.U[:, :k], out.lam[:k], warnings)
    return out


# ---------------------------------------------------------------------------
# interpolative decompositions


def id_col(A, k):
    """Column ID ``A ~= A[:, Js] Z`` from a partial CPQR, ``Z[:, perm] = [I, S11^{-1} S12]``."""
    A = as_matrix(A)
    m, n = A.shape
    if not 1 <= k <= min(m, n):
        raise ParameterError(f"k must lie in [1, {min(m, n)}], got {k}")
    f = cpqr(A, rank=k)
    r = f.stopped_rank
    warnings = []
    if r < k:
        warnings.append(f"numerical rank {r} is below k = {k}; ID truncated to rank {r}")
    S11, S12 = f.R[:r, :r], f.R[:r, r:]
    T = solve_triangular(S11, S12) if r else np.zeros((0, n))
    Z = np.zeros((r, n))
    Z[:, f.perm[:r]] = np.eye(r)
    Z[:, f.perm[r:]] = T
    return IdFactors(side="col", Js=f.perm[:r].copy(), Z=np.asfortranarray(Z),
                     residual=f.residual_norm, warnings=warnings)


def id_row(A, k):
    """Row ID ``A ~= X A[Is, :]``: the column ID of ``A^T``."""
    c = id_col(as_matrix(A).T, k)
    return IdFactors(side="row", Is=c.Js, X=np.asfortranarray(c.Z.T), residual=c.residual, warnings=c.warnings)


def id_double(A, k):
    """Two-sided ID ``A ~= X A[Is, Js] Z``: column ID, then row ID of the chosen columns."""
    A = as_matrix(A)
    c = id_col(A, k)
    r = id_row(A[:, c.Js], len(c.Js))
    return IdFactors(side="double", Js=c.Js, Is=r.Is, Z=c.Z, X=r.X,
                     residual=c.residual, warnings=c.warnings + r.warnings)


def id_deterministic(A, k, side="col"):
    fn = {"col": id_col, "row": id_row, "double": id_double}.get(side)
    if fn is None:
        raise ParameterError(f"side must be 'col', 'row' or 'double', got {side!r}")
    return fn(A, k)


def randomized_id(A, k, p=10, q=0, seed=0):
    """Row ID of ``A`` from the row ID of the sample ``Y = (A A^T)^q A G``."""
    A = as_matrix(A)
    m, n = A.shape
    _check_kp(k, p, min(m, n))
    Y = A @ gaussian(seed, n, k + p, tag="range")
    for _ in range(q):
        Y = A @ (A.T @ Y)
    return id_row(Y, k)


def fast_randomized_id(A, k, p=None, seed=0):
    """Row ID from an SRFT sample of width ``k + p`` (``p`` defaults to ``k``).

    The complex sample is split into real and imaginary parts, giving
    ``2 (k + p)`` real columns spanning the same space.
    """
    A = as_matrix(A)
    m, n = A.shape
    p = k if p is None else p
    _check_kp(k, p, n)
    if k > m:
        raise ParameterError(f"k = {k} exceeds m = {m}")
    return id_row(srft_sample(A, k + p, seed), k)


def randomized_cur(A, k, p=10, q=0, seed=0):
    """CUR from a two-sided ID of a row-space sample.

    ``Y = G A (A^T A)^q``, column ID of ``Y`` gives ``Js`` and ``Z``, a row
    ID of ``A[:, Js]`` gives ``Is``, and ``U`` solves ``U A[Is, :] = Z`` in
    least squares. Condition numbers of ``C`` and ``R`` are attached, with a
    warning when ``cond(R)`` exceeds 1e8.
    """
    A = as_matrix(A)
    m, n = A.shape
    _check_kp(k, p, min(m, n))
    Y = gaussian(seed, k + p, m, tag="range/cur") @ A
    for _ in range(q):
        Y = (Y @ A.T) @ A
    c = id_col(Y, k)
    r = id_row(A[:, c.Js], len(c.Js))
    R = A[r.Is, :]
    U = least_squares(R.T, c.Z.T).T
    cond_C, cond_R = _cond(A[:, c.Js]), _cond(R)
    warnings = c.warnings + r.warnings
    if cond_R > CUR_WARN_COND:
        warnings.append(f"R = A[Is, :] is ill-conditioned (cond = {cond_R:.3e}); CUR may be inaccurate")
    return CurFactors(Js=c.Js, Is=r.Is, U=np.asfortranarray(U), cond_C=cond_C, cond_R=cond_R, warnings=warnings)
