"""Dense linear algebra kernels.

Everything here works on 2-D float64 numpy arrays stored column-major. Matrix
products go through ``numpy.matmul``; factorizations (Householder QR, column
pivoted QR, Jacobi SVD and eigensolver, Cholesky, triangular solves) are
implemented here so that the randomized algorithms and their test oracles do
not share a LAPACK code path.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, NotPositiveDefiniteError, ParameterError

EPS = np.finfo(np.float64).eps

# tolerances for numerical rank decisions
ORTH_DROP_TOL = 1e-13
PINV_RCOND = 1e-12
CPQR_HALT_TOL = 1e-14

QR_BLOCK = 32
JACOBI_MAX_SWEEPS = 30
JACOBI_NEGLIGIBLE = 1e-150


def as_matrix(A, name="A"):
    """Validate ``A`` and return it as a column-major float64 2-D array."""
    M = np.asarray(A, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise ParameterError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ParameterError(f"{name} contains NaN or Inf entries")
    return np.asfortranarray(M)


def frob(A):
    return float(np.sqrt(np.sum(np.square(A)))) if A.size else 0.0


@dataclass
class PivotedQr:
    """Column pivoted QR, ``A[:, perm] ~= Q @ R``.

    ``R`` has ``stopped_rank`` rows; when the factorization halts early the
    columns past ``stopped_rank`` carry the ``S12`` block and the remainder
    ``S22`` is summarized by ``residual_norm`` (its Frobenius norm).
    """

    Q: np.ndarray
    R: np.ndarray
    perm: np.ndarray
    stopped_rank: int
    residual_norm: float = 0.0


@dataclass
class SvdFactors:
    """Thin SVD ``A ~= U @ diag(D) @ V.T`` with ``D`` sorted non-increasing."""

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def rank(self):
        return len(self.D)

    def reconstruct(self):
        return (self.U * self.D) @ self.V.T

    def truncate(self, k):
        return SvdFactors(self.U[:, :k], self.D[:k], self.V[:, :k], list(self.warnings))


# ---------------------------------------------------------------------------
# Householder reflectors


def house(x):
    """Householder vector for ``x``.

    Returns ``(v, tau, beta)`` with ``v[0] == 1`` and
    ``(I - tau v v^T) x = beta e_1`` where ``beta >= 0``.
    """
    v = np.array(x, dtype=np.float64, copy=True)
    scale = np.max(np.abs(v)) if v.size else 0.0
    if scale == 0.0:
        v[:] = 0.0
        if v.size:
            v[0] = 1.0
        return v, 0.0, 0.0
    xs = v / scale
    alpha = xs[0]
    sigma = float(xs[1:] @ xs[1:])
    v[0] = 1.0
    if sigma == 0.0:
        v[1:] = 0.0
        if alpha >= 0:
            return v, 0.0, alpha * scale
        return v, 2.0, -alpha * scale
    mu = np.sqrt(alpha * alpha + sigma)
    # Parlett's choice keeps beta = +|x| without cancellation
    if alpha <= 0:
        v0 = alpha - mu
    else:
        v0 = -sigma / (alpha + mu)
    tau = 2.0 * v0 * v0 / (sigma + v0 * v0)
    v[1:] = xs[1:] / v0
    return v, tau, mu * scale


def wy_factor(V, taus):
    """Upper triangular ``T`` with ``H_1 ... H_b = I - V T V^T`` (forward compact WY)."""
    b = len(taus)
    T = np.zeros((b, b))
    for i in range(b):
        T[i, i] = taus[i]
        if i:
            T[:i, i] = -taus[i] * (T[:i, :i] @ (V[:, :i].T @ V[:, i]))
    return T


class Reflectors:
    """Blocked product of Householder reflectors ``Q = H_1 H_2 ... H_r``.

    Each block is ``(offset, V, T)`` acting on rows ``offset:`` as
    ``I - V T V^T``.
    """

    def __init__(self, m):
        self.m = m
        self.blocks = []

    def append(self, offset, V, taus):
        self.blocks.append((offset, V, wy_factor(V, taus)))

    def apply_qt(self, C):
        """Overwrite ``C`` (m x *) with ``Q^T C``."""
        for off, V, T in self.blocks:
            C[off:] -= V @ (T.T @ (V.T @ C[off:]))
        return C

    def apply_q(self, C):
        """Overwrite ``C`` (m x *) with ``Q C``."""
        for off, V, T in reversed(self.blocks):
            C[off:] -= V @ (T @ (V.T @ C[off:]))
        return C

    def form(self, ncols=None):
        ncols = self.m if ncols is None else ncols
        E = np.asfortranarray(np.eye(self.m, ncols))
        return self.apply_q(E)


def panel_qr(W, j0, jb, row0=None):
    """Unpivoted Householder factorization of ``W[row0:, j0:j0+jb]`` in place.

    Entries below the diagonal are zeroed; returns ``(V, taus)``.
    """
    row0 = j0 if row0 is None else row0
    m = W.shape[0]
    V = np.zeros((m - row0, jb))
    taus = np.zeros(jb)
    for i in range(jb):
        r, c = row0 + i, j0 + i
        if r >= m:
            break
        v, tau, beta = house(W[r:, c])
        if c + 1 < j0 + jb and tau != 0.0:
            blk = W[r:, c + 1:j0 + jb]
            blk -= tau * np.outer(v, v @ blk)
        W[r, c] = beta
        W[r + 1:, c] = 0.0
        V[i:, i] = v
        taus[i] = tau
    return V, taus


def householder_qr(A, complete=False, block=QR_BLOCK, return_reflectors=False):
    """Blocked Householder QR with nonnegative ``R`` diagonal.

    Returns ``Q`` (m x min(m, n), or m x m when ``complete``) and ``R``
    (min(m, n) x n, or m x n when ``complete``).
    """
    W = np.array(as_matrix(A), order="F", copy=True)
    m, n = W.shape
    r = min(m, n)
    refl = Reflectors(m)
    for j0 in range(0, r, block):
        jb = min(block, r - j0)
        V, taus = panel_qr(W, j0, jb)
        refl.append(j0, V, taus)
        if j0 + jb < n:
            off, Vb, T = refl.blocks[-1]
            C = W[j0:, j0 + jb:]
            C -= Vb @ (T.T @ (Vb.T @ C))
    ncols = m if complete else r
    Q = refl.form(ncols)
    R = np.triu(W[:ncols, :])
    if return_reflectors:
        return Q, R, refl
    return Q, R


def orth(X, tol=ORTH_DROP_TOL):
    """Orthonormal basis for the column space of ``X`` (no pivoting).

    Classical Gram-Schmidt with reorthogonalization. A column whose residual
    falls below ``tol * ||X||_F`` is dropped, so the result may have fewer
    columns than ``X`` (possibly none).
    """
    X = as_matrix(X, "X")
    m, ell = X.shape
    cutoff = tol * frob(X)
    Q = np.zeros((m, ell), order="F")
    r = 0
    for j in range(ell):
        v = X[:, j].copy()
        if r:
            Qr = Q[:, :r]
            for _ in range(3):
                before = np.linalg.norm(v)
                v -= Qr @ (Qr.T @ v)
                if np.linalg.norm(v) > 0.5 * before:
                    break
        nv = np.linalg.norm(v)
        if nv > cutoff and nv > 0:
            Q[:, r] = v / nv
            r += 1
    return np.asfortranarray(Q[:, :r])


def complete_basis(Q, ncols):
    """Extend orthonormal ``Q`` (m x r) to ``ncols`` orthonormal columns."""
    m, r = Q.shape
    if r >= ncols:
        return Q[:, :ncols]
    if r == 0:
        return np.asfortranarray(np.eye(m, ncols))
    Qf, _ = householder_qr(Q, complete=True)
    # Householder Q reproduces Q's columns (R diagonal is +1), so only append
    return np.asfortranarray(np.hstack([Q, Qf[:, r:ncols]]))


# ---------------------------------------------------------------------------
# Column pivoted QR


def cpqr(A, rank=None, tol=None):
    """Column pivoted Householder QR with optional early stop.

    Parameters
    ----------
    A : array (m, n)
    rank : int, optional
        Stop after ``rank`` pivots.
    tol : float, optional
        Stop at the first step where the Frobenius norm of the trailing
        block ``S22`` is at most ``tol``.

    With neither given the factorization runs to ``min(m, n)`` steps. In
    every mode it halts once all remaining column norms fall below
    ``1e-14 * ||A||_F``.
    """
    W = np.array(as_matrix(A), order="F", copy=True)
    m, n = W.shape
    kmax = min(m, n)
    if rank is not None:
        if not 1 <= rank <= kmax:
            raise ParameterError(f"rank must lie in [1, {kmax}], got {rank}")
        kmax = rank
    if tol is not None and tol < 0:
        raise ParameterError("tol must be nonnegative")
    normA = frob(W)
    halt = CPQR_HALT_TOL * normA
    norms = np.sqrt(np.einsum("ij,ij->j", W, W))
    ref_norms = norms.copy()
    perm = np.arange(n)
    refl = Reflectors(m)
    thresh = np.sqrt(EPS)
    j = 0
    while j < kmax:
        rem = norms[j:]
        if rem.size == 0 or rem.max() <= halt or normA == 0.0:
            break
        if tol is not None and np.sqrt(rem @ rem) <= tol:
            break
        piv = j + int(np.argmax(rem))
        if piv != j:
            W[:, [j, piv]] = W[:, [piv, j]]
            perm[[j, piv]] = perm[[piv, j]]
            norms[[j, piv]] = norms[[piv, j]]
            ref_norms[[j, piv]] = ref_norms[[piv, j]]
        v, tau, beta = house(W[j:, j])
        if j + 1 < n and tau != 0.0:
            blk = W[j:, j + 1:]
            blk -= tau * np.outer(v, v @ blk)
        W[j, j] = beta
        W[j + 1:, j] = 0.0
        refl.append(j, v.reshape(-1, 1), [tau])
        # LAPACK-style downdating of the trailing column norms
        if j + 1 < n:
            nz = norms[j + 1:] > 0
            ratio = np.zeros(n - j - 1)
            ratio[nz] = np.abs(W[j, j + 1:][nz]) / norms[j + 1:][nz]
            t = np.maximum(0.0, 1.0 - ratio ** 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                t2 = np.where(ref_norms[j + 1:] > 0,
                              t * (norms[j + 1:] / np.where(ref_norms[j + 1:] > 0, ref_norms[j + 1:], 1.0)) ** 2,
                              0.0)
            redo = nz & (t2 <= thresh)
            upd = norms[j + 1:] * np.sqrt(t)
            if np.any(redo):
                idx = np.nonzero(redo)[0] + j + 1
                fresh = np.sqrt(np.einsum("ij,ij->j", W[j + 1:, idx], W[j + 1:, idx]))
                upd[redo] = fresh
                ref_norms[idx] = fresh
            norms[j + 1:] = upd
        j += 1
    r = j
    Q = refl.form(r) if r else np.zeros((m, 0), order="F")
    R = np.triu(W[:r, :])
    residual = frob(W[r:, r:]) if r < m and r < n else 0.0
    return PivotedQr(Q=Q, R=R, perm=perm, stopped_rank=r, residual_norm=residual)


# ---------------------------------------------------------------------------
# Jacobi SVD and symmetric eigensolver


def _round_robin(n):
    """Pairings of 0..n-1 into disjoint pairs, covering every pair once over n-1 rounds."""
    N = n + (n % 2)
    players = list(range(N))
    rounds = []
    for _ in range(N - 1):
        half = N // 2
        top, bot = players[:half], players[half:][::-1]
        ps, qs = [], []
        for a, b in zip(top, bot):
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(W, V, tol, max_sweeps):
    """One-sided Jacobi: rotate columns of W (and V) until mutually orthogonal."""
    n = W.shape[1]
    if n < 2:
        return
    rounds = _round_robin(n)
    # columns this small carry no information at double precision
    floor = JACOBI_NEGLIGIBLE * frob(W)
    for _ in range(max_sweeps):
        rotated = False
        for ps, qs in rounds:
            if ps.size == 0:
                continue
            Wp, Wq = W[:, ps], W[:, qs]
            alpha = np.einsum("ij,ij->j", Wp, Wp)
            beta = np.einsum("ij,ij->j", Wq, Wq)
            gamma = np.einsum("ij,ij->j", Wp, Wq)
            na, nb = np.sqrt(alpha), np.sqrt(beta)
            act = (np.abs(gamma) > tol * na * nb) & (np.minimum(na, nb) > floor)
            if not np.any(act):
                continue
            g = np.where(act, gamma, 1.0)
            with np.errstate(over="ignore"):
                zeta = (beta - alpha) / (2.0 * g)
                sgn = np.where(zeta >= 0, 1.0, -1.0)
                t = np.where(act, sgn / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0)
            if not np.any(t != 0.0):
                continue
            rotated = True
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            W[:, ps] = c * Wp - s * Wq
            W[:, qs] = s * Wp + c * Wq
            Vp, Vq = V[:, ps], V[:, qs]
            V[:, ps] = c * Vp - s * Vq
            V[:, qs] = s * Vp + c * Vq
        if not rotated:
            return
    raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def svd_dense(A, max_sweeps=JACOBI_MAX_SWEEPS):
    """Thin SVD by one-sided Jacobi after a Householder QR preconditioning step.

    Returns :class:`SvdFactors` with ``r = min(m, n)`` terms, ``D``
    non-increasing, ``U`` and ``V`` with orthonormal columns (columns for zero
    singular values are completed to an orthonormal set).
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        f = svd_dense(A.T, max_sweeps)
        return SvdFactors(f.V, f.D, f.U)
    if n == 0:
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((0, 0)))
    Qa, R = householder_qr(A)
    W = np.array(R, order="F")
    V = np.asfortranarray(np.eye(n))
    tol = np.sqrt(n) * EPS
    _jacobi_columns(W, V, tol, max_sweeps)
    D = np.sqrt(np.einsum("ij,ij->j", W, W))
    order = np.argsort(-D, kind="stable")
    D, W, V = D[order], W[:, order], V[:, order]
    # directions of numerically zero columns are noise; replace them by a completion
    nz = int(np.count_nonzero(D > n * EPS * D[0])) if D[0] > 0 else 0
    Ur = np.zeros((n, n), order="F")
    Ur[:, :nz] = W[:, :nz] / D[:nz]
    if nz < n:
        Ur = complete_basis(Ur[:, :nz], n)
    U = Qa @ Ur
    return SvdFactors(np.asfortranarray(U), D, np.asfortranarray(V))


def singular_values(A):
    return svd_dense(A).D


def eigh_jacobi(S, max_sweeps=50):
    """Eigen-decomposition of a symmetric matrix by two-sided cyclic Jacobi.

    Returns ``(w, E)`` with eigenvalues ``w`` in descending order and
    orthonormal eigenvectors in the columns of ``E``. Used as an independent
    check on :func:`svd_dense` (through the Gram matrix) and for small
    symmetric eigenproblems.
    """
    S = as_matrix(S, "S")
    n = S.shape[0]
    if S.shape[1] != n:
        raise ParameterError("eigh_jacobi needs a square matrix")
    S = 0.5 * (S + S.T)
    E = np.eye(n)
    if n == 1:
        return S.diagonal().copy(), E
    rounds = _round_robin(n)
    tol = n * EPS
    for _ in range(max_sweeps):
        rotated = False
        for ps, qs in rounds:
            if ps.size == 0:
                continue
            spq = S[ps, qs]
            spp, sqq = S[ps, ps], S[qs, qs]
            act = np.abs(spq) > tol * np.sqrt(np.abs(spp * sqq)) + np.finfo(float).tiny
            if not np.any(act):
                continue
            rotated = True
            g = np.where(act, spq, 1.0)
            tau = (sqq - spp) / (2.0 * g)
            sgn = np.where(tau >= 0, 1.0, -1.0)
            t = np.where(act, sgn / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            J = np.eye(n)
            J[ps, ps] = c
            J[qs, qs] = c
            J[ps, qs] = s
            J[qs, ps] = -s
            S = J.T @ S @ J
            S = 0.5 * (S + S.T)
            E = E @ J
        if not rotated:
            w = S.diagonal().copy()
            order = np.argsort(-w, kind="stable")
            return w[order], E[:, order]
    raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


# ---------------------------------------------------------------------------
# Cholesky, triangular solves, least squares


def cholesky(B):
    """Upper triangular ``C`` with ``C^T C = B``.

    Raises :class:`NotPositiveDefiniteError` when a pivot is not safely
    positive (at most ``n * eps * max(diag(B))``).
    """
    B = as_matrix(B, "B")
    n = B.shape[0]
    if B.shape[1] != n:
        raise ParameterError("cholesky needs a square matrix")
    C = np.zeros((n, n), order="F")
    floor = n * EPS * max(float(np.max(np.abs(np.diag(B)))) if n else 0.0, 0.0)
    for j in range(n):
        d = B[j, j] - C[:j, j] @ C[:j, j]
        if not d > floor:
            raise NotPositiveDefiniteError(f"pivot {j} is {d:.3e}; matrix is not positive definite")
        C[j, j] = np.sqrt(d)
        if j + 1 < n:
            C[j, j + 1:] = (B[j, j + 1:] - C[:j, j] @ C[:j, j + 1:]) / C[j, j]
    return C


def solve_triangular(R, B, lower=False, trans=False):
    """Solve ``op(R) X = B`` for triangular ``R`` by substitution.

    ``op(R)`` is ``R^T`` when ``trans`` is set; ``lower`` describes ``R``
    itself.
    """
    R = np.asarray(R, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    vec = B.ndim == 1
    X = np.array(B.reshape(B.shape[0], -1), dtype=np.float64, copy=True)
    n = R.shape[0]
    if R.shape[1] != n or X.shape[0] != n:
        raise ParameterError("solve_triangular: dimension mismatch")
    M = R.T if trans else R
    low = lower != trans
    order = range(n) if low else range(n - 1, -1, -1)
    for i in order:
        if M[i, i] == 0.0:
            raise NotPositiveDefiniteError(f"singular triangular factor at {i}")
        if low:
            s = M[i, :i] @ X[:i]
        else:
            s = M[i, i + 1:] @ X[i + 1:]
        X[i] = (X[i] - s) / M[i, i]
    return X.ravel() if vec else X


def pinv(A, rcond=PINV_RCOND):
    """Moore-Penrose pseudoinverse, truncating singular values below ``rcond * sigma_max``."""
    f = svd_dense(A)
    if f.D.size == 0 or f.D[0] == 0.0:
        return np.zeros(A.shape[::-1])
    keep = f.D > rcond * f.D[0]
    return (f.V[:, keep] / f.D[keep]) @ f.U[:, keep].T


def least_squares(M, RHS, rcond=PINV_RCOND):
    """Minimum-norm minimizer of ``||M X - RHS||_F`` via the truncated SVD of ``M``."""
    M = as_matrix(M, "M")
    vec = np.ndim(RHS) == 1
    RHS = as_matrix(RHS, "RHS")
    if RHS.shape[0] != M.shape[0]:
        raise ParameterError(f"row mismatch: M has {M.shape[0]} rows, RHS has {RHS.shape[0]}")
    f = svd_dense(M)
    if f.D.size == 0 or f.D[0] == 0.0:
        X = np.zeros((M.shape[1], RHS.shape[1]))
    else:
        keep = f.D > rcond * f.D[0]
        X = (f.V[:, keep] / f.D[keep]) @ (f.U[:, keep].T @ RHS)
    return X.ravel() if vec else X
