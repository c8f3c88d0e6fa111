"""Full factorizations accelerated by randomization: HQRRP and randUTV."""
from dataclasses import dataclass

import numpy as np

from .core import PivotedQr, Reflectors, as_matrix, complete_basis, cpqr, householder_qr, panel_qr, svd_dense
from .errors import ParameterError
from .sketch import gaussian


@dataclass
class UtvFactors:
    """``A = U T V^T`` with square orthogonal ``U``, ``V`` and triangular ``T``.

    ``T`` is upper triangular for ``m >= n``; for ``m < n`` the factors come
    from ``A^T`` and ``T`` is lower triangular.
    """

    U: np.ndarray
    T: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return self.U @ self.T @ self.V.T

    @property
    def diag(self):
        return np.abs(np.diagonal(self.T)).copy()


def hqrrp(A, b=32, p=10, seed=0, pivot_rule="sketch"):
    """Blocked Householder QR whose pivot blocks come from a random sketch.

    For every block the trailing ``m' x n'`` submatrix is compressed to
    ``Y = G A_22`` with a fresh ``(b + p) x m'`` Gaussian ``G``; column
    pivoted QR of ``Y`` orders the trailing columns. The block is then
    factored without pivoting and the trailing matrix is updated with the
    compact WY form of its reflectors.

    ``pivot_rule="norms"`` replaces the sketch by the largest exact column
    norm (meaningful with ``b = 1``, where it reproduces :func:`cpqr`).
    """
    W = np.array(as_matrix(A), order="F", copy=True)
    m, n = W.shape
    if b < 1:
        raise ParameterError("block size must be >= 1")
    if p < 0:
        raise ParameterError("p must be >= 0")
    if pivot_rule not in ("sketch", "norms"):
        raise ParameterError(f"unknown pivot rule {pivot_rule!r}")
    r = min(m, n)
    perm = np.arange(n)
    refl = Reflectors(m)
    for step, j0 in enumerate(range(0, r, b)):
        jb = min(b, r - j0)
        trail = W[j0:, j0:]
        if pivot_rule == "norms":
            local = np.arange(n - j0)
            for i in range(jb):
                # b = 1 is the intended use; larger b picks the top norms at once
                nrm = np.einsum("ij,ij->j", trail[:, local[i:]], trail[:, local[i:]])
                piv = i + int(np.argmax(nrm))
                local[[i, piv]] = local[[piv, i]]
        else:
            G = gaussian(seed, jb + p, m - j0, tag=f"hqrrp/{step}")
            local = cpqr(G @ trail).perm
        cols = j0 + local
        W[:, j0:] = W[:, cols]
        perm[j0:] = perm[cols]
        V, taus = panel_qr(W, j0, jb)
        refl.append(j0, V, taus)
        if j0 + jb < n:
            _, Vb, T = refl.blocks[-1]
            C = W[j0:, j0 + jb:]
            C -= Vb @ (T.T @ (Vb.T @ C))
    Q = refl.form(r)
    R = np.triu(W[:r, :])
    return PivotedQr(Q=Q, R=np.asfortranarray(R), perm=perm, stopped_rank=r)


def _full_svd(A):
    """``A = U S V^T`` with square ``U`` (m x m), ``S`` (m x n) and ``V`` (n x n); ``m >= n``."""
    m, n = A.shape
    f = svd_dense(A)
    U = complete_basis(f.U, m)
    S = np.zeros((m, n))
    S[np.arange(n), np.arange(n)] = f.D
    return U, S, f.V


def step_utv(A, b, q, seed=0, tag="randutv"):
    """One block step: ``A = U T V^T`` whose leading ``b`` columns of ``T`` are ``[diag(D); 0]``.

    ``V~`` is the complete orthogonal factor of ``Y = (A^T A)^q A^T G``
    (orthonormalized between power steps);
    the SVD of the first ``b`` columns of ``A V~`` supplies ``U`` and
    rotates those columns of ``V~``.
    """
    m, n = A.shape
    G = gaussian(seed, m, b, tag=tag)
    Y = A.T @ G
    for _ in range(q):
        # re-orthonormalize so the sample keeps directions below eps**(1/(2q+1))
        Y, _ = householder_qr(Y)
        Y = A.T @ (A @ Y)
    Vt, _ = householder_qr(Y, complete=True)
    AV = A @ Vt
    U, S, W = _full_svd(AV[:, :b])
    V = Vt.copy()
    V[:, :b] = Vt[:, :b] @ W
    T = np.empty((m, n))
    T[:, :b] = S
    T[:, b:] = U.T @ AV[:, b:]
    return U, T, V


def randutv(A, b=32, q=1, seed=0):
    """Blocked rank-revealing UTV factorization, ``A = U T V^T``.

    ``T`` is upper triangular (for ``m >= n``) with nearly diagonal blocks
    whose diagonal approximates the singular values of ``A``. Over-sampling
    is not used. ``U``, ``V`` are accumulated explicitly.
    """
    A = as_matrix(A)
    m, n = A.shape
    if b < 1:
        raise ParameterError("block size must be >= 1")
    if q < 0:
        raise ParameterError("q must be >= 0")
    if m < n:
        f = randutv(A.T, b, q, seed)
        return UtvFactors(U=f.V, T=np.asfortranarray(f.T.T), V=f.U)
    T = np.array(A, order="F", copy=True)
    U = np.eye(m, order="F")
    V = np.eye(n, order="F")
    nsteps = -(-n // b)
    for i in range(nsteps):
        s = b * i
        if n - s > b:
            Uh, Th, Vh = step_utv(T[s:, s:], b, q, seed, tag=f"randutv/{i}")
        else:
            Uh, Th, Vh = _full_svd(T[s:, s:])
        U[:, s:] = U[:, s:] @ Uh
        V[:, s:] = V[:, s:] @ Vh
        T[s:, s:] = Th
        T[:s, s:] = T[:s, s:] @ Vh
    return UtvFactors(U=U, T=T, V=V)
