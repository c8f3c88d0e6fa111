"""Seeded random test matrices: Gaussian sketches and the SRFT.

Random stream
-------------
Every draw comes from numpy's Philox-4x64 counter-based generator. The key
for a draw is derived from ``SeedSequence([seed, crc32(tag)])``, where
``tag`` names the operation (``"range"``, ``"haar/U"``, ``"hqrrp/3"``, ...),
so different operations consuming the same user seed get independent
substreams. Standard normals are produced by the Box-Muller transform applied
to consecutive pairs of 53-bit uniforms ``u = ((x >> 11) + 0.5) * 2**-53``
taken from ``random_raw()``; the pair ``(u1, u2)`` yields
``r cos(2 pi u2)`` then ``r sin(2 pi u2)`` with ``r = sqrt(-2 log u1)``.
Matrices are filled in column-major order.
"""
from dataclasses import dataclass
import zlib

import numpy as np

from .core import as_matrix
from .errors import ParameterError

_TWO53 = float(2 ** 53)


def substream(seed, tag):
    """Independent Philox generator for ``(seed, tag)``."""
    if seed is None:
        raise ParameterError("a seed is required for reproducible sketches")
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode())])
    return np.random.Generator(np.random.Philox(ss))


def uniforms(gen, count):
    raw = gen.bit_generator.random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO53


def normals(gen, count):
    """``count`` standard normal variates via Box-Muller."""
    half = (count + 1) // 2
    u = uniforms(gen, 2 * half)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * half)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:count]


def gaussian(seed, m, n, tag="gaussian"):
    """``m x n`` matrix of i.i.d. standard normals, reproducible from ``(seed, tag)``."""
    if m < 0 or n < 0:
        raise ParameterError("dimensions must be nonnegative")
    z = normals(substream(seed, tag), m * n)
    return np.asfortranarray(z.reshape((m, n), order="F"))


# ---------------------------------------------------------------------------
# FFT


def is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def _bitrev(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft(x, axis=-1, inverse=False):
    """Unnormalized DFT along ``axis``: ``X[q] = sum_p x[p] exp(-+2 pi i p q / n)``.

    Iterative radix-2 when the length is a power of two, direct O(n^2)
    evaluation otherwise. ``inverse`` flips the exponent sign (no 1/n).
    """
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    n = x.shape[-1]
    sign = 1.0 if inverse else -1.0
    if n <= 1:
        out = x.copy()
    elif not is_pow2(n):
        k = np.arange(n)
        F = np.exp(sign * 2j * np.pi * np.outer(k, k) / n)
        out = x @ F
    else:
        out = x[..., _bitrev(n)].copy()
        size = 2
        while size <= n:
            half = size // 2
            w = np.exp(sign * 2j * np.pi * np.arange(half) / size)
            shp = out.shape[:-1] + (n // size, size)
            blk = out.reshape(shp)
            even = blk[..., :half].copy()
            odd = blk[..., half:] * w
            blk[..., :half] = even + odd
            blk[..., half:] = even - odd
            out = blk.reshape(out.shape)
            size *= 2
    return np.moveaxis(out, -1, axis)


def ifft(x, axis=-1):
    x = np.asarray(x)
    return fft(x, axis=axis, inverse=True) / x.shape[axis]


# ---------------------------------------------------------------------------
# SRFT


def srft_apply(A, phases, cols):
    """Complex product ``A D F S`` for explicit phases and selected columns.

    ``D = diag(phases)``, ``F`` is the unitary DFT of size ``n`` and ``S``
    picks columns ``cols``. For power-of-two ``n`` only the selected outputs
    are formed: ``n = L P`` with ``L`` the smallest power of two covering
    ``len(cols)``, an ``L``-point FFT over each of the ``P`` decimated
    subsequences, then a ``P``-term twiddle sum per selected output, for
    ``O(m n log L)`` work. Other sizes fall back to dense DFT columns.
    """
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    cols = np.asarray(cols, dtype=int)
    X = A * phases
    if not is_pow2(n):
        F = np.exp(-2j * np.pi * np.outer(np.arange(n), cols) / n) / np.sqrt(n)
        return X @ F
    ell = len(cols)
    L = 1
    while L < min(ell, n):
        L *= 2
    P = n // L
    # x[r P + s] -> Z[s, r]; FFT over r
    Z = fft(X.reshape(m, L, P), axis=1)
    s = np.arange(P)
    tw = np.exp(-2j * np.pi * np.outer(s, cols) / n)  # P x ell
    G = Z[:, cols % L, :]  # m x ell x P
    return np.einsum("mjs,sj->mj", G, tw) / np.sqrt(n)


@dataclass(frozen=True)
class SketchOperator:
    """Descriptor of a random test matrix that regenerates deterministically."""

    kind: str
    seed: int
    n: int
    ell: int
    tag: str = "range"

    def __post_init__(self):
        if self.kind not in ("gaussian", "srft"):
            raise ParameterError(f"unknown sketch kind {self.kind!r}")
        if self.ell < 1 or self.n < 1:
            raise ParameterError("sketch dimensions must be positive")
        if self.kind == "srft" and self.ell > self.n:
            raise ParameterError(f"SRFT width {self.ell} exceeds n = {self.n}")

    def matrix(self):
        """Dense ``n x ell`` Gaussian matrix (Gaussian kind only)."""
        if self.kind != "gaussian":
            raise ParameterError("only Gaussian operators have a real dense form")
        return gaussian(self.seed, self.n, self.ell, self.tag)

    def srft_parts(self):
        """``(phases, cols)`` of an SRFT: unit-modulus diagonal and distinct column picks."""
        gen = substream(self.seed, f"{self.tag}/srft")
        phases = np.exp(2j * np.pi * uniforms(gen, self.n))
        cols = gen.choice(self.n, size=self.ell, replace=False)
        return phases, cols

    def apply(self, A):
        A = as_matrix(A)
        if A.shape[1] != self.n:
            raise ParameterError(f"operator expects {self.n} columns, got {A.shape[1]}")
        if self.kind == "gaussian":
            return A @ self.matrix()
        Yc = srft_apply(A, *self.srft_parts())
        return np.asfortranarray(np.hstack([Yc.real, Yc.imag]))


def srft_sample(A, ell, seed, tag="range"):
    """Real ``m x 2 ell`` sample ``[Re(A Omega) | Im(A Omega)]`` with ``Omega = D F S``."""
    A = as_matrix(A)
    n = A.shape[1]
    if not 1 <= ell <= n:
        raise ParameterError(f"ell must lie in [1, {n}], got {ell}")
    return SketchOperator("srft", seed, n, ell, tag).apply(A)
