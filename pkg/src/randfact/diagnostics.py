"""Error bounds for randomized range finders, a randomized norm estimator,
and generators for the standard families of test matrices."""
from dataclasses import dataclass
import math
import re

import numpy as np

from .core import EPS, as_matrix, householder_qr
from .errors import ParameterError
from .sketch import gaussian

BOUND_KINDS = ("frob_expectation", "spectral_expectation", "spectral_tail", "power_expectation")
_BOUND_ALIASES = {
    "FrobExpectation": "frob_expectation",
    "SpectralExpectation": "spectral_expectation",
    "SpectralTail": "spectral_tail",
    "PowerExpectation": "power_expectation",
}


@dataclass
class BoundSpec:
    kind: str
    k: int
    p: int
    singvals: np.ndarray
    q: int = 0

    def __post_init__(self):
        self.kind = _BOUND_ALIASES.get(self.kind, self.kind)
        if self.kind not in BOUND_KINDS:
            raise ParameterError(f"unknown bound kind {self.kind!r}")
        self.singvals = np.sort(np.asarray(self.singvals, dtype=np.float64))[::-1]
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        minp = 4 if self.kind == "spectral_tail" else 2
        if self.p < minp:
            raise ParameterError(f"{self.kind} needs p >= {minp}, got {self.p}")
        if self.q < 0:
            raise ParameterError("q must be >= 0")
        if self.k + self.p > len(self.singvals):
            raise ParameterError(f"k + p = {self.k + self.p} exceeds the number of singular values")


def error_bound(spec):
    """Right-hand side of the expectation or tail bound named by ``spec.kind``.

    ``frob_expectation`` and ``spectral_expectation`` bound the mean error of
    ``Q = orth(A G)``; ``spectral_tail`` holds except with probability at
    most ``3 exp(-p)``; ``power_expectation`` bounds the mean spectral error
    when ``Y = (A A^T)^q A G`` is sampled.
    """
    k, p, q = spec.k, spec.p, spec.q
    s = spec.singvals
    tail = s[k:]
    sk1 = tail[0] if tail.size else 0.0
    tail_frob = math.sqrt(float(tail @ tail))
    if spec.kind == "frob_expectation":
        return math.sqrt(1.0 + k / (p - 1)) * tail_frob
    if spec.kind == "spectral_expectation":
        return (1.0 + math.sqrt(k / (p - 1))) * sk1 + math.e * math.sqrt(k + p) / p * tail_frob
    if spec.kind == "spectral_tail":
        return (1.0 + 17.0 * math.sqrt(1.0 + k / p)) * sk1 + 8.0 * math.sqrt(k + p) / (p + 1) * tail_frob
    e = 2 * q + 1
    if sk1 == 0.0:
        return 0.0
    # scale by sigma_{k+1} so that high powers neither overflow nor underflow
    t = tail / sk1
    inner = (1.0 + math.sqrt(k / (p - 1))) + math.e * math.sqrt(k + p) / p * math.sqrt(float(np.sum(t ** (2 * e))))
    return inner ** (1.0 / e) * sk1


def estimate_spectral_norm(T, n=None, r=10, alpha=0.1, seed=0, tag="norm", return_probes=False):
    """Probabilistic upper bound ``(1/alpha) sqrt(2/pi) max_i ||T g_i||``.

    ``T`` is a matrix or a callable ``g -> T g`` (then ``n`` is required).
    The bound holds with probability at least ``1 - alpha**r``.
    """
    if r < 1:
        raise ParameterError("r must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ParameterError("alpha must lie in (0, 1)")
    if callable(T):
        if n is None:
            raise ParameterError("n is required for a matrix-free operator")
        apply = T
    else:
        T = np.asarray(T, dtype=np.float64)
        n = T.shape[1]
        apply = T.__matmul__
    G = gaussian(seed, n, r, tag=tag)
    norms = np.array([np.linalg.norm(apply(G[:, i])) for i in range(r)])
    bound = math.sqrt(2.0 / math.pi) / alpha * float(norms.max())
    if return_probes:
        return bound, norms
    return bound


# ---------------------------------------------------------------------------
# test matrices

TEST_KINDS = ("fast_decay", "flat_tail", "exact_rank", "psd", "kahan")
_KIND_ALIASES = {
    "FastDecay": "fast_decay",
    "FlatTail": "flat_tail",
    "ExactRank": "exact_rank",
    "Psd": "psd",
    "Kahan": "kahan",
}
_POSITIONAL = {
    "fast_decay": ("beta",),
    "flat_tail": ("tail", "k"),
    "exact_rank": ("k",),
    "psd": ("decay",),
    "kahan": ("theta",),
}


def parse_kind(text):
    """Split ``"FastDecay(0.5)"``, ``"flat_tail"`` or ``"Psd(flat)"`` into ``(kind, params)``."""
    m = re.fullmatch(r"\s*([A-Za-z_]+)\s*(?:\((.*)\))?\s*", text)
    if not m:
        raise ParameterError(f"cannot parse matrix kind {text!r}")
    kind = _KIND_ALIASES.get(m.group(1), m.group(1).lower())
    if kind not in TEST_KINDS:
        raise ParameterError(f"unknown matrix kind {m.group(1)!r}")
    params = {}
    if m.group(2) and m.group(2).strip():
        for i, tok in enumerate(t.strip() for t in m.group(2).split(",")):
            if "=" in tok:
                key, val = (s.strip() for s in tok.split("=", 1))
            else:
                if i >= len(_POSITIONAL[kind]):
                    raise ParameterError(f"too many arguments for {kind}")
                key, val = _POSITIONAL[kind][i], tok
            params[key] = _number(val)
    return kind, params


def _number(s):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def planted_spectrum(kind, m, n, beta=0.5, tail=0.1, k=10, decay="fast"):
    """Singular values of the planted-spectrum families, length ``min(m, n)``."""
    kind = _KIND_ALIASES.get(kind, kind)
    r = min(m, n)
    j = np.arange(r, dtype=np.float64)
    if kind == "fast_decay":
        if not 0.0 < beta < 1.0:
            raise ParameterError("beta must lie in (0, 1)")
        return beta ** j
    if kind == "flat_tail":
        if not 0.0 < tail <= 1.0:
            raise ParameterError("tail must lie in (0, 1]")
        if k < 1:
            raise ParameterError("k must be >= 1")
        return np.where(j < k, tail ** (j / k), tail)
    if kind == "exact_rank":
        if not 1 <= k <= r:
            raise ParameterError(f"k must lie in [1, {r}]")
        return np.where(j < k, 1.0 / (j + 1.0), 0.0)
    if kind == "psd":
        if decay == "fast":
            return planted_spectrum("fast_decay", m, n, beta=beta)
        if decay == "flat":
            return planted_spectrum("flat_tail", m, n, tail=tail, k=k)
        raise ParameterError(f"psd decay must be 'fast' or 'flat', got {decay!r}")
    raise ParameterError(f"{kind!r} has no planted spectrum")


def haar_orthonormal(seed, m, r, tag):
    """``m x r`` orthonormal matrix, Haar distributed: Q factor of a Gaussian with positive ``R`` diagonal."""
    Q, _ = householder_qr(gaussian(seed, m, r, tag=tag))
    return Q


def kahan(n, theta=1.2):
    """Upper triangular Kahan matrix ``diag(1, s, ..., s^(n-1)) (I - c N)``.

    ``c = cos(theta)``, ``s = sin(theta)`` and ``N`` is strictly upper
    triangular with all ones. Every column has unit norm, so the diagonal is
    perturbed by ``1 + 25 eps (n - i)`` to make column pivoting keep the
    natural order, which it otherwise would only by tie-breaking.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    c, s = math.cos(theta), math.sin(theta)
    scale = s ** np.arange(n)
    R = -c * np.triu(np.ones((n, n)), 1) + np.eye(n)
    R = scale[:, None] * R
    R[np.diag_indices(n)] *= 1.0 + 25.0 * EPS * (n - 1 - np.arange(n))
    return np.asfortranarray(R)


def test_matrix(kind, m, n, seed=0, **params):
    """Dense ``m x n`` test matrix of the given family.

    ``fast_decay(beta)``: ``sigma_j = beta**(j-1)``. ``flat_tail(tail, k)``:
    geometric decay from 1 to ``tail`` over the first ``k`` values, then
    constant ``tail``. ``exact_rank(k)``: ``sigma_j = 1/j`` for ``j <= k``,
    zero after. ``psd(decay)``: symmetric ``U diag(sigma) U^T`` with a
    ``fast`` or ``flat`` profile. ``kahan(theta)``: see :func:`kahan`.
    Singular vectors are Haar distributed and reproducible from ``seed``.
    """
    if isinstance(kind, str) and "(" in kind:
        kind, parsed = parse_kind(kind)
        params = {**parsed, **params}
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in TEST_KINDS:
        raise ParameterError(f"unknown matrix kind {kind!r}")
    if m < 1 or n < 1:
        raise ParameterError("dimensions must be >= 1")
    if kind == "kahan":
        if m != n:
            raise ParameterError("the Kahan matrix is square")
        return kahan(n, **params)
    sigma = planted_spectrum(kind, m, n, **params)
    r = min(m, n)
    U = haar_orthonormal(seed, m, r, "haar/U")
    if kind == "psd":
        if m != n:
            raise ParameterError("psd test matrices are square")
        A = (U * sigma) @ U.T
        return np.asfortranarray(0.5 * (A + A.T))
    V = haar_orthonormal(seed, n, r, "haar/V")
    return np.asfortranarray((U * sigma) @ V.T)
test_matrix.__test__ = False
