"""Matrix Market and CSV reading, Matrix Market array writing."""
import os
import tempfile

import numpy as np

from .errors import MatrixParseError


def write_matrix_market(path, A, comment=None):
    """Write ``A`` in Matrix Market array format (column-major, ``%.17g``), atomically."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise MatrixParseError("only 2-D matrices can be written")
    m, n = A.shape
    lines = ["%%MatrixMarket matrix array real general"]
    if comment:
        lines += [f"% {c}" for c in str(comment).splitlines()]
    lines.append(f"{m} {n}")
    lines += ["%.17g" % v for v in A.ravel(order="F")]
    atomic_write(path, "\n".join(lines) + "\n")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".randfact-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_matrix(path):
    """Read a dense matrix from a Matrix Market file (array or coordinate) or CSV."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise MatrixParseError(f"{path}: {exc.strerror}") from exc
    if text.lstrip().startswith("%%MatrixMarket"):
        return parse_matrix_market(text, path)
    return parse_csv(text, path)


def _floats(tokens, path):
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise MatrixParseError(f"{path}: {exc}") from exc


def parse_matrix_market(text, path="<string>"):
    lines = text.splitlines()
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixParseError(f"{path}: malformed Matrix Market header {lines[0]!r}")
    fmt, field, sym = (h.lower() for h in header[2:])
    if fmt not in ("array", "coordinate"):
        raise MatrixParseError(f"{path}: unsupported format {fmt!r}")
    if field not in ("real", "integer", "double"):
        raise MatrixParseError(f"{path}: unsupported field {field!r} (real or integer expected)")
    if sym not in ("general", "symmetric", "skew-symmetric"):
        raise MatrixParseError(f"{path}: unsupported symmetry {sym!r}")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixParseError(f"{path}: missing size line")
    size = body[0].split()
    try:
        dims = [int(s) for s in size]
    except ValueError as exc:
        raise MatrixParseError(f"{path}: bad size line {body[0]!r}") from exc
    tokens = " ".join(body[1:]).split()
    if fmt == "array":
        if len(dims) != 2:
            raise MatrixParseError(f"{path}: array size line needs 2 integers")
        m, n = dims
        vals = _floats(tokens, path)
        if sym == "general":
            if vals.size != m * n:
                raise MatrixParseError(f"{path}: expected {m * n} entries, found {vals.size}")
            return np.asfortranarray(vals.reshape((m, n), order="F"))
        if m != n:
            raise MatrixParseError(f"{path}: {sym} matrix must be square")
        skew = sym == "skew-symmetric"
        A = np.zeros((n, n), order="F")
        it = iter(vals)
        try:
            for j in range(n):
                for i in range(j + 1 if skew else j, n):
                    A[i, j] = next(it)
        except StopIteration:
            raise MatrixParseError(f"{path}: too few entries for a {n} x {n} {sym} matrix") from None
        if next(it, None) is not None:
            raise MatrixParseError(f"{path}: too many entries for a {n} x {n} {sym} matrix")
        return A - np.tril(A, -1).T if skew else A + np.tril(A, -1).T
    if len(dims) != 3:
        raise MatrixParseError(f"{path}: coordinate size line needs 3 integers")
    m, n, nnz = dims
    if len(tokens) != 3 * nnz:
        raise MatrixParseError(f"{path}: expected {nnz} entries of 3 fields")
    vals = _floats(tokens, path).reshape(nnz, 3)
    A = np.zeros((m, n), order="F")
    for i, j, v in vals:
        i, j = int(i) - 1, int(j) - 1
        if not (0 <= i < m and 0 <= j < n):
            raise MatrixParseError(f"{path}: index ({i + 1}, {j + 1}) out of range")
        A[i, j] += v
        if sym != "general" and i != j:
            A[j, i] += -v if sym == "skew-symmetric" else v
    return A


def parse_csv(text, path="<string>"):
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise MatrixParseError(f"{path}: empty file")
    data = [_floats([t for t in r.replace(";", ",").split(",")], path) for r in rows]
    n = len(data[0])
    if any(len(r) != n for r in data):
        raise MatrixParseError(f"{path}: rows have different lengths")
    A = np.asfortranarray(np.vstack(data))
    if not np.all(np.isfinite(A)):
        raise MatrixParseError(f"{path}: non-finite entries")
    return A
