"""Measurement matrices with unit-norm columns, sparse ground-truth signals,
mutual coherence, and the plain-text file formats for both.

Random draws use ``numpy.random.default_rng(seed)`` (PCG64). Identical
arguments reproduce identical output within one numpy build.
"""
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg

from ._validation import check_count, check_matrix, readonly
from .exceptions import ArgumentError, FormatError

__all__ = [
    "Dictionary",
    "SparseSignal",
    "coherence",
    "gen_gaussian",
    "gen_identity_plus_hadamard",
    "gen_signal",
    "save_matrix",
    "load_matrix",
    "save_signal",
    "load_signal",
    "save_vector",
    "load_vector",
    "format_float",
]

UNIT_NORM_TOL = 1e-12


def format_float(value):
    """17 significant digits: enough for an exact float64 round trip."""
    return format(float(value), ".17g")


@dataclass(frozen=True, eq=False)
class Dictionary:
    """An ``n x N`` measurement matrix whose columns have unit l2 norm.

    ``mu`` (the coherence) is computed on first access and cached.
    """

    matrix: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        m = check_matrix(self.matrix, "matrix")
        norms = np.linalg.norm(m, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise ArgumentError(
                f"columns must have unit l2 norm; column {int(bad[0])} has norm "
                f"{norms[bad[0]]!r} (use Dictionary.normalized to rescale)"
            )
        object.__setattr__(self, "matrix", readonly(m))

    @classmethod
    def normalized(cls, matrix, label="custom"):
        """Build a dictionary after scaling every column to unit norm."""
        m = check_matrix(matrix, "matrix")
        norms = np.linalg.norm(m, axis=0)
        if np.any(norms == 0):
            raise ArgumentError("cannot normalize a zero column")
        return cls(m / norms, label)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def N(self):
        return self.matrix.shape[1]

    @cached_property
    def mu(self):
        return coherence(self)

    def columns(self, indices):
        return self.matrix[:, list(indices)]


@dataclass(frozen=True)
class SparseSignal:
    """Ground truth stored as ``(index, value)`` pairs, largest magnitude first.

    Entries are re-ordered at construction (stable on ties), so ``entries[0]``
    is always the largest coefficient and ``entries[-1]`` the smallest.
    """

    dim: int
    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        dim = check_count(self.dim, "dim", minimum=1)
        pairs = []
        for item in self.entries:
            idx, val = item
            idx = check_count(idx, "index")
            val = float(val)
            if idx >= dim:
                raise ArgumentError(f"index {idx} out of range for dim {dim}")
            if val == 0.0 or not np.isfinite(val):
                raise ArgumentError(f"entry at index {idx} must be finite and nonzero")
            pairs.append((idx, val))
        if len({i for i, _ in pairs}) != len(pairs):
            raise ArgumentError("signal indices must be distinct")
        pairs.sort(key=lambda p: -abs(p[1]))
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "entries", tuple(pairs))

    @classmethod
    def from_dense(cls, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.flatnonzero(x)
        return cls(x.size, tuple((int(i), float(x[i])) for i in idx))

    @property
    def k(self):
        return len(self.entries)

    @property
    def support(self):
        return tuple(sorted(i for i, _ in self.entries))

    @property
    def magnitudes(self):
        return np.array([abs(v) for _, v in self.entries])

    def to_dense(self):
        x = np.zeros(self.dim)
        for i, v in self.entries:
            x[i] = v
        return x


def coherence(d):
    """Largest absolute inner product between two distinct columns."""
    m = d.matrix if isinstance(d, Dictionary) else check_matrix(d)
    if m.shape[1] < 2:
        raise ArgumentError("coherence needs at least two columns")
    gram = np.abs(m.T @ m)
    np.fill_diagonal(gram, -np.inf)
    return float(gram.max())


def gen_gaussian(n, N, seed):
    n = check_count(n, "n", minimum=1)
    N = check_count(N, "N", minimum=1)
    if n > N:
        raise ArgumentError(f"need n <= N, got n={n}, N={N}")
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, N))
    m /= np.linalg.norm(m, axis=0)
    return Dictionary(m, "gaussian")


def gen_identity_plus_hadamard(n):
    """``[I_n, H_n / sqrt(n)]`` with ``H_n`` the Sylvester Hadamard matrix.

    Coherence is exactly ``1/sqrt(n)``.
    """
    n = check_count(n, "n", minimum=1)
    if n & (n - 1):
        raise ArgumentError(f"n must be a power of 2, got {n}")
    h = scipy.linalg.hadamard(n, dtype=np.float64) / np.sqrt(n)
    return Dictionary(np.hstack([np.eye(n), h]), "id_hadamard")


def gen_signal(N, k, magnitude_ratio, seed):
    """k-sparse signal with geometric magnitudes ``r**(k-1), ..., r, 1``.

    Indices are drawn uniformly without replacement and signs uniformly; the
    largest magnitude goes to the first drawn index.
    """
    N = check_count(N, "N", minimum=1)
    k = check_count(k, "k", minimum=1)
    if k > N:
        raise ArgumentError(f"need k <= N, got k={k}, N={N}")
    if not np.isfinite(magnitude_ratio) or magnitude_ratio < 1:
        raise ArgumentError(f"magnitude_ratio must be >= 1, got {magnitude_ratio!r}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(N, size=k, replace=False)
    signs = rng.choice([-1.0, 1.0], size=k)
    mags = [1.0]
    for _ in range(k - 1):
        mags.append(mags[-1] * magnitude_ratio)
    mags.reverse()
    return SparseSignal(N, tuple((int(i), s * m) for i, s, m in zip(idx, signs, mags)))


# -- file formats -----------------------------------------------------------

def save_matrix(path, matrix):
    m = matrix.matrix if isinstance(matrix, Dictionary) else check_matrix(matrix)
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(format_float(v) for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_lines(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"not UTF-8 text ({exc})", path=path) from None
    return text.split("\n")


def _parse_header(lines, path, names):
    if not lines or not lines[0].strip():
        raise FormatError("missing header", line=1, path=path)
    parts = lines[0].split()
    if len(parts) != 2:
        raise FormatError(f"header must be '{names}'", line=1, path=path)
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError(f"header must be two integers '{names}'", line=1, path=path) from None
    return a, b


def _parse_float(token, lineno, path):
    try:
        val = float(token)
    except ValueError:
        raise FormatError(f"non-numeric token {token!r}", line=lineno, path=path) from None
    if not np.isfinite(val):
        raise FormatError(f"non-finite value {token!r}", line=lineno, path=path)
    return val


def _body(lines, count, path):
    body = lines[1:]
    while body and body[-1].strip() == "":
        body.pop()
    if len(body) != count:
        raise FormatError(f"expected {count} data lines, found {len(body)}",
                          line=len(body) + 2, path=path)
    return body


def load_matrix(path):
    """Read a matrix file into a float64 array (no unit-norm requirement)."""
    lines = _read_lines(path)
    n, N = _parse_header(lines, path, "n N")
    if n < 1 or N < 1:
        raise FormatError("dimensions must be positive", line=1, path=path)
    rows = []
    for offset, line in enumerate(_body(lines, n, path)):
        lineno = offset + 2
        tokens = line.split()
        if len(tokens) != N:
            raise FormatError(f"row {offset} has {len(tokens)} values, expected {N}",
                              line=lineno, path=path)
        rows.append([_parse_float(t, lineno, path) for t in tokens])
    return np.array(rows, dtype=np.float64)


def save_signal(path, signal):
    lines = [f"{signal.dim} {signal.k}"]
    lines += [f"{i} {format_float(v)}" for i, v in signal.entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_signal(path):
    lines = _read_lines(path)
    N, k = _parse_header(lines, path, "N k")
    entries = []
    for offset, line in enumerate(_body(lines, k, path)):
        lineno = offset + 2
        tokens = line.split()
        if len(tokens) != 2:
            raise FormatError("expected 'index value'", line=lineno, path=path)
        try:
            idx = int(tokens[0])
        except ValueError:
            raise FormatError(f"non-integer index {tokens[0]!r}", line=lineno, path=path) from None
        entries.append((idx, _parse_float(tokens[1], lineno, path)))
    try:
        return SparseSignal(N, tuple(entries))
    except ArgumentError as exc:
        raise FormatError(str(exc), path=path) from None


def save_vector(path, v):
    """Vectors are stored as single-column matrix files (header ``n 1``)."""
    v = np.asarray(v, dtype=np.float64).reshape(-1, 1)
    save_matrix(path, v)


def load_vector(path):
    m = load_matrix(path)
    if m.shape[1] == 1:
        return m[:, 0]
    if m.shape[0] == 1:
        return m[0]
    raise FormatError(f"expected a single row or column, got shape {m.shape}", path=path)
