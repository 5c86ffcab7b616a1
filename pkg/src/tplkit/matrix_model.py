"""Row-stochastic transition matrices: validation, generation and text I/O.

A :class:`TransitionMatrix` holds either backward correlations
``Pr(l[t-1] | l[t])`` or forward correlations ``Pr(l[t] | l[t-1])``; the
``kind`` tag is informational only, the leakage computations are identical
for both directions.

Random matrices are drawn with numpy's PCG64 generator
(``numpy.random.default_rng``), which is portable and bit-reproducible across
platforms for a fixed seed. Each row is a vector of independent Uniform(0, 1)
draws normalized to sum to one.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from tplkit.errors import (
    InvalidDimension,
    MalformedInput,
    NegativeEntry,
    NonPositiveS,
    NotStochastic,
)

# Row sums must match 1 this closely once inside the library.
STRICT_TOL = 1e-9
# Text inputs within this distance of 1 are renormalized instead of rejected.
INGEST_TOL = 1e-6


class Kind(str, enum.Enum):
    BACKWARD = "backward"
    FORWARD = "forward"


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Immutable validated n x n row-stochastic matrix.

    Construct with :meth:`from_rows` (or the generators below) rather than
    directly; the constructor only validates.
    """

    p: np.ndarray
    kind: Kind = Kind.BACKWARD

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        _validate(p, STRICT_TOL)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "kind", Kind(self.kind))

    @classmethod
    def from_rows(
        cls,
        rows: Union[Sequence[Sequence[float]], np.ndarray],
        kind: Union[Kind, str] = Kind.BACKWARD,
        tol: float = INGEST_TOL,
    ) -> "TransitionMatrix":
        """Build a matrix, renormalizing rows whose sums are within ``tol`` of 1."""
        try:
            p = np.array(rows, dtype=float)
        except (TypeError, ValueError) as exc:
            raise MalformedInput(f"cannot read matrix rows: {exc}") from None
        if p.ndim != 2:
            raise MalformedInput("matrix rows must all have the same length")
        _validate(p, tol)
        sums = p.sum(axis=1)
        drift = np.abs(sums - 1.0) > STRICT_TOL
        if drift.any():
            p[drift] /= sums[drift, None]
        return cls(p, Kind(kind))

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def rows(self) -> list[list[float]]:
        return self.p.tolist()

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash((self.kind, self.p.tobytes()))

    def __repr__(self):
        return f"TransitionMatrix(n={self.n}, kind={self.kind.value!r}, p={self.rows!r})"

    def with_kind(self, kind: Union[Kind, str]) -> "TransitionMatrix":
        return TransitionMatrix(self.p, Kind(kind))


def _validate(p: np.ndarray, tol: float) -> None:
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise InvalidDimension(f"matrix must be square, got shape {p.shape}")
    if p.shape[0] < 2:
        raise InvalidDimension(f"matrix dimension must be >= 2, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise MalformedInput("matrix contains non-finite entries")
    if np.any(p < 0):
        i, j = map(int, np.argwhere(p < 0)[0])
        raise NegativeEntry(f"negative probability {p[i, j]!r} at row {i + 1}, column {j + 1}")
    if np.any(p > 1):
        i, j = map(int, np.argwhere(p > 1)[0])
        raise NotStochastic(f"probability {p[i, j]!r} > 1 at row {i + 1}, column {j + 1}")
    sums = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        i = int(bad[0])
        raise NotStochastic(f"row {i + 1} sums to {sums[i]!r}, not 1")


def _check_n(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 2:
        raise InvalidDimension(f"n must be an integer >= 2, got {n!r}")
    return int(n)


def gen_strongest(n: int, kind: Union[Kind, str] = Kind.BACKWARD) -> TransitionMatrix:
    """Identity matrix: each state deterministically follows itself."""
    return TransitionMatrix(np.eye(_check_n(n)), Kind(kind))


def gen_uniform(n: int, kind: Union[Kind, str] = Kind.BACKWARD) -> TransitionMatrix:
    n = _check_n(n)
    return TransitionMatrix(np.full((n, n), 1.0 / n), Kind(kind))


def gen_random_stochastic(
    n: int, seed: int, kind: Union[Kind, str] = Kind.BACKWARD
) -> TransitionMatrix:
    n = _check_n(n)
    # Negative 64-bit seeds are folded onto their unsigned bit pattern.
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    raw = rng.uniform(size=(n, n))
    return TransitionMatrix.from_rows(raw / raw.sum(axis=1, keepdims=True), kind)


def laplacian_smooth(m: TransitionMatrix, s: float) -> TransitionMatrix:
    """Pull every row toward uniform: ``(p_jk + s) / sum_u (p_ju + s)``.

    Smaller ``s`` keeps the matrix closer to the input, i.e. stronger
    correlation when starting from :func:`gen_strongest`.
    """
    if not (isinstance(s, (int, float, np.floating)) and s > 0 and math.isfinite(s)):
        raise NonPositiveS(f"smoothing parameter must be a positive finite real, got {s!r}")
    shifted = m.p + s
    return TransitionMatrix.from_rows(shifted / shifted.sum(axis=1, keepdims=True), m.kind)


def parse_matrix(text: str, format: str = "csv", kind: Union[Kind, str, None] = None) -> TransitionMatrix:
    """Parse CSV (n lines of n comma-separated values) or JSON text.

    For JSON the ``kind`` stored in the document is used unless overridden.
    """
    if not text or not text.strip():
        raise MalformedInput("empty matrix text")
    if format == "csv":
        rows = []
        for lineno, line in enumerate(text.strip().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rows.append([float(cell) for cell in line.split(",")])
            except ValueError:
                raise MalformedInput(f"non-numeric cell on line {lineno}: {line!r}") from None
        if len({len(r) for r in rows}) != 1:
            raise MalformedInput("ragged rows: every line must have the same number of cells")
        return TransitionMatrix.from_rows(rows, kind or Kind.BACKWARD)
    if format == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"invalid JSON: {exc}") from None
        if not isinstance(doc, dict) or "rows" not in doc:
            raise MalformedInput('JSON matrix must be an object with a "rows" field')
        rows = doc["rows"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise MalformedInput('"rows" must be a list of lists')
        if len({len(r) for r in rows}) > 1:
            raise MalformedInput("ragged rows in JSON matrix")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for r in rows for v in r):
            raise MalformedInput("non-numeric cell in JSON matrix")
        if "n" in doc and doc["n"] != len(rows):
            raise MalformedInput(f'"n"={doc["n"]!r} does not match {len(rows)} rows')
        try:
            doc_kind = Kind(doc.get("kind", Kind.BACKWARD))
        except ValueError:
            raise MalformedInput(f'unknown kind {doc.get("kind")!r}') from None
        return TransitionMatrix.from_rows(rows, kind or doc_kind)
    raise MalformedInput(f"unknown matrix format {format!r}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def serialize_matrix(m: TransitionMatrix, format: str = "csv") -> str:
    """Inverse of :func:`parse_matrix`; 17 significant digits round-trip exactly."""
    if format == "csv":
        return "\n".join(",".join(_fmt(v) for v in row) for row in m.p)
    if format == "json":
        # json emits repr(), the shortest exact round-trip form
        return json.dumps({"n": m.n, "rows": m.rows, "kind": m.kind.value})
    raise MalformedInput(f"unknown matrix format {format!r}")
