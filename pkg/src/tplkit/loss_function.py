"""Precomputed pair tables and the piecewise privacy loss function.

For a fixed transition matrix the optimum of each pair program is a
piecewise function of ``alpha``: sort the coordinates with ``q_j > d_j`` by
descending ratio ``q_j / d_j``; the active coefficients are a prefix sum of
that order, and the prefix shrinks by one at each transition point as
``alpha`` grows. :func:`precompute_params` tabulates those prefixes and
thresholds once, :func:`evaluate_precomputed` binary-searches them.

The loss ``L(alpha)`` is the upper envelope over all pairs.
:func:`generate_loss_function` extracts that envelope on ``[a_lo, a_hi]``
by recursive splitting: two candidate curves ``log((q y + 1)/(d y + 1))``
cross at most once for ``alpha > 0``, so a curve that tops the envelope at
both ends of an interval tops it on the whole interval.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from tplkit._numerics import log_ratio, log_ratio_scalar
from tplkit.errors import (
    IntersectionTooDense,
    InvalidDomain,
    MalformedInput,
    NegativeAlpha,
    OutOfDomain,
)
from tplkit.lfp_solver import pair_indices, ratio_order
from tplkit.matrix_model import TransitionMatrix

MAX_SPLIT_DEPTH = 64
# Absolute slack when deciding that one curve already tops the envelope.
ENVELOPE_TOL = 1e-13


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PrecomputedParams:
    """Per-pair coefficient tables, one row per ordered pair of distinct rows.

    ``qM[r, k]`` / ``dM[r, k]`` are the cumulative sums of the first ``k + 1``
    sorted surviving coordinates of pair ``r``; ``aM[r, k]`` is the alpha at
    which coordinate ``k`` leaves the optimal set. ``aM`` rows start at
    ``+inf`` and use ``0`` for inactive slots, so each row is non-increasing.
    Pairs with no coordinate ``q_j > d_j`` are all-zero rows.
    """

    qM: np.ndarray
    dM: np.ndarray
    aM: np.ndarray

    def __post_init__(self):
        for name in ("qM", "dM", "aM"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.qM.shape[1]

    @property
    def trivial(self) -> bool:
        """True when every pair is degenerate, i.e. ``L`` is identically 0."""
        return not np.any(self.qM)

    def active_mask(self) -> np.ndarray:
        return self.aM > 0

    def candidates(self) -> tuple[np.ndarray, np.ndarray]:
        """Every distinct active ``(q, d)`` prefix pair, the supremum candidates."""
        mask = self.active_mask()
        pairs = np.unique(np.stack([self.qM[mask], self.dM[mask]], axis=1), axis=0)
        return pairs[:, 0], pairs[:, 1]


def precompute_params(P: TransitionMatrix) -> PrecomputedParams:
    """Build the ``n(n-1) x n`` tables ``qM``, ``dM``, ``aM`` for ``P``."""
    i, j = pair_indices(P.n)
    Q = P.p[i]
    D = P.p[j]
    keep = Q > D
    order = ratio_order(Q, D)
    Q = np.where(keep, Q, 0.0)
    D = np.where(keep, D, 0.0)
    Qs = np.take_along_axis(Q, order, axis=1)
    Ds = np.take_along_axis(D, order, axis=1)
    active = np.take_along_axis(keep, order, axis=1)
    qM = np.cumsum(Qs, axis=1)
    dM = np.cumsum(Ds, axis=1)
    # transition point for slot k: (q_k - d_k) / (q^k d_k - d^k q_k), then log(. + 1)
    denom = qM * Ds - dM * Qs
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(denom > 0, (Qs - Ds) / denom, np.inf)
    aM = np.where(active, np.log1p(y), 0.0)
    aM[:, 0] = np.where(active[:, 0], np.inf, 0.0)
    # Non-increasing in exact arithmetic; clip rounding noise so bisection stays valid.
    aM = np.minimum.accumulate(aM, axis=1)
    degenerate = ~active[:, 0]
    qM[degenerate] = 0.0
    dM[degenerate] = 0.0
    return PrecomputedParams(qM, dM, aM)


def _active_slots(params: PrecomputedParams, alpha: float) -> np.ndarray:
    """Vectorized bisection: per row, the slot k with ``aM[k] > alpha >= aM[k+1]``.

    Returns -1 for degenerate rows.
    """
    aM = params.aM
    rows = np.arange(aM.shape[0])
    lo = np.zeros(aM.shape[0], dtype=np.intp)
    hi = np.full(aM.shape[0], aM.shape[1], dtype=np.intp)
    while True:
        open_ = lo < hi
        if not open_.any():
            break
        mid = (lo + hi) // 2
        above = aM[rows, np.minimum(mid, aM.shape[1] - 1)] > alpha
        lo = np.where(open_ & above, mid + 1, lo)
        hi = np.where(open_ & ~above, mid, hi)
    return lo - 1


def _pair_values(params: PrecomputedParams, alpha: float):
    k = _active_slots(params, alpha)
    rows = np.arange(k.shape[0])
    kk = np.maximum(k, 0)
    q = np.where(k >= 0, params.qM[rows, kk], 0.0)
    d = np.where(k >= 0, params.dM[rows, kk], 0.0)
    return log_ratio(q, d, alpha), q, d


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha >= 0:
        raise NegativeAlpha(f"alpha must be >= 0, got {alpha!r}")
    return alpha


def evaluate_precomputed(params: PrecomputedParams, alpha: float, epsilon_t: float = 0.0) -> float:
    """``L(alpha) + epsilon_t`` from the precomputed tables."""
    alpha = _check_alpha(alpha)
    if params.trivial or alpha == 0.0:
        return float(epsilon_t)
    values, _, _ = _pair_values(params, alpha)
    return max(float(values.max()), 0.0) + float(epsilon_t)


def envelope_definition(params: PrecomputedParams, alpha: float) -> tuple[float, float, float]:
    """``(L(alpha), q, d)`` for the curve on top at ``alpha``.

    Exact ties go to the larger ``q``, the curve that grows faster afterwards.
    """
    values, q, d = _pair_values(params, _check_alpha(alpha))
    top = values.max()
    tied = np.flatnonzero(values == top)
    best = tied[np.argmax(q[tied])]
    return float(top), float(q[best]), float(d[best])


@dataclass(frozen=True)
class Segment:
    hi: float
    q: float
    d: float


@dataclass(frozen=True)
class PiecewiseLoss:
    """Upper envelope ``L`` as segments ``(hi, q, d)`` over ``[0, a_max]``.

    Segment ``i`` covers ``(hi[i-1], hi[i]]``; the first one starts at 0.
    """

    segments: tuple[Segment, ...]
    a_max: float
    trivial: bool = False
    _his: list = field(init=False, repr=False, compare=False)
    _qs: np.ndarray = field(init=False, repr=False, compare=False)
    _ds: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "_his", [s.hi for s in self.segments])
        object.__setattr__(self, "_qs", np.array([s.q for s in self.segments]))
        object.__setattr__(self, "_ds", np.array([s.d for s in self.segments]))

    @property
    def breakpoints(self) -> list[float]:
        return list(self._his)

    @property
    def coeffs(self) -> list[tuple[float, float]]:
        return [(s.q, s.d) for s in self.segments]

    def to_dict(self) -> dict:
        return {
            "a_max": self.a_max,
            "segments": [{"hi": s.hi, "q": s.q, "d": s.d} for s in self.segments],
            "trivial": self.trivial,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "PiecewiseLoss":
        try:
            segments = tuple(Segment(float(s["hi"]), float(s["q"]), float(s["d"])) for s in doc["segments"])
            return cls(segments, float(doc["a_max"]), bool(doc.get("trivial", False)))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"invalid loss-function document: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseLoss":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"invalid JSON: {exc}") from None

    def __call__(self, alpha: float) -> float:
        return evaluate_loss_function(self, alpha)


def generate_loss_function(
    P: Optional[TransitionMatrix],
    a_lo: float,
    a_hi: float,
    params: Optional[PrecomputedParams] = None,
) -> PiecewiseLoss:
    """Extract the envelope ``L`` on ``[a_lo, a_hi]``.

    ``params`` is computed from ``P`` when omitted. Values below ``a_lo`` are
    served by the first segment, which is exact up to ``O(a_lo)``; keep
    ``a_lo`` small.
    """
    a_lo, a_hi = float(a_lo), float(a_hi)
    if not (a_lo > 0 and a_hi >= a_lo and math.isfinite(a_hi)):
        raise InvalidDomain(f"need 0 < a_lo <= a_hi < inf, got [{a_lo!r}, {a_hi!r}]")
    if params is None:
        params = precompute_params(P)
    if params.trivial:
        return PiecewiseLoss((), a_hi, trivial=True)

    out: list[Segment] = []
    cache: dict[float, tuple[float, float, float]] = {}

    def top(a):
        if a not in cache:
            cache[a] = envelope_definition(params, a)
        return cache[a]

    # explicit stack of (a1, am, depth); right half pushed first so output ascends
    stack = [(a_lo, a_hi, 0)]
    while stack:
        a1, am, depth = stack.pop()
        if depth > MAX_SPLIT_DEPTH:
            raise IntersectionTooDense(
                f"envelope split depth exceeded {MAX_SPLIT_DEPTH} near alpha={a1!r}"
            )
        v1, q1, d1 = top(a1)
        vm, qm, dm = top(am)
        if a1 == am or log_ratio_scalar(q1, d1, am) >= vm - ENVELOPE_TOL:
            out.append(Segment(am, q1, d1))
            continue
        if log_ratio_scalar(qm, dm, a1) >= v1 - ENVELOPE_TOL:
            out.append(Segment(am, qm, dm))
            continue
        num = qm + d1 - q1 - dm
        den = q1 * dm - qm * d1
        ak = math.log1p(num / den) if den != 0 and num / den > 0 else math.nan
        if not a1 < ak < am:
            # rounding pushed the crossing outside; bisect instead
            ak = 0.5 * (a1 + am)
        stack.append((ak, am, depth + 1))
        stack.append((a1, ak, depth + 1))

    merged: list[Segment] = []
    for seg in out:
        if merged and (merged[-1].q, merged[-1].d) == (seg.q, seg.d):
            merged[-1] = Segment(seg.hi, seg.q, seg.d)
        elif merged and seg.hi <= merged[-1].hi:
            continue
        else:
            merged.append(seg)
    return PiecewiseLoss(tuple(merged), a_hi)


def evaluate_loss_function(plf: PiecewiseLoss, alpha: float, epsilon_t: float = 0.0) -> float:
    """``L(alpha) + epsilon_t`` by bisection over the segment endpoints."""
    alpha = _check_alpha(alpha)
    if plf.trivial:
        return float(epsilon_t)
    if alpha > plf.a_max:
        raise OutOfDomain(alpha, plf.a_max)
    i = bisect.bisect_left(plf._his, alpha)
    # neighbours too: near a breakpoint either curve may be the larger by an ulp,
    # and the max keeps results bit-identical to the all-pairs evaluation
    lo, hi = max(i - 1, 0), min(i + 2, len(plf.segments))
    values = log_ratio(plf._qs[lo:hi], plf._ds[lo:hi], alpha)
    return max(float(values.max()), 0.0) + epsilon_t


def pair_function_values(params: PrecomputedParams, alphas: Sequence[float]) -> np.ndarray:
    """Matrix of every pair's optimum, shape ``(len(alphas), n(n-1))``."""
    return np.stack([_pair_values(params, _check_alpha(a))[0] for a in alphas])
