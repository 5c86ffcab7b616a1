"""Per-row-pair linear-fractional programs and the direct loss increment.

For two rows ``q`` and ``d`` of a transition matrix and a previous leakage
``alpha``, the adversary's extra leakage is the optimum of

    maximize   log(q . x / d . x)
    subject to x_j / x_k <= e^alpha   for all j, k,   x > 0.

:func:`solve_pair_direct` finds it with the candidate-removal sweep:
start from the coordinates with ``q_j > d_j`` and repeatedly drop those whose
ratio ``q_j / d_j`` falls to or below the current objective ratio.
:func:`lfp_oracle` is an independent brute force over the vertices of the
scaled feasible box ``[1, e^alpha]^n``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tplkit._numerics import log_ratio
from tplkit.errors import DimensionMismatch, NegativeAlpha, TooLarge
from tplkit.matrix_model import TransitionMatrix

# Slack for the "ratio at or below the objective" removal test, applied to the
# cross-multiplied form normalized by e^alpha.
VIOLATION_TOL = 1e-12
ORACLE_MAX_N = 20
_ORACLE_CHUNK = 1 << 14


@dataclass(frozen=True)
class PairSolution:
    value: float
    q: float
    d: float
    selected: tuple[int, ...]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha >= 0:
        raise NegativeAlpha(f"alpha must be >= 0, got {alpha!r}")
    return alpha


def ratio_order(Q: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Per row, coordinate order by descending ``q_j / d_j``; ``d_j = 0`` first, ``q_j <= d_j`` last."""
    keep = Q > D
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(D > 0, Q / D, np.inf)
    ratio = np.where(keep, ratio, -np.inf)
    # any deterministic order works: precompute shares this function
    return np.argsort(-ratio, axis=1)


def _removal_sweep(Q: np.ndarray, D: np.ndarray, alpha: float):
    """Run the removal loop on a stack of row pairs.

    ``Q`` and ``D`` have shape ``(pairs, n)``. Each sweep recomputes the sums
    once and removes every violator at the same time. Returns the surviving
    mask (original column order) and the surviving sums ``q``, ``d``, added
    sequentially in ratio order so they match the precomputed prefix sums
    bit for bit.
    """
    order = ratio_order(Q, D)
    Qs = np.take_along_axis(Q, order, axis=1)
    Ds = np.take_along_axis(D, order, axis=1)
    mask = Qs > Ds
    # columns past the widest candidate set are inactive everywhere
    width = int(mask.sum(axis=1).max()) if mask.size else 0
    Qs, Ds, m = Qs[:, :width], Ds[:, :width], mask[:, :width].copy()
    # Objective ratio (q y + 1) / (d y + 1) with y = e^alpha - 1 is rescaled by
    # e^alpha: q w + (1 - w), w = 1 - e^-alpha, keeping every term O(1).
    w = -math.expm1(-alpha)
    rest = math.exp(-alpha)
    # Column 0 holds the best ratio and can never violate; pinning it stops
    # rounding from emptying the set once the e^-alpha term underflows.
    # d_j = 0 means an infinite ratio, which never violates either.
    removable = m & (Ds > 0)
    if width:
        removable[:, 0] = False
    # only rows that lost a coordinate in the last sweep need another one
    live = np.arange(m.shape[0])
    while live.size:
        Ql, Dl, ml = Qs[live], Ds[live], m[live]
        q = (Ql * ml).sum(axis=1, keepdims=True)
        d = (Dl * ml).sum(axis=1, keepdims=True)
        # Q (d w + 1 - w) - D (q w + 1 - w), split so the two scales stay apart
        gap = w * (Ql * d - Dl * q) + rest * (Ql - Dl)
        violate = removable[live] & ml & (gap <= VIOLATION_TOL)
        hit = violate.any(axis=1)
        live = live[hit]
        m[live] = ml[hit] & ~violate[hit]
    q = np.cumsum(np.where(m, Qs, 0.0), axis=1)[:, -1] if width else np.zeros(Q.shape[0])
    d = np.cumsum(np.where(m, Ds, 0.0), axis=1)[:, -1] if width else np.zeros(Q.shape[0])
    mask[:, :width] = m
    out = np.zeros_like(mask)
    np.put_along_axis(out, order, mask, axis=1)
    return out, q, d


def solve_pair_direct(q_row: Sequence[float], d_row: Sequence[float], alpha: float) -> PairSolution:
    """Optimal value of the pair program by the removal sweep."""
    Q = np.asarray(q_row, dtype=float)
    D = np.asarray(d_row, dtype=float)
    if Q.ndim != 1 or Q.shape != D.shape:
        raise DimensionMismatch(f"row shapes differ: {Q.shape} vs {D.shape}")
    alpha = _check_alpha(alpha)
    mask, qs, ds = _removal_sweep(Q[None, :], D[None, :], alpha)
    selected = tuple(int(i) for i in np.flatnonzero(mask[0]))
    if not selected:
        return PairSolution(0.0, 0.0, 0.0, ())
    q, d = float(qs[0]), float(ds[0])
    return PairSolution(float(log_ratio(q, d, alpha)), q, d, selected)


def lfp_oracle(q_row: Sequence[float], d_row: Sequence[float], alpha: float) -> float:
    """Brute-force optimum over all ``2^n`` vertices ``x in {1, e^alpha}^n``.

    The objective is invariant to scaling ``x``, so the feasible set can be
    normalized to the box ``[1, e^alpha]^n``; a linear-fractional objective
    over a box attains its maximum at a vertex. Returns ``math.inf`` when
    some vertex makes ``d . x`` vanish while ``q . x`` stays positive.
    """
    Q = np.asarray(q_row, dtype=float)
    D = np.asarray(d_row, dtype=float)
    if Q.ndim != 1 or Q.shape != D.shape:
        raise DimensionMismatch(f"row shapes differ: {Q.shape} vs {D.shape}")
    n = Q.shape[0]
    if n > ORACLE_MAX_N:
        raise TooLarge(f"oracle enumerates 2^n vertices; n={n} exceeds {ORACLE_MAX_N}")
    alpha = _check_alpha(alpha)
    best = -math.inf
    bits = np.arange(n)
    for start in range(0, 1 << n, _ORACLE_CHUNK):
        codes = np.arange(start, min(start + _ORACLE_CHUNK, 1 << n))
        high = ((codes[:, None] >> bits) & 1).astype(bool)
        # log of (mass on e^alpha coordinates) * e^alpha + (mass on the rest)
        with np.errstate(divide="ignore"):
            num = np.logaddexp(np.log(np.where(high, Q, 0.0).sum(1)) + alpha,
                               np.log(np.where(high, 0.0, Q).sum(1)))
            den = np.logaddexp(np.log(np.where(high, D, 0.0).sum(1)) + alpha,
                               np.log(np.where(high, 0.0, D).sum(1)))
        if np.any(np.isneginf(den) & ~np.isneginf(num)):
            return math.inf
        ok = ~np.isneginf(den)
        if ok.any():
            best = max(best, float(np.max(num[ok] - den[ok])))
    return best


@functools.lru_cache(maxsize=32)
def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row indices ``(i, j)`` of all ``n(n-1)`` ordered pairs of distinct rows."""
    i, j = np.array(list(itertools.permutations(range(n), 2))).T
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def _pair_stack(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    i, j = pair_indices(P.shape[0])
    return P[i], P[j]


def loss_increment_direct(P: TransitionMatrix, alpha: float, epsilon_t: float = 0.0) -> float:
    """``L(alpha) + epsilon_t`` maximized over all ordered pairs of distinct rows."""
    alpha = _check_alpha(alpha)
    epsilon_t = float(epsilon_t)
    if epsilon_t < 0:
        raise NegativeAlpha(f"epsilon_t must be >= 0, got {epsilon_t!r}")
    Q, D = _pair_stack(P.p)
    mask, q, d = _removal_sweep(Q, D, alpha)
    values = np.where(mask.any(axis=1), log_ratio(q, d, alpha), 0.0)
    return float(max(values.max(), 0.0)) + epsilon_t
