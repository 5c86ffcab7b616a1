"""Backward, forward and total leakage over a release timeline.

With per-step budgets ``eps[1..T]`` and loss functions ``L_B``, ``L_F``:

    bpl[1] = eps[1],  bpl[t] = L_B(bpl[t-1]) + eps[t]
    fpl[T] = eps[T],  fpl[t] = L_F(fpl[t+1]) + eps[t]
    tpl[t] = bpl[t] + fpl[t] - eps[t]

A missing matrix (``None``) means no correlation on that side, ``L = 0``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from tplkit._numerics import format_real
from tplkit.errors import (
    DomainError,
    IndexOutOfRange,
    LengthMismatch,
    NonPositiveEpsilon,
)
from tplkit.lfp_solver import loss_increment_direct
from tplkit.loss_function import (
    PiecewiseLoss,
    PrecomputedParams,
    evaluate_loss_function,
    evaluate_precomputed,
    generate_loss_function,
    precompute_params,
)
from tplkit.matrix_model import TransitionMatrix

LossSource = Union[None, TransitionMatrix, PrecomputedParams, PiecewiseLoss]
ALGOS = ("direct", "precomp", "piecewise")
DEFAULT_A_LO = 1e-9
# How far above a finite supremum the default piecewise cap is placed.
_CAP_SLACK = 1e-9

CONVERGENCE_TOL = 1e-9
MAX_ITERATIONS = 10**6


@dataclass(frozen=True)
class Supremum:
    """Limit of the leakage recursion under a constant budget, possibly ``inf``."""

    value: float
    witness_q: float
    witness_d: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def candidate_supremum(q: float, d: float, epsilon: float) -> float:
    """Fixed point of ``a = log((q(e^a - 1) + 1) / (d(e^a - 1) + 1)) + epsilon``.

    ``e^a`` is the positive root of ``d F^2 - (q e^eps + d - 1) F - e^eps (1 - q) = 0``.
    """
    if q == d:
        return epsilon
    e = math.exp(epsilon)
    if d > 0:
        b = d + q * e - 1.0
        c = e * (1.0 - q)
        s = math.sqrt(4.0 * d * c + b * b)
        # pick the cancellation-free form of the positive root
        # in logs: a subnormal d would overflow the root itself
        if b >= 0:
            return math.log(s + b) - math.log(2.0 * d)
        return math.log(2.0 * c) - math.log(s - b)
    if q >= 1.0 or epsilon >= -math.log(q):
        return math.inf
    return math.log((1.0 - q) * e / (1.0 - q * e))


def _as_params(source) -> PrecomputedParams:
    if isinstance(source, PrecomputedParams):
        return source
    if isinstance(source, TransitionMatrix):
        return precompute_params(source)
    raise TypeError(f"expected a TransitionMatrix or PrecomputedParams, got {type(source).__name__}")


def supremum(params: Union[PrecomputedParams, TransitionMatrix], epsilon: float) -> Supremum:
    """Largest candidate fixed point over every active ``(q, d)`` prefix pair."""
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise NonPositiveEpsilon(f"epsilon must be > 0, got {epsilon!r}")
    params = _as_params(params)
    best = Supremum(epsilon, 0.0, 0.0)
    qs, ds = params.candidates()
    for q, d in zip(qs.tolist(), ds.tolist()):
        value = candidate_supremum(q, d, epsilon)
        if value > best.value:
            best = Supremum(value, q, d)
            if best.is_infinite:
                break
    return best


def default_a_max(source: LossSource, epsilons: Sequence[float]) -> float:
    """Cap for a generated loss function that covers every recursion input.

    The side supremum at ``max(eps)`` bounds every step; when it is infinite
    the worst case ``(T + 1) * max(eps)`` is used instead.
    """
    eps = np.asarray(epsilons, dtype=float)
    top = float(eps.max()) if eps.size else 0.0
    if top <= 0:
        return DEFAULT_A_LO
    if isinstance(source, PiecewiseLoss) or source is None:
        return (eps.size + 1) * top
    sup = supremum(_as_params(source), top)
    if sup.is_infinite:
        return (eps.size + 1) * top
    return max(sup.value * (1 + _CAP_SLACK) + _CAP_SLACK, DEFAULT_A_LO)


def loss_evaluator(
    source: LossSource,
    algo: str = "precomp",
    a_max: Optional[float] = None,
    epsilons: Optional[Sequence[float]] = None,
) -> Callable[[float], float]:
    """Return ``alpha -> L(alpha)`` for ``source`` using the chosen algorithm.

    ``algo`` is ``"direct"`` (per-call removal sweep), ``"precomp"`` (table
    lookup) or ``"piecewise"`` (envelope bisection). A ``PiecewiseLoss``
    source is always evaluated directly; a ``PrecomputedParams`` source
    cannot run the direct sweep.
    """
    if algo not in ALGOS:
        raise DomainError(f"unknown algorithm {algo!r}; choose from {ALGOS}")
    if source is None:
        return lambda alpha: 0.0
    if isinstance(source, PiecewiseLoss):
        return lambda alpha: evaluate_loss_function(source, alpha)
    if algo == "direct":
        if not isinstance(source, TransitionMatrix):
            raise TypeError("the direct algorithm needs the transition matrix itself")
        return lambda alpha: loss_increment_direct(source, alpha)
    params = _as_params(source)
    if algo == "precomp":
        return lambda alpha: evaluate_precomputed(params, alpha)
    if a_max is None:
        a_max = default_a_max(params, epsilons if epsilons is not None else [])
    plf = generate_loss_function(None, DEFAULT_A_LO, max(a_max, DEFAULT_A_LO), params)
    return lambda alpha: evaluate_loss_function(plf, alpha)


def _check_epsilons(epsilons) -> np.ndarray:
    eps = np.asarray(epsilons, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise DomainError("epsilons must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(eps)) or np.any(eps < 0):
        raise DomainError("every epsilon must be finite and >= 0")
    return eps


def _run(loss: Callable[[float], float], eps: np.ndarray) -> np.ndarray:
    out = np.empty_like(eps)
    out[0] = eps[0]
    prev = float(eps[0])
    for t in range(1, eps.size):
        prev = loss(prev) + float(eps[t])
        out[t] = prev
    return out


def bpl_timeline(
    lossB: LossSource, epsilons: Sequence[float], algo: str = "precomp", a_max: Optional[float] = None
) -> np.ndarray:
    """Backward leakage ``bpl[t]`` for ``t = 1..T`` (0-based array)."""
    eps = _check_epsilons(epsilons)
    return _run(loss_evaluator(lossB, algo, a_max, eps), eps)


def fpl_timeline(
    lossF: LossSource, epsilons: Sequence[float], algo: str = "precomp", a_max: Optional[float] = None
) -> np.ndarray:
    """Forward leakage; the whole horizon is recomputed on every call."""
    eps = _check_epsilons(epsilons)
    return _run(loss_evaluator(lossF, algo, a_max, eps), eps[::-1])[::-1].copy()


def tpl_timeline(bpl, fpl, epsilons) -> np.ndarray:
    bpl, fpl, eps = (np.asarray(x, dtype=float) for x in (bpl, fpl, epsilons))
    if not (bpl.shape == fpl.shape == eps.shape):
        raise LengthMismatch(f"lengths differ: bpl {bpl.shape}, fpl {fpl.shape}, eps {eps.shape}")
    return bpl + fpl - eps


@dataclass(frozen=True, eq=False)
class LeakageTimeline:
    epsilons: np.ndarray
    bpl: np.ndarray
    fpl: np.ndarray
    tpl: np.ndarray

    @property
    def T(self) -> int:
        return int(self.epsilons.size)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,epsilon,bpl,fpl,tpl\n")
        for t, row in enumerate(zip(self.epsilons, self.bpl, self.fpl, self.tpl), start=1):
            buf.write(f"{t}," + ",".join(format_real(v) for v in row) + "\n")
        return buf.getvalue()


def quantify(
    backward: LossSource,
    forward: LossSource,
    epsilons: Sequence[float],
    algo: str = "precomp",
    a_max: Optional[float] = None,
) -> LeakageTimeline:
    """Full BPL/FPL/TPL timeline for one user."""
    eps = _check_epsilons(epsilons)
    bpl = bpl_timeline(backward, eps, algo, a_max)
    fpl = fpl_timeline(forward, eps, algo, a_max)
    return LeakageTimeline(eps, bpl, fpl, tpl_timeline(bpl, fpl, eps))


def compose_sequence(timeline: LeakageTimeline, t: int, j: int) -> float:
    """Leakage of the combined mechanisms released at steps ``t..t+j`` (1-based)."""
    T = timeline.T
    if not (isinstance(t, (int, np.integer)) and isinstance(j, (int, np.integer))):
        raise IndexOutOfRange("t and j must be integers")
    if not (1 <= t <= t + j <= T) or j < 0:
        raise IndexOutOfRange(f"need 1 <= t <= t+j <= T={T}, got t={t}, j={j}")
    i = t - 1
    if j == 0:
        return float(timeline.tpl[i])
    return float(timeline.bpl[i] + timeline.fpl[i + j] + timeline.epsilons[i + 1 : i + j].sum())


def iterate_to_supremum(
    loss: Callable[[float], float],
    epsilon: float,
    tol: float = CONVERGENCE_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> tuple[float, int]:
    """Run ``a <- L(a) + epsilon`` from ``epsilon`` until steps shrink below ``tol``.

    Returns ``(value, iterations)``; ``value`` is ``inf`` if ``max_iter`` is
    hit while still moving.
    """
    a = float(epsilon)
    for it in range(1, max_iter + 1):
        nxt = loss(a) + epsilon
        if abs(nxt - a) <= tol:
            return nxt, it
        a = nxt
    return math.inf, max_iter
