"""Per-step budget allocation for a target total-leakage level ``alpha``.

Two strategies:

* :func:`allocate_upper_bound` picks one constant budget whose leakage
  suprema satisfy ``sup_B + sup_F - eps = alpha``; it holds for any horizon.
* :func:`allocate_exact` fixes the horizon ``T`` and spends more at the two
  ends so that the total leakage equals ``alpha`` at every step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from tplkit._numerics import format_real
from tplkit.errors import (
    ComputationError,
    DomainError,
    InfeasibleMid,
    NoConvergence,
    NonPositiveSensitivity,
    Unachievable,
)
from tplkit.leakage import LossSource, _as_params, loss_evaluator, quantify, supremum
from tplkit.loss_function import PrecomputedParams
from tplkit.matrix_model import TransitionMatrix

SEARCH_TOL = 1e-9
MAX_BISECTIONS = 200
VERIFY_TOL = 1e-6
DEFAULT_PROBE_T = 100


@dataclass(frozen=True, eq=False)
class BudgetSchedule:
    """Budgets produced by an allocation strategy.

    ``T`` is ``None`` for the horizon-free upper-bound strategy, whose
    ``epsilons`` then holds the single constant budget. ``achieved`` is the
    total leakage recomputed over ``T`` (or a probe horizon).
    """

    T: Optional[int]
    epsilons: np.ndarray
    target_alpha: float
    strategy: str
    achieved: np.ndarray

    def budgets(self, T: Optional[int] = None) -> np.ndarray:
        """Per-step budgets for horizon ``T`` (defaults to the schedule's own)."""
        if self.T is None:
            if T is None:
                raise DomainError("an unbounded schedule needs an explicit horizon")
            return np.full(int(T), float(self.epsilons[0]))
        if T is not None and T != self.T:
            raise DomainError(f"schedule was built for T={self.T}, not {T}")
        return self.epsilons.copy()

    def to_csv(self, T: Optional[int] = None) -> str:
        """``t,epsilon`` lines; unbounded schedules default to the probe horizon."""
        if self.T is None and T is None:
            T = len(self.achieved)
        rows = self.budgets(T)
        return "".join(f"{t},{format_real(e)}\n" for t, e in enumerate(rows, start=1))

    def to_dict(self) -> dict:
        return {
            "T": "unbounded" if self.T is None else self.T,
            "strategy": self.strategy,
            "target_alpha": self.target_alpha,
            "epsilons": self.epsilons.tolist(),
            "achieved": self.achieved.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"target alpha must be a positive finite real, got {alpha!r}")
    return alpha


def _side_supremum(source, eps: float) -> float:
    if source is None:
        return eps
    return supremum(source, eps).value


def _always_infinite(source) -> bool:
    # a (q, d) = (1, 0) candidate makes the loss the identity map
    if source is None:
        return False
    qs, ds = source.candidates()
    return bool(np.any((ds == 0) & (qs >= 1.0 - 1e-12)))


def tpl_supremum(sourceB, sourceF, eps: float) -> float:
    """Supremum of total leakage under the constant budget ``eps``."""
    return _side_supremum(sourceB, eps) + _side_supremum(sourceF, eps) - eps


def allocate_upper_bound(
    paramsB: Union[None, TransitionMatrix, PrecomputedParams],
    paramsF: Union[None, TransitionMatrix, PrecomputedParams],
    alpha: float,
    probe_T: int = DEFAULT_PROBE_T,
) -> BudgetSchedule:
    """Constant budget whose leakage never exceeds ``alpha`` at any horizon."""
    alpha = _check_alpha(alpha)
    pB = None if paramsB is None else _as_params(paramsB)
    pF = None if paramsF is None else _as_params(paramsF)
    for side, p in (("backward", pB), ("forward", pF)):
        if _always_infinite(p):
            raise Unachievable(f"{side} correlation makes leakage unbounded for every budget > 0")

    def excess(e):
        return tpl_supremum(pB, pF, e) - alpha

    if excess(alpha) <= SEARCH_TOL:
        eps = alpha
    else:
        lo, hi = 0.0, alpha
        for _ in range(MAX_BISECTIONS):
            mid = 0.5 * (lo + hi)
            if excess(mid) > 0:
                hi = mid
            else:
                lo = mid
            if lo > 0 and -excess(lo) <= SEARCH_TOL:
                break
        else:
            raise NoConvergence(f"no constant budget found for alpha={alpha!r}")
        eps = lo
    achieved = quantify(pB, pF, np.full(probe_T, eps)).tpl
    return BudgetSchedule(None, np.array([eps]), alpha, "upper_bound", achieved)


def allocate_exact(
    lossB: LossSource,
    lossF: LossSource,
    alpha: float,
    T: int,
    algo: str = "precomp",
) -> BudgetSchedule:
    """Budgets for horizon ``T`` with total leakage exactly ``alpha`` at every step.

    Solves for the end-point leakages ``aB``, ``aF`` with
    ``L_B(aB) + aF = alpha`` and ``L_F(aF) + aB = alpha``, then spends
    ``aB`` first, ``aF`` last and ``aB + aF - alpha`` in between.
    """
    alpha = _check_alpha(alpha)
    if not (isinstance(T, (int, np.integer)) and T >= 1):
        raise DomainError(f"T must be an integer >= 1, got {T!r}")
    if T == 1:
        eps = np.array([alpha])
        return BudgetSchedule(1, eps, alpha, "exact", quantify(None, None, eps).tpl)

    LB = loss_evaluator(lossB, algo, a_max=alpha)
    LF = loss_evaluator(lossF, algo, a_max=alpha)

    def gap(aB):
        aF = alpha - LB(aB)
        return LF(aF) + aB - alpha, aF

    # increasing in aB: negative near 0, non-negative at alpha
    lo, hi = 0.0, alpha
    aB = 0.5 * alpha
    for _ in range(MAX_BISECTIONS):
        g, aF = gap(aB)
        if abs(g) <= SEARCH_TOL:
            break
        if g < 0:
            lo = aB
        else:
            hi = aB
        aB = 0.5 * (lo + hi)
    else:
        raise NoConvergence(f"end-point budgets did not converge for alpha={alpha!r}, T={T}")

    mid = aB + aF - alpha
    if T > 2 and mid <= 0:
        raise InfeasibleMid(f"middle budget {mid!r} is not positive; correlations too strong for exact allocation")
    eps = np.concatenate([[aB], np.full(T - 2, mid), [aF]])
    achieved = quantify(lossB, lossF, eps, algo).tpl
    if np.max(np.abs(achieved - alpha)) > VERIFY_TOL:
        raise ComputationError(
            f"verification failed: total leakage deviates from {alpha!r} by {np.max(np.abs(achieved - alpha))!r}"
        )
    return BudgetSchedule(T, eps, alpha, "exact", achieved)


def expected_noise_magnitude(
    schedule: BudgetSchedule, sensitivity: float, T: Optional[int] = None
) -> np.ndarray:
    """Mean absolute Laplace noise ``sensitivity / eps_t`` per step."""
    sensitivity = float(sensitivity)
    if not (sensitivity > 0 and math.isfinite(sensitivity)):
        raise NonPositiveSensitivity(f"sensitivity must be > 0, got {sensitivity!r}")
    if schedule.T is None and T is None:
        T = len(schedule.achieved)
    eps = schedule.budgets(T if schedule.T is None else None)
    if np.any(eps <= 0):
        raise DomainError("budgets must be positive")
    return sensitivity / eps
