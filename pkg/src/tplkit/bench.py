"""Desk-scale experiment harness: runtimes, smoothing sweeps, utility.

Each function returns a list of flat dict rows ready for CSV output. Timings
wrap only the library calls with ``time.perf_counter``.
"""

from __future__ import annotations

import time
from typing import Callable, Iterable, Sequence

import numpy as np

from tplkit.allocation import allocate_exact, allocate_upper_bound, expected_noise_magnitude
from tplkit.leakage import DEFAULT_A_LO, bpl_timeline
from tplkit.lfp_solver import loss_increment_direct
from tplkit.loss_function import (
    evaluate_loss_function,
    evaluate_precomputed,
    generate_loss_function,
    precompute_params,
)
from tplkit.matrix_model import gen_random_stochastic, gen_strongest, laplacian_smooth

S_GRID = (0.005, 0.01, 0.05, 0.1, 0.5, 1.0)


def mean_time(fn: Callable[[], object], reps: int) -> float:
    """Mean wall time of ``fn()`` over ``reps`` runs."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    total = 0.0
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        total += time.perf_counter() - start
    return total / reps


def per_step_times(M, alphas: Iterable[float], reps: int, a_max: float) -> list[dict]:
    params = precompute_params(M)
    plf = generate_loss_function(M, DEFAULT_A_LO, a_max, params)
    rows = []
    for alpha in alphas:
        for algo, fn in (
            ("direct", lambda: loss_increment_direct(M, alpha)),
            ("precomp", lambda: evaluate_precomputed(params, alpha)),
            ("piecewise", lambda: evaluate_loss_function(plf, alpha)),
        ):
            rows.append({"algo": algo, "n": M.n, "alpha": alpha, "seconds": mean_time(fn, reps)})
    return rows


def total_time(M, T: int, eps: float, algo: str) -> float:
    """Wall time of precomputation plus a ``T``-step backward timeline."""
    start = time.perf_counter()
    epsilons = np.full(T, eps)
    if algo == "direct":
        bpl_timeline(M, epsilons, "direct")
    elif algo == "precomp":
        bpl_timeline(precompute_params(M), epsilons, "precomp")
    else:
        params = precompute_params(M)
        plf = generate_loss_function(M, DEFAULT_A_LO, (T + 1) * eps, params)
        bpl_timeline(plf, epsilons)
    return time.perf_counter() - start


def runtime_rows(
    ns: Sequence[int],
    Ts: Sequence[int],
    reps: int = 3,
    eps: float = 0.1,
    alphas: Sequence[float] = (0.1, 1.0, 10.0),
    a_maxes: Sequence[float] = (1.0, 10.0),
    seed: int = 0,
) -> list[dict]:
    """Four panels: per-step vs n, precomputation vs n, total vs T, per-step vs alpha."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rows = []
    for n in ns:
        M = gen_random_stochastic(n, seed)
        for r in per_step_times(M, [eps], reps, a_max=max(a_maxes)):
            rows.append({"panel": "per_step_vs_n", "T": "", "a_max": max(a_maxes), **r})
        rows.append({"panel": "precompute_vs_n", "algo": "precompute_params", "n": n, "alpha": "",
                     "T": "", "a_max": "", "seconds": mean_time(lambda: precompute_params(M), reps)})
        params = precompute_params(M)
        for a_max in a_maxes:
            sec = mean_time(lambda: generate_loss_function(M, DEFAULT_A_LO, a_max, params), reps)
            rows.append({"panel": "precompute_vs_n", "algo": "generate_loss_function", "n": n,
                         "alpha": "", "T": "", "a_max": a_max, "seconds": sec})
        for T in Ts:
            for algo in ("direct", "precomp", "piecewise"):
                # one run at long horizons keeps the direct path affordable
                k = reps if T <= 100 else 1
                sec = sum(total_time(M, T, eps, algo) for _ in range(k)) / k
                rows.append({"panel": "total_vs_T", "algo": algo, "n": n, "alpha": eps, "T": T,
                             "a_max": (T + 1) * eps if algo == "piecewise" else "", "seconds": sec})
        for r in per_step_times(M, alphas, reps, a_max=max(alphas)):
            rows.append({"panel": "per_step_vs_alpha", "T": "", "a_max": max(alphas), **r})
    return rows


def s_sweep_rows(
    ns: Sequence[int] = (50, 200),
    epsilons: Sequence[float] = (0.1, 1.0),
    s_values: Sequence[float] = S_GRID,
    T: int = 100,
) -> list[dict]:
    """Backward leakage curves for smoothed identity matrices."""
    rows = []
    for n in ns:
        for s in s_values:
            params = precompute_params(laplacian_smooth(gen_strongest(n), s))
            for eps in epsilons:
                bpl = bpl_timeline(params, np.full(T, eps))
                rows.extend({"s": s, "n": n, "eps": eps, "t": t, "bpl": v} for t, v in enumerate(bpl, 1))
    return rows


def sample_laplace_magnitude(scale: np.ndarray, draws: int, seed: int) -> np.ndarray:
    """Monte Carlo mean of ``|Laplace(0, scale)|`` per entry."""
    rng = np.random.default_rng(seed)
    noise = rng.laplace(0.0, 1.0, size=(draws, len(scale)))
    return np.abs(noise).mean(axis=0) * scale


def utility_rows(
    n: int = 10,
    alpha: float = 2.0,
    Ts: Sequence[int] = (2, 5, 10, 20, 50),
    s_values: Sequence[float] = (0.01, 0.1, 1.0),
    sensitivity: float = 1.0,
    draws: int = 2000,
    seed: int = 0,
) -> list[dict]:
    """Mean absolute Laplace noise of both strategies versus horizon and smoothing."""
    rows = []
    for s in s_values:
        params = precompute_params(laplacian_smooth(gen_strongest(n), s))
        upper = allocate_upper_bound(params, params, alpha)
        for T in Ts:
            for name, sched in (("upper_bound", upper), ("exact", allocate_exact(params, params, alpha, T))):
                expected = expected_noise_magnitude(sched, sensitivity, T)
                sampled = sample_laplace_magnitude(sensitivity / sched.budgets(T if sched.T is None else None),
                                                   draws, seed)
                rows.append({"s": s, "n": n, "T": T, "strategy": name,
                             "expected_noise": float(expected.mean()),
                             "sampled_noise": float(sampled.mean()),
                             "baseline": sensitivity / alpha})
    return rows
