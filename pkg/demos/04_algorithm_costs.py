"""Per-step cost of the three loss evaluators on a random 60-state chain."""

import time

from tplkit import (
    evaluate_loss_function,
    evaluate_precomputed,
    gen_random_stochastic,
    generate_loss_function,
    loss_increment_direct,
    precompute_params,
)

m = gen_random_stochastic(60, seed=1)

start = time.perf_counter()
params = precompute_params(m)
t_pre = time.perf_counter() - start
start = time.perf_counter()
plf = generate_loss_function(m, 1e-9, 10.0, params)
t_gen = time.perf_counter() - start
print(f"precompute tables: {t_pre * 1e3:.1f} ms, envelope ({len(plf.segments)} segments): {t_gen * 1e3:.1f} ms\n")

for name, fn in (
    ("direct sweep", lambda a: loss_increment_direct(m, a)),
    ("table lookup", lambda a: evaluate_precomputed(params, a)),
    ("piecewise", lambda a: evaluate_loss_function(plf, a)),
):
    start = time.perf_counter()
    value = [fn(a) for a in (0.1, 1.0, 5.0)]
    per_call = (time.perf_counter() - start) / 3
    print(f"{name:<13} {per_call * 1e6:10.1f} us/call   L(1.0) = {value[1]:.12f}")
