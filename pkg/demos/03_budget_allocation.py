"""Choosing per-release budgets so total leakage stays at alpha = 1."""

from tplkit import TransitionMatrix, allocate_exact, allocate_upper_bound, quantify

backward = TransitionMatrix.from_rows([[0.8, 0.2], [0.1, 0.9]])
forward = TransitionMatrix.from_rows([[0.8, 0.2], [0.3, 0.7]], kind="forward")
alpha, T = 1.0, 10

upper = allocate_upper_bound(backward, forward, alpha)
exact = allocate_exact(backward, forward, alpha, T)

print("constant budget safe for any horizon:", round(float(upper.epsilons[0]), 6))
print("horizon-aware budgets:", [round(e, 6) for e in exact.epsilons.tolist()])
print()
print("t   tpl(upper)  tpl(exact)")
up_tl = quantify(backward, forward, upper.budgets(T))
ex_tl = quantify(backward, forward, exact.epsilons)
for t in range(T):
    print(f"{t + 1:<3} {up_tl.tpl[t]:.6f}    {ex_tl.tpl[t]:.6f}")
print("\nThe exact schedule spends the slack at both ends; the middle matches the constant budget.")
