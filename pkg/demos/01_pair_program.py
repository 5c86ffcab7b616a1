"""How one pair of rows turns previous leakage into extra leakage.

Rows q and d come from a backward transition matrix. An adversary who already
has leakage alpha about the previous step gains log(q.x / d.x) at most, over
vectors x whose entries differ by a factor of at most e^alpha.
"""

import math

from tplkit import TransitionMatrix, lfp_oracle, precompute_params, solve_pair_direct

q = [0.2, 0.3, 0.5]
d = [0.1, 0.0, 0.9]

print("alpha   sweep     brute force   selected coordinates")
for alpha in (0.1, 0.5, 1.0, 1.46, 1.47, 3.0):
    sol = solve_pair_direct(q, d, alpha)
    print(f"{alpha:5.2f}   {sol.value:.6f}  {lfp_oracle(q, d, alpha):.6f}      {sol.selected}")

# Coordinate 0 leaves the optimal set once alpha passes log(13/3).
params = precompute_params(TransitionMatrix.from_rows([q, d, [1 / 3, 1 / 3, 1 / 3]]))
print("\nthresholds for this pair:", params.aM[0].tolist())
print("log(13/3) =", math.log(13 / 3))
