"""Temporal privacy leakage accounting for continuous differentially private releases.

Quantifies backward, forward and total leakage when a user's successive
records follow a Markov chain, and allocates per-step budgets that keep the
total leakage at a target level.
"""

from tplkit.allocation import (
    BudgetSchedule,
    allocate_exact,
    allocate_upper_bound,
    expected_noise_magnitude,
    tpl_supremum,
)
from tplkit.errors import TplError
from tplkit.leakage import (
    LeakageTimeline,
    Supremum,
    bpl_timeline,
    compose_sequence,
    fpl_timeline,
    quantify,
    supremum,
    tpl_timeline,
)
from tplkit.lfp_solver import PairSolution, lfp_oracle, loss_increment_direct, solve_pair_direct
from tplkit.loss_function import (
    PiecewiseLoss,
    PrecomputedParams,
    evaluate_loss_function,
    evaluate_precomputed,
    generate_loss_function,
    precompute_params,
)
from tplkit.matrix_model import (
    Kind,
    TransitionMatrix,
    gen_random_stochastic,
    gen_strongest,
    gen_uniform,
    laplacian_smooth,
    parse_matrix,
    serialize_matrix,
)

__version__ = "0.1.0"
