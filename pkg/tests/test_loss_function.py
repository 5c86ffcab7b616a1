import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_matrix
from tplkit.errors import InvalidDomain, MalformedInput, NegativeAlpha, OutOfDomain
from tplkit.lfp_solver import loss_increment_direct, solve_pair_direct
from tplkit.loss_function import (
    PiecewiseLoss,
    envelope_definition,
    evaluate_loss_function,
    evaluate_precomputed,
    generate_loss_function,
    pair_function_values,
    precompute_params,
)
from tplkit.matrix_model import TransitionMatrix, gen_random_stochastic, gen_strongest, gen_uniform

# 3x3 matrix whose rows 0 and 1 are the worked-example pair
EXAMPLE = TransitionMatrix.from_rows([[0.2, 0.3, 0.5], [0.1, 0.0, 0.9], [0.3, 0.3, 0.4]])


def _pair_row(params, i, j, n):
    return [r for r, (a, b) in enumerate((a, b) for a in range(n) for b in range(n) if a != b) if (a, b) == (i, j)][0]


def test_worked_example_tables():
    params = precompute_params(EXAMPLE)
    r = _pair_row(params, 0, 1, 3)
    assert math.isinf(params.aM[r, 0])
    assert params.aM[r, 1] == pytest.approx(math.log(13 / 3), abs=1e-13)
    assert params.aM[r, 2] == 0.0
    np.testing.assert_allclose(params.qM[r], [0.3, 0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(params.dM[r], [0.0, 0.1, 0.1], atol=1e-15)


def test_tables_are_read_only():
    params = precompute_params(EXAMPLE)
    with pytest.raises(ValueError):
        params.aM[0, 0] = 1.0


def test_threshold_rows_non_increasing():
    params = precompute_params(gen_random_stochastic(12, 5))
    assert np.all(np.diff(params.aM, axis=1) <= 0)


def test_trivial_matrix():
    params = precompute_params(gen_uniform(4))
    assert params.trivial
    assert evaluate_precomputed(params, 3.0, 0.25) == 0.25
    plf = generate_loss_function(gen_uniform(4), 1e-9, 10.0)
    assert plf.trivial and plf(50.0) == 0.0


def test_identity_loss_is_alpha():
    plf = generate_loss_function(gen_strongest(3), 1e-9, 5.0)
    assert evaluate_precomputed(precompute_params(gen_strongest(3)), 2.0) == 2.0
    assert plf(2.0) == pytest.approx(2.0, abs=1e-15)
    assert plf.coeffs == [(1.0, 0.0)]


def test_envelope_is_continuous_at_breakpoints():
    from tplkit._numerics import log_ratio_scalar

    plf = generate_loss_function(gen_random_stochastic(8, 3), 1e-9, 30.0)
    assert len(plf.segments) > 1
    for left, right in zip(plf.segments, plf.segments[1:]):
        a = left.hi
        assert log_ratio_scalar(left.q, left.d, a) == pytest.approx(log_ratio_scalar(right.q, right.d, a), abs=1e-12)


def test_envelope_definition_matches_piecewise():
    plf = generate_loss_function(EXAMPLE, 1e-9, 10.0)
    for a in (0.5, 1.9, 2.1, 9.0):
        v, q, d = envelope_definition(precompute_params(EXAMPLE), a)
        assert v == pytest.approx(plf(a), abs=1e-15)


def test_out_of_domain_and_negative_alpha():
    plf = generate_loss_function(EXAMPLE, 1e-9, 2.0)
    with pytest.raises(OutOfDomain):
        plf(2.5)
    with pytest.raises(NegativeAlpha):
        evaluate_loss_function(plf, -1.0)
    with pytest.raises(NegativeAlpha):
        evaluate_precomputed(precompute_params(EXAMPLE), -1e-3)


@pytest.mark.parametrize("lo, hi", [(0.0, 1.0), (2.0, 1.0), (1e-9, math.inf)])
def test_invalid_domain(lo, hi):
    with pytest.raises(InvalidDomain):
        generate_loss_function(EXAMPLE, lo, hi)


def test_json_round_trip():
    plf = generate_loss_function(gen_random_stochastic(6, 1), 1e-9, 20.0)
    back = PiecewiseLoss.from_json(plf.to_json())
    assert back == plf
    assert json.loads(plf.to_json())["a_max"] == 20.0


@pytest.mark.parametrize("doc", ["{", '{"segments": []}', '{"a_max": 1, "segments": [{"hi": 1}]}'])
def test_bad_loss_documents(doc):
    with pytest.raises(MalformedInput):
        PiecewiseLoss.from_json(doc)


def test_pair_values_match_direct_solver():
    m = gen_random_stochastic(5, 9)
    params = precompute_params(m)
    grid = [0.0, 0.3, 2.0, 7.5]
    vals = pair_function_values(params, grid)
    pairs = [(a, b) for a in range(5) for b in range(5) if a != b]
    for k, alpha in enumerate(grid):
        for r, (a, b) in enumerate(pairs):
            assert vals[k, r] == pytest.approx(solve_pair_direct(m.p[a], m.p[b], alpha).value, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 9), sparsity=st.sampled_from([0.0, 0.4]),
       alpha=st.floats(0, 120))
def test_three_paths_agree_including_large_alpha(seed, n, sparsity, alpha):
    m = random_matrix(np.random.default_rng(seed), n, sparsity)
    params = precompute_params(m)
    plf = generate_loss_function(m, 1e-9, 120.0, params)
    want = loss_increment_direct(m, alpha)
    assert evaluate_precomputed(params, alpha) == pytest.approx(want, abs=1e-9)
    assert plf(alpha) == pytest.approx(want, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 8))
def test_loss_is_monotone_and_bounded(seed, n):
    params = precompute_params(random_matrix(np.random.default_rng(seed), n))
    grid = np.linspace(0, 15, 61)
    vals = np.array([evaluate_precomputed(params, a) for a in grid])
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all(vals <= grid + 1e-12)
    assert np.all(vals >= 0)
