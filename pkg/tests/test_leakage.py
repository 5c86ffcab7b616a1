import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_matrix
from tplkit.errors import DomainError, IndexOutOfRange, LengthMismatch, NonPositiveEpsilon
from tplkit.leakage import (
    candidate_supremum,
    compose_sequence,
    default_a_max,
    fpl_timeline,
    iterate_to_supremum,
    loss_evaluator,
    quantify,
    supremum,
    tpl_timeline,
)
from tplkit.loss_function import generate_loss_function, precompute_params
from tplkit.matrix_model import TransitionMatrix, gen_strongest, gen_uniform


def loss_2x2(p, alpha):
    """Closed form for two states: only the dominating column of each ordered pair counts."""
    y = math.expm1(alpha)
    a, b = p[0][0], p[1][0]
    hi, lo = max(a, b), min(a, b)
    return max(math.log((hi * y + 1) / (lo * y + 1)), math.log(((1 - lo) * y + 1) / ((1 - hi) * y + 1)))


def test_two_state_timeline_matches_closed_form(asym_pair):
    B, F = asym_pair
    eps = [0.1, 0.3, 0.2, 0.1, 0.4]
    tl = quantify(B, F, eps)
    b = [eps[0]]
    for e in eps[1:]:
        b.append(loss_2x2(B.rows, b[-1]) + e)
    f = [eps[-1]]
    for e in reversed(eps[:-1]):
        f.append(loss_2x2(F.rows, f[-1]) + e)
    f.reverse()
    np.testing.assert_allclose(tl.bpl, b, atol=1e-13)
    np.testing.assert_allclose(tl.fpl, f, atol=1e-13)
    np.testing.assert_allclose(tl.tpl, np.array(b) + f - eps, atol=1e-13)


# frozen from the closed form above
def test_frozen_constant_budget_timeline(asym_pair):
    tl = quantify(*asym_pair, [0.1] * 5)
    np.testing.assert_allclose(
        tl.bpl, [0.1, 0.17032186193696894, 0.22010117373666782, 0.2554647992425262, 0.28063733978385574], atol=1e-12)
    np.testing.assert_allclose(
        tl.fpl, [0.19487980445070682, 0.18839175015687262, 0.17557118085920906, 0.15021976398445414, 0.1], atol=1e-12)


def test_identity_and_uniform_timelines():
    eps = [0.1] * 10
    tl = quantify(gen_strongest(3), gen_strongest(3, "forward"), eps)
    assert tl.bpl[-1] == pytest.approx(1.0, abs=1e-12) and tl.fpl[0] == pytest.approx(1.0, abs=1e-12)
    u = quantify(gen_uniform(3), gen_uniform(3), eps)
    assert np.all(u.tpl == 0.1)


def test_missing_matrix_means_no_correlation():
    tl = quantify(None, None, [0.2, 0.5])
    assert tl.bpl.tolist() == [0.2, 0.5] and tl.tpl.tolist() == [0.2, 0.5]


@pytest.mark.parametrize("algo", ["direct", "precomp", "piecewise"])
def test_algorithms_give_identical_csv(asym_pair, algo):
    ref = quantify(*asym_pair, [0.1] * 30, "precomp").to_csv()
    assert quantify(*asym_pair, [0.1] * 30, algo).to_csv() == ref


def test_csv_layout(asym_pair):
    lines = quantify(*asym_pair, [0.1, 0.2]).to_csv().splitlines()
    assert lines[0] == "t,epsilon,bpl,fpl,tpl"
    assert lines[1].startswith("1,0.1,0.1,")
    assert lines[2].startswith("2,0.2,")


def test_bad_epsilons_and_algo(asym_pair):
    with pytest.raises(DomainError):
        quantify(*asym_pair, [])
    with pytest.raises(DomainError):
        quantify(*asym_pair, [0.1, -0.1])
    with pytest.raises(DomainError):
        quantify(*asym_pair, [0.1], "fast")
    with pytest.raises(LengthMismatch):
        tpl_timeline([0.1], [0.1, 0.2], [0.1])


def test_zero_budget_step_allowed(asym_pair):
    tl = quantify(*asym_pair, [0.1, 0.0, 0.1])
    assert tl.bpl[1] == pytest.approx(loss_2x2(asym_pair[0].rows, 0.1), abs=1e-13)


def test_piecewise_source_used_as_is(asym_pair):
    plf = generate_loss_function(asym_pair[1], 1e-9, 5.0)
    np.testing.assert_allclose(fpl_timeline(plf, [0.1] * 8), fpl_timeline(asym_pair[1], [0.1] * 8), atol=1e-12)


def test_direct_needs_matrix(asym_pair):
    with pytest.raises(TypeError):
        loss_evaluator(precompute_params(asym_pair[0]), "direct")


def test_candidate_supremum_closed_forms():
    assert candidate_supremum(0.8, 0.0, 0.1) == pytest.approx(0.6459066160576815, abs=1e-14)
    # d = 0 and eps >= log(1/q) diverges
    assert math.isinf(candidate_supremum(0.5, 0.0, math.log(2)))
    assert math.isinf(candidate_supremum(1.0, 0.0, 0.01))
    assert candidate_supremum(0.4, 0.4, 0.3) == 0.3


@settings(max_examples=200, deadline=None)
# d stays normal: with a subnormal d the check itself loses precision in e^-s
@given(q=st.floats(0.01, 1.0), d=st.one_of(st.just(0.0), st.floats(1e-12, 0.99)), eps=st.floats(0.01, 3.0))
def test_candidate_supremum_is_fixed_point(q, d, eps):
    if d >= q:
        d, q = q * 0.5, q
    s = candidate_supremum(q, d, eps)
    if math.isinf(s):
        assert d == 0
        return
    r = math.exp(-s)
    # the e^-s scaled objective stays finite when s is large
    f = math.log(q + (1 - q) * r) - math.log(d + (1 - d) * r) + eps
    assert f == pytest.approx(s, abs=1e-9 * max(1.0, s))


def test_supremum_two_state(two_state):
    sup = supremum(two_state, 0.1)
    assert sup.value == pytest.approx(0.24877183496552668, abs=1e-12)
    assert (sup.witness_q, sup.witness_d) == (0.8, 0.2)
    value, _ = iterate_to_supremum(lambda a: loss_2x2(two_state.rows, a), 0.1)
    assert value == pytest.approx(sup.value, abs=1e-7)


def test_supremum_identity_is_infinite():
    assert supremum(gen_strongest(4), 0.5).is_infinite
    assert supremum(gen_uniform(4), 0.5).value == 0.5


def test_supremum_rejects_nonpositive_eps(two_state):
    with pytest.raises(NonPositiveEpsilon):
        supremum(two_state, 0.0)


def test_default_cap_covers_timeline(two_state):
    cap = default_a_max(two_state, [0.1] * 50)
    tl = quantify(two_state, two_state, [0.1] * 500, "piecewise")
    assert tl.bpl.max() <= cap
    assert default_a_max(gen_strongest(2), [0.1] * 9) == pytest.approx(1.0)


def test_compose_sequence_rules(asym_pair):
    eps = [0.1, 0.2, 0.3, 0.4]
    tl = quantify(*asym_pair, eps)
    assert compose_sequence(tl, 2, 0) == tl.tpl[1]
    assert compose_sequence(tl, 1, 3) == pytest.approx(tl.bpl[0] + tl.fpl[3] + 0.5, abs=1e-15)
    for t, j in [(0, 1), (3, 2), (1, -1), (1.0, 1)]:
        with pytest.raises(IndexOutOfRange):
            compose_sequence(tl, t, j)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 6), T=st.integers(2, 30))
def test_whole_horizon_composes_to_sum(seed, n, T):
    rng = np.random.default_rng(seed)
    eps = rng.uniform(0.01, 1.0, size=T)
    tl = quantify(random_matrix(rng, n), random_matrix(rng, n), eps)
    assert compose_sequence(tl, 1, T - 1) == pytest.approx(eps.sum(), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 6), T=st.integers(2, 20))
def test_leakage_bounds(seed, n, T):
    rng = np.random.default_rng(seed)
    eps = rng.uniform(0.0, 1.0, size=T)
    tl = quantify(random_matrix(rng, n), random_matrix(rng, n), eps)
    # between per-step leakage and full composition
    assert np.all(tl.bpl >= eps - 1e-15) and np.all(tl.bpl <= np.cumsum(eps) + 1e-12)
    assert np.all(tl.tpl <= eps.sum() + 1e-12)


def test_near_critical_supremum_converges_slowly():
    # d = 0 with eps just under log(1/q): finite, but the recursion's slope at
    # the fixed point is 1 - O(e^-sup), so plain iteration crawls
    q, eps = 0.9048, 0.1
    assert eps < -math.log(q)
    sup = candidate_supremum(q, 0.0, eps)
    assert sup == pytest.approx(math.log((1 - q) * math.exp(eps) / (1 - q * math.exp(eps))), abs=1e-12)
    value, steps = iterate_to_supremum(lambda a: math.log(q * math.expm1(a) + 1), eps, tol=1e-12, max_iter=10**5)
    assert math.isinf(value) and steps == 10**5
