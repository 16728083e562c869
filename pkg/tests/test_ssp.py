import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from guiprune.core import ImportanceMap, PartitionMask, Stratum
from guiprune.errors import EmptyBudget, KTooLarge
from guiprune.sim import oracle_prune, random_sample_baseline
from guiprune.ssp import prune, stratum_budgets, top_k, uniform_grid_sample

from conftest import make_grid, make_inputs


def test_stratum_budget_examples():
    assert stratum_budgets(100, 30, 0.45, 0.3).as_tuple() == (45, 13, 9, 23)
    assert stratum_budgets(100, 30, 1, 1).as_tuple() == (100, 30, 70, 0)
    # flat screen: k_bg = floor(100 * 0.45 * 0.3) = 13
    assert stratum_budgets(100, 0, 0.45, 0.3).as_tuple() == (45, 0, 13, 32)


def test_top_k_examples():
    assert top_k([0, 1, 2, 3], [5, 1, 9, 9], 2) == [2, 3]
    assert top_k([0, 1, 2, 3], [5, 1, 9, 9], 0) == []
    assert top_k([4, 7, 2, 9], np.ones(10), 3) == [2, 4, 7]
    with pytest.raises(KTooLarge):
        top_k([1, 2], [0, 1, 2], 3)


def test_ugs_examples():
    assert uniform_grid_sample(list(range(100)), 4) == [0, 25, 50, 75]
    rem = [3, 8, 9, 14, 20, 21, 30, 41]
    assert uniform_grid_sample(rem, len(rem)) == rem
    assert uniform_grid_sample(rem, 3) == [3, 9, 21]
    assert uniform_grid_sample(rem, 0) == []
    with pytest.raises(KTooLarge):
        uniform_grid_sample(rem, 9)


def test_prune_worked_example():
    grid, scores, part = make_inputs(4, 4, [0, 4, 8, 12], list(range(16)))
    sel = prune(grid, scores, part, 0.5, 0.5)
    assert sel.stratum_indices(Stratum.FG) == [8, 12]
    assert sel.stratum_indices(Stratum.BG) == [13, 14, 15]
    assert sel.stratum_indices(Stratum.UNI) == [0, 3, 7]
    assert sel.retained == oracle_prune(grid, scores, part, 0.5, 0.5).retained


def test_prune_identity():
    grid, scores, part = make_inputs(3, 5, [1, 2, 7], np.arange(15.0))
    sel = prune(grid, scores, part, 1, 1)
    assert sel.indices == list(range(15))
    assert sel.counts() == {"FG": 3, "BG": 12, "UNI": 0}


def test_prune_all_background_uniform_scores():
    grid, scores, part = make_inputs(10, 10, [], np.ones(100))
    sel = prune(grid, scores, part, 0.45, 0.3)
    assert sel.stratum_indices(Stratum.FG) == []
    assert sel.stratum_indices(Stratum.BG) == list(range(13))
    rest = list(range(13, 100))
    assert sel.stratum_indices(Stratum.UNI) == [rest[(j * 87) // 32] for j in range(32)]


def test_prune_all_foreground():
    grid, scores, part = make_inputs(4, 4, range(16), np.arange(16.0))
    sel = prune(grid, scores, part, 0.5, 0.3)
    assert sel.stratum_indices(Stratum.FG) == list(range(8, 16))
    assert len(sel) == 8


def test_prune_empty_budget():
    grid, scores, part = make_inputs(1, 3, [0], [1, 2, 3])
    with pytest.raises(EmptyBudget):
        prune(grid, scores, part, 0.3, 0.5)
    with pytest.raises(EmptyBudget):
        oracle_prune(grid, scores, part, 0.3, 0.5)


def test_random_sampler_hook():
    grid, scores, part = make_inputs(6, 6, [0, 1, 2], np.arange(36.0))
    sampler = lambda rem, k: random_sample_baseline(rem, k, seed=5)
    a = prune(grid, scores, part, 0.5, 0.3, residual_sampler=sampler)
    b = prune(grid, scores, part, 0.5, 0.3, residual_sampler=sampler)
    assert a.retained == b.retained
    assert len(a) == 18


# --- properties ----------------------------------------------------------

ratios = st.floats(0.01, 1.0, allow_nan=False)


@st.composite
def frames(draw):
    rows = draw(st.integers(1, 16))
    cols = draw(st.integers(1, 16))
    n = rows * cols
    fg = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    # few distinct values so ties are common
    scores = draw(st.lists(st.integers(0, 5).map(float), min_size=n, max_size=n))
    return rows, cols, [i for i, f in enumerate(fg) if f], scores


@settings(max_examples=300, deadline=None)
@given(frame=frames(), mu=ratios, rho=ratios)
def test_prune_matches_oracle(frame, mu, rho):
    rows, cols, fg, scores = frame
    grid, imp, part = make_inputs(rows, cols, fg, scores)
    n = rows * cols
    k_total = math.floor(n * Fraction(repr(mu)))
    if k_total == 0:
        with pytest.raises(EmptyBudget):
            prune(grid, imp, part, mu, rho)
        return
    sel = prune(grid, imp, part, mu, rho)
    assert len(sel) == k_total
    b = stratum_budgets(n, len(fg), mu, rho)
    assert b.k_res >= 0
    assert sel.counts() == {"FG": b.k_fg, "BG": b.k_bg, "UNI": b.k_res}
    assert sel.retained == oracle_prune(grid, imp, part, mu, rho).retained


@settings(max_examples=100, deadline=None)
@given(frame=frames(), mu=ratios, rho=ratios, seed=st.integers(0, 2**32))
def test_prune_ignores_score_permutation_within_ties(frame, mu, rho, seed):
    # a strictly monotone rescaling of the scores cannot change the selection
    rows, cols, fg, scores = frame
    if math.floor(rows * cols * Fraction(repr(mu))) == 0:
        return
    grid, imp, part = make_inputs(rows, cols, fg, scores)
    grid2, imp2, part2 = make_inputs(rows, cols, fg, [3 * s + 1 for s in scores])
    assert prune(grid, imp, part, mu, rho).retained == prune(grid2, imp2, part2, mu, rho).retained


@settings(max_examples=200, deadline=None)
@given(rem=st.lists(st.integers(0, 500), min_size=1, max_size=200, unique=True), data=st.data())
def test_ugs_stride_bounds(rem, data):
    rem = sorted(rem)
    k = data.draw(st.integers(1, len(rem)))
    out = uniform_grid_sample(rem, k)
    assert len(out) == k == len(set(out))
    assert out[0] == rem[0]
    pos = [rem.index(x) for x in out]
    gaps = [b - a for a, b in zip(pos, pos[1:])]
    # positions are floor(j*|R|/k): consecutive gaps are floor or ceil of |R|/k
    for g in gaps:
        assert len(rem) // k <= g <= -(-len(rem) // k)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 60), seed=st.integers(0, 2**64 - 1), data=st.data())
def test_random_baseline(n, seed, data):
    rem = list(range(0, 3 * n, 3))
    k = data.draw(st.integers(0, n))
    a = random_sample_baseline(rem, k, seed)
    assert a == random_sample_baseline(rem, k, seed)
    assert len(a) == k and set(a) <= set(rem) and a == sorted(a)
    assert random_sample_baseline(rem, n, seed) == rem
