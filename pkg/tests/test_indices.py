import numpy as np
import pytest

from mimcmc.indices import (
    corner_coefficients,
    corners,
    delta_weights,
    enumerate_index_set,
    pair_sign,
    pair_signs,
)


def test_enumerate_index_set_lexicographic():
    got = enumerate_index_set((1, 2))
    assert got == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


def test_enumerate_rejects_negative():
    with pytest.raises(ValueError):
        enumerate_index_set((1, -1))


def test_corner_count_and_base():
    for alpha, k in [((0, 0), 1), ((2, 0), 2), ((1, 1), 4), ((1, 1, 1), 8), ((0, 3, 2), 4)]:
        cs = corners(alpha)
        assert cs.k == k
        assert cs.corners[-1] == alpha
        assert len(set(cs.corners)) == k


def test_corners_two_dimensional_example():
    assert corners((1, 1)).corners == ((0, 0), (1, 0), (0, 1), (1, 1))


def test_pairs_differ_by_lowest_active_decrement():
    for alpha in [(1, 1), (3, 2), (2, 1, 1), (0, 2, 2)]:
        cs = corners(alpha)
        lowest = min(j for j, a in enumerate(alpha) if a > 0)
        for i in range(cs.pair_count):
            lo, hi = cs.corners[2 * i], cs.corners[2 * i + 1]
            diff = [h - l for h, l in zip(hi, lo)]
            assert sum(diff) == 1 and diff[lowest] == 1


def test_pair_sign_matches_distance_parity():
    alpha = (2, 3)
    cs = corners(alpha)
    for i in range(1, cs.pair_count + 1):
        dist = sum(abs(a - b) for a, b in zip(alpha, cs.corners[2 * i - 1]))
        assert pair_sign(alpha, i) == (-1) ** dist


def test_pair_sign_out_of_range():
    with pytest.raises(ValueError):
        pair_sign((1, 1), 3)


def test_delta_weights_inclusion_exclusion():
    w = delta_weights((1, 1))
    assert w == {(1, 1): 1, (0, 1): -1, (1, 0): -1, (0, 0): 1}
    assert delta_weights((0, 0)) == {(0, 0): 1}


def test_corner_coefficients_align_with_signs():
    for alpha in [(1, 0), (1, 1), (2, 2), (1, 1, 1)]:
        coefs = corner_coefficients(alpha)
        expect = []
        for s in pair_signs(alpha):
            expect += [-s, s]
        assert coefs == expect


def test_telescoping_sum_collapses():
    rng = np.random.default_rng(0)
    for L in [(4,), (3, 3), (2, 2, 2)]:
        F = rng.standard_normal(tuple(l + 1 for l in L))
        total = 0.0
        for alpha in enumerate_index_set(L):
            for c, w in delta_weights(alpha).items():
                total += w * (F[c] if all(x >= 0 for x in c) else 0.0)
        assert abs(total - F[tuple(L)]) < 1e-12
