"""Multi-index arithmetic: tensor index sets, corner stencils and difference weights.

A multi-index is a tuple of non-negative discretization levels, one entry per
discretized dimension.  Every operation here is pure integer arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

MultiIndex = tuple[int, ...]


def _check_index(alpha: MultiIndex) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) == 0:
        raise ValueError("multi-index must have at least one dimension")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index entries must be >= 0, got {alpha}")
    return alpha


def enumerate_index_set(max_levels: MultiIndex) -> list[MultiIndex]:
    """All multi-indices alpha with 0 <= alpha_i <= max_levels[i], lexicographic."""
    max_levels = _check_index(max_levels)
    return list(itertools.product(*(range(L + 1) for L in max_levels)))


@dataclass(frozen=True)
class CornerSet:
    """The corners of the mixed-difference stencil rooted at ``base``.

    ``corners[i]`` is obtained from ``base`` by decrementing a subset of its
    positive entries.  Consecutive entries pair up: corners ``2i`` and
    ``2i+1`` (0-based) differ by exactly one decrement, in the lowest active
    dimension.  The last corner is ``base`` itself.
    """

    base: MultiIndex
    corners: tuple[MultiIndex, ...]

    @property
    def k(self) -> int:
        return len(self.corners)

    @property
    def pair_count(self) -> int:
        return len(self.corners) // 2


def corners(alpha: MultiIndex) -> CornerSet:
    """Corner list for ``alpha``, ordered by increasing sum_j keep_j 2^(j-1).

    Iterating keep-masks over the active (positive) dimensions in binary
    order satisfies both labeling conventions: consecutive pairs differ by a
    single decrement in the lowest active dimension, and the weighted
    ordering over positions is non-decreasing.
    """
    alpha = _check_index(alpha)
    active = [j for j, a in enumerate(alpha) if a > 0]
    out = []
    for mask in range(2 ** len(active)):
        c = list(alpha)
        for b, j in enumerate(active):
            if not (mask >> b) & 1:
                c[j] -= 1
        out.append(tuple(c))
    return CornerSet(base=alpha, corners=tuple(out))


def pair_sign(alpha: MultiIndex, i: int) -> int:
    """Sign (-1)^{|alpha - alpha(2i)|} of the i-th corner pair (1-based)."""
    cs = corners(alpha)
    if not 1 <= i <= cs.pair_count:
        raise ValueError(f"pair index {i} out of range for {alpha} (pairs={cs.pair_count})")
    even = cs.corners[2 * i - 1]
    dist = sum(abs(a - b) for a, b in zip(cs.base, even))
    return -1 if dist % 2 else 1


def pair_signs(alpha: MultiIndex) -> list[int]:
    """Signs of all corner pairs of ``alpha`` (empty when alpha == 0)."""
    return [pair_sign(alpha, i) for i in range(1, corners(alpha).pair_count + 1)]


def delta_weights(alpha: MultiIndex) -> dict[MultiIndex, int]:
    """Inclusion-exclusion coefficients of the mixed first difference at ``alpha``.

    Returns c with  Delta E_alpha[f] = sum_beta c[beta] * E_beta[f],  where
    c[beta] = (-1)^(number of decremented dimensions).
    """
    cs = corners(alpha)
    out = {}
    for c in cs.corners:
        dec = sum(a - b for a, b in zip(cs.base, c))
        out[c] = -1 if dec % 2 else 1
    return out


def corner_coefficients(alpha: MultiIndex) -> list[int]:
    """delta_weights in corner order, as a list aligned with corners(alpha)."""
    w = delta_weights(alpha)
    return [w[c] for c in corners(alpha).corners]
