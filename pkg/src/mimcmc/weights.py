"""Likelihoods and approximate-coupling weights.

The coupled prior over the corners of a multi-index is reweighted by
G = max_i g_i (the largest corner likelihood); each corner's posterior
expectation is then recovered through the importance ratios H_i = g_i / G.
All computation is in log space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LikelihoodSpec:
    """Observation vector and Gaussian noise variance."""

    y: np.ndarray
    tau2: float

    def __post_init__(self):
        if self.tau2 <= 0:
            raise ValueError("tau2 must be > 0")


def log_likelihood(spec: LikelihoodSpec, Gu: np.ndarray) -> np.ndarray:
    """Unnormalized Gaussian log-likelihood -|y - Gu|^2 / (2 tau^2).

    ``Gu`` may carry leading batch axes; the last axis must match y.
    """
    y = np.asarray(spec.y, dtype=float)
    Gu = np.asarray(Gu, dtype=float)
    if Gu.shape[-1] != y.shape[-1]:
        raise ValueError(f"observation length mismatch: {Gu.shape[-1]} vs {y.shape[-1]}")
    r = Gu - y
    return -np.einsum("...j,...j->...", r, r) / (2.0 * spec.tau2)


@dataclass
class CornerWeights:
    """Per-corner log-likelihoods, their max, and the ratios H = g / max g."""

    log_g: np.ndarray  # (..., k)
    log_G: np.ndarray  # (...,)
    H: np.ndarray  # (..., k); max over corners is exactly 1


def corner_weights(log_g: np.ndarray) -> CornerWeights:
    """Importance weights from per-corner log-likelihood values (last axis)."""
    log_g = np.asarray(log_g, dtype=float)
    if log_g.shape[-1] < 1:
        raise ValueError("need at least one corner")
    if not np.all(np.isfinite(log_g)):
        raise ValueError("non-finite corner log-likelihood")
    log_G = log_g.max(axis=-1)
    H = np.exp(log_g - log_G[..., None])
    return CornerWeights(log_g=log_g, log_G=log_G, H=H)


def multi_increment(phi: np.ndarray, H: np.ndarray, signs) -> np.ndarray:
    """Signed pairwise-weighted corner difference (the functional phi-tilde).

    phi, H : arrays (..., k) in corner order, k even; ``signs`` holds the
    k/2 pair signs.  Returns
    sum_i s_i (phi_{2i} H_{2i} - phi_{2i-1} H_{2i-1}).
    """
    phi = np.asarray(phi, dtype=float)
    H = np.asarray(H, dtype=float)
    k = phi.shape[-1]
    if k % 2 or k < 2:
        raise ValueError(f"corner count must be even and >= 2, got {k}")
    signs = np.asarray(signs, dtype=float)
    if signs.shape != (k // 2,):
        raise ValueError(f"expected {k // 2} pair signs, got {signs.shape}")
    coef = np.empty(k)
    coef[1::2] = signs
    coef[0::2] = -signs
    return np.einsum("...k,...k,k->...", phi, H, coef)


def multi_increment_scaled(phi: np.ndarray, weights: CornerWeights, signs) -> np.ndarray:
    """phi-bar = G * phi-tilde, the unnormalized-target diagnostic variant."""
    return np.exp(weights.log_G) * multi_increment(phi, weights.H, signs)
