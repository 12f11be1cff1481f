"""Coupled exponential-Euler solver for the stochastic heat equation.

The SPDE du = (u_xx + theta*u) dt + sigma dW on [0,1] with Dirichlet
boundaries diagonalizes in the sine basis e_k(x) = sqrt(2) sin(k pi x); each
modal coefficient follows an independent scalar OU-type recursion.  A single
standardized Gaussian array (the driving noise at the finest corner of a
multi-index) is pushed forward to every corner resolution by mode truncation
(space) and increment aggregation (time).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .indices import MultiIndex, CornerSet, corners


@dataclass(frozen=True)
class ModelParams:
    """Drift, noise amplitude, horizon and (uniform) initial modal value."""

    theta: float = 0.5
    sigma: float = 1.0
    T: float = 1.0
    u0: float = 1.0

    def __post_init__(self):
        if not self.theta < np.pi**2:
            raise ValueError("theta must be < pi^2 for all modes to be stable")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.T <= 0:
            raise ValueError("T must be > 0")


@dataclass(frozen=True)
class BaseResolution:
    """Mode/step counts at level (0,0); level alpha uses K0*2^ax modes, M0*2^at steps."""

    K0: int = 2
    M0: int = 20


@dataclass(frozen=True)
class Resolution:
    alpha: MultiIndex
    K: int
    M: int
    T: float

    @property
    def h_t(self) -> float:
        return self.T / self.M


def resolution(alpha: MultiIndex, base: BaseResolution, T: float = 1.0) -> Resolution:
    ax, at = alpha
    return Resolution(alpha=tuple(alpha), K=base.K0 * 2**ax, M=base.M0 * 2**at, T=T)


@dataclass(frozen=True)
class ObservationConfig:
    """Pointwise observations at x in ``locations``, times j*T/m for j=1..m."""

    m: int = 20
    locations: tuple[float, ...] = (1.0 / 3.0, 2.0 / 3.0)
    tau2: float = 0.1
    T: float = 1.0

    @property
    def times(self) -> np.ndarray:
        return np.arange(1, self.m + 1) * (self.T / self.m)

    @property
    def size(self) -> int:
        return self.m * len(self.locations)


def sine_basis(k, x):
    """e_k(x) = sqrt(2) sin(k pi x); vectorized over k and x."""
    return np.sqrt(2.0) * np.sin(np.pi * np.asarray(k) * np.asarray(x))


def mode_rates(K: int) -> np.ndarray:
    """Decay rates lambda_k = pi^2 k^2 for k = 1..K."""
    k = np.arange(1, K + 1, dtype=float)
    return np.pi**2 * k**2


def step_noise_std(params: ModelParams, K: int, h: float) -> np.ndarray:
    """Per-mode std of one exponential-Euler noise increment over step h.

    Var = sigma^2 (1 - e^{-2 lambda h}) / (2 lambda), evaluated with expm1 so
    large-k increments keep full relative accuracy.
    """
    lam = mode_rates(K)
    return params.sigma * np.sqrt(-np.expm1(-2.0 * lam * h) / (2.0 * lam))


def step_multiplier(params: ModelParams, K: int, h: float) -> np.ndarray:
    """Deterministic one-step factor a_k = e^{-lambda h} + theta (1-e^{-lambda h})/lambda."""
    lam = mode_rates(K)
    return np.exp(-lam * h) + params.theta * (-np.expm1(-lam * h)) / lam


def qoi_weights(K: int, weighted: bool = True) -> np.ndarray:
    """Modal weights of the scalar quantity of interest at x = 1/2.

    ``weighted`` uses k^{-1} e_k(1/2) (harmonically damped point value); the
    plain point evaluation u(1/2, T) uses e_k(1/2).  Even-k weights vanish.
    """
    k = np.arange(1, K + 1, dtype=float)
    w = sine_basis(k, 0.5)
    return w / k if weighted else w


def exp_euler_solve(
    params: ModelParams,
    res: Resolution,
    noise: np.ndarray,
    n_checkpoints: int | None = None,
    prescaled: bool = False,
) -> np.ndarray:
    """Run the exponential-Euler recursion from driving noise.

    Parameters
    ----------
    noise : array (..., K, M)
        Standardized normal draws (scaled internally), or pre-scaled
        increments when ``prescaled`` is set.
    n_checkpoints : int, optional
        Number of equispaced output times; must divide M.  Defaults to M
        (full path).

    Returns
    -------
    array (..., K, n_checkpoints + 1) of modal values at times
    j*T/n_checkpoints, j = 0..n_checkpoints.
    """
    K, M = res.K, res.M
    if noise.shape[-2:] != (K, M):
        raise ValueError(f"noise shape {noise.shape[-2:]} does not match resolution ({K}, {M})")
    if n_checkpoints is None:
        n_checkpoints = M
    if M % n_checkpoints:
        raise ValueError(f"checkpoint count {n_checkpoints} must divide M={M}")
    s = M // n_checkpoints
    h = res.h_t
    a = step_multiplier(params, K, h)
    xi = noise if prescaled else noise * step_noise_std(params, K, h)[:, None]

    # Within a block of s steps the recursion collapses to one affine update:
    # u <- a^s u + sum_i a^(s-1-i) xi_i.
    a_pows = a[:, None] ** np.arange(s - 1, -1, -1)[None, :]
    a_s = a**s
    u = np.broadcast_to(params.u0, noise.shape[:-1]).astype(float).copy()
    out = np.empty(noise.shape[:-1] + (n_checkpoints + 1,))
    out[..., 0] = u
    for b in range(n_checkpoints):
        block = xi[..., b * s : (b + 1) * s]
        u = a_s * u + np.einsum("...ks,ks->...k", block, a_pows)
        out[..., b + 1] = u
    return out


def coarsen_space(arr: np.ndarray, K_target: int) -> np.ndarray:
    """Retain the first ``K_target`` mode rows (axis -2) of a noise or path array."""
    if K_target > arr.shape[-2]:
        raise ValueError(f"cannot coarsen to K={K_target} from K={arr.shape[-2]}")
    return arr[..., :K_target, :]


def coarsen_time(xi_scaled: np.ndarray, params: ModelParams, fine_h: float) -> np.ndarray:
    """Aggregate scaled fine increments into coarse ones over step 2*fine_h.

    xi_hat_n = e^{-lambda fine_h} xi_{2n} + xi_{2n+1}; the variance identity
    e^{-2 lambda h} v(h) + v(h) = v(2h) makes the coarse marginal exact.
    """
    M = xi_scaled.shape[-1]
    if M % 2:
        raise ValueError(f"fine step count M={M} must be even")
    K = xi_scaled.shape[-2]
    decay = np.exp(-mode_rates(K) * fine_h)
    return decay[:, None] * xi_scaled[..., 0::2] + xi_scaled[..., 1::2]


@dataclass
class CoupledSolution:
    """Per-corner solves pushed forward from one driving noise.

    ``obs_path[c]`` holds modal values at the m observation times (shape
    (..., K_c, m)) and ``final[c]`` the modal state at time T.
    """

    corner_set: CornerSet
    obs_path: dict[MultiIndex, np.ndarray] = field(default_factory=dict)
    final: dict[MultiIndex, np.ndarray] = field(default_factory=dict)


def draw_noise(rng: np.random.Generator, alpha: MultiIndex, base: BaseResolution, shape=()) -> np.ndarray:
    """Standardized driving noise for the finest corner of ``alpha``."""
    ax, at = alpha
    return rng.standard_normal(tuple(shape) + (base.K0 * 2**ax, base.M0 * 2**at))


def coupled_solve(
    alpha: MultiIndex,
    params: ModelParams,
    base: BaseResolution,
    noise: np.ndarray,
    n_obs: int,
) -> CoupledSolution:
    """Solve every corner of ``alpha`` from the shared standardized noise.

    Corners with a smaller space level drop the upper mode rows; corners with
    a smaller time level consume aggregated scaled increments.  ``n_obs``
    checkpoints must divide the coarsest corner's step count.
    """
    cs = corners(alpha)
    fine = resolution(alpha, base, params.T)
    if noise.shape[-2:] != (fine.K, fine.M):
        raise ValueError(
            f"noise shape {noise.shape[-2:]} does not match finest corner ({fine.K}, {fine.M})"
        )
    xi_fine = noise * step_noise_std(params, fine.K, fine.h_t)[:, None]
    coarse_xi = None  # lazily built time-aggregated increments

    sol = CoupledSolution(corner_set=cs)
    for c in cs.corners:
        res_c = resolution(c, base, params.T)
        if res_c.M == fine.M:
            xi = xi_fine
        else:
            if coarse_xi is None:
                coarse_xi = coarsen_time(xi_fine, params, fine.h_t)
            xi = coarse_xi
        xi = coarsen_space(xi, res_c.K)
        path = exp_euler_solve(params, res_c, xi, n_checkpoints=n_obs, prescaled=True)
        sol.obs_path[c] = path[..., 1:]
        sol.final[c] = path[..., -1]
    return sol


def observe(obs_path: np.ndarray, config: ObservationConfig) -> np.ndarray:
    """Evaluate the observation functional from modal values at the m grid times.

    ``obs_path`` has shape (..., K, m); the result concatenates the point
    values at each configured location: (..., m * len(locations)).
    """
    K = obs_path.shape[-2]
    if obs_path.shape[-1] != config.m:
        raise ValueError(f"path has {obs_path.shape[-1]} checkpoint times, expected m={config.m}")
    k = np.arange(1, K + 1)
    parts = [np.einsum("...km,k->...m", obs_path, sine_basis(k, x)) for x in config.locations]
    return np.concatenate(parts, axis=-1)


def qoi(u_final: np.ndarray, weighted: bool = True) -> np.ndarray:
    """Scalar quantity of interest from the modal state at time T."""
    return u_final @ qoi_weights(u_final.shape[-1], weighted)
