"""Increment estimators, the aggregate multi-index estimator, allocation and rates.

Each multi-index contributes one independently estimated increment; the
aggregate estimate is their sum over a tensor index set.  Allocation follows
the (variance/cost)^(1/2) rule; for the heat-equation instance the closed
form N_alpha = eps^-2 L_x 2^(-alpha_x - 3 alpha_t / 2) is used directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainConfig, ChainResult, run_chain
from .forward import BaseResolution, ModelParams, ObservationConfig
from .indices import MultiIndex, enumerate_index_set, pair_signs
from .seeding import derive_rng
from .weights import LikelihoodSpec


@dataclass
class IncrementEstimate:
    alpha: MultiIndex
    value: float
    numerators: np.ndarray  # per-corner sums of phi * H
    denominators: np.ndarray  # per-corner sums of H
    n: int
    cost: float = 0.0


def _pair_combine(ratios: np.ndarray, signs) -> float:
    return float(sum(s * (ratios[2 * i + 1] - ratios[2 * i]) for i, s in enumerate(signs)))


def increment_self_normalized(phi: np.ndarray, H: np.ndarray, alpha: MultiIndex) -> IncrementEstimate:
    """Signed difference of per-corner self-normalized averages.

    phi, H : (N, k) chain streams in corner order.  A single corner (alpha at
    the origin, or a plain single-level chain) reduces to one ratio.
    """
    phi = np.atleast_2d(phi)
    H = np.atleast_2d(H)
    num = (phi * H).sum(axis=0)
    den = H.sum(axis=0)
    if np.any(den <= 0):
        raise ValueError(f"zero weight denominator at alpha={tuple(alpha)}; broken coupling or underflow")
    ratios = num / den
    k = phi.shape[1]
    value = float(ratios[0]) if k == 1 else _pair_combine(ratios, pair_signs(alpha))
    return IncrementEstimate(alpha=tuple(alpha), value=value, numerators=num, denominators=den, n=phi.shape[0])


def increment_simplified(
    phi: np.ndarray, H: np.ndarray, alpha: MultiIndex, normalizers: np.ndarray
) -> IncrementEstimate:
    """Increment with externally supplied weight normalizers E[H_i].

    With normalizers equal to the stream's own sample means of H this is
    algebraically identical to the self-normalized form.
    """
    phi = np.atleast_2d(phi)
    H = np.atleast_2d(H)
    normalizers = np.asarray(normalizers, dtype=float)
    if np.any(normalizers <= 0):
        raise ValueError("weight normalizers must be positive")
    num = (phi * H).mean(axis=0)
    ratios = num / normalizers
    k = phi.shape[1]
    value = float(ratios[0]) if k == 1 else _pair_combine(ratios, pair_signs(alpha))
    return IncrementEstimate(
        alpha=tuple(alpha),
        value=value,
        numerators=num * phi.shape[0],
        denominators=normalizers * phi.shape[0],
        n=phi.shape[0],
    )


def batch_means_se(x: np.ndarray, n_batches: int | None = None) -> float:
    """Batch-means standard error of the mean of a correlated scalar stream."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n_batches is None:
        n_batches = max(2, int(math.isqrt(n)))
    b = n // n_batches
    if b < 1:
        raise ValueError("stream too short for requested batch count")
    means = x[: n_batches * b].reshape(n_batches, b).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def increment_batch_se(
    phi: np.ndarray,
    H: np.ndarray,
    alpha: MultiIndex,
    n_batches: int | None = None,
    normalizers: np.ndarray | None = None,
) -> float:
    """Batch-means standard error of an increment estimator.

    The estimator (self-normalized, or simplified when ``normalizers`` is
    given) is evaluated per batch; the spread of the batch values gives the
    standard error of the full-stream value.
    """
    n = phi.shape[0]
    if n_batches is None:
        n_batches = max(2, int(math.isqrt(n)))
    b = n // n_batches
    vals = []
    for j in range(n_batches):
        sl = slice(j * b, (j + 1) * b)
        if normalizers is None:
            vals.append(increment_self_normalized(phi[sl], H[sl], alpha).value)
        else:
            vals.append(increment_simplified(phi[sl], H[sl], alpha, normalizers).value)
    return float(np.std(vals, ddof=1) / math.sqrt(n_batches))


def cost_model(alpha: MultiIndex, base: BaseResolution) -> float:
    """Work units per chain step at level alpha: K_alpha * M_alpha."""
    ax, at = alpha
    return float(base.K0 * 2**ax * base.M0 * 2**at)


@dataclass
class AllocationPlan:
    epsilon: float
    max_levels: MultiIndex
    n_per_index: dict[MultiIndex, int]
    predicted_cost: float
    deepest_floored: bool = False  # optimal N at the deepest index fell below 1

    @property
    def index_set(self) -> list[MultiIndex]:
        return list(self.n_per_index)


def allocate_general(epsilon: float, variances: dict, costs: dict) -> AllocationPlan:
    """N_alpha = ceil(eps^-2 K_I sqrt(V_alpha / C_alpha)), K_I = sum sqrt(V C)."""
    if not variances:
        raise ValueError("empty index set")
    idx = list(variances)
    V = np.array([variances[a] for a in idx], dtype=float)
    C = np.array([costs[a] for a in idx], dtype=float)
    if np.any(V <= 0) or np.any(C <= 0):
        raise ValueError("variances and costs must be positive")
    K_I = float(np.sqrt(V * C).sum())
    raw = epsilon**-2 * K_I * np.sqrt(V / C)
    n = {a: max(1, math.ceil(r)) for a, r in zip(idx, raw)}
    L = tuple(np.max(idx, axis=0)) if idx else ()
    cost = float(sum(n[a] * costs[a] for a in idx))
    return AllocationPlan(
        epsilon=epsilon,
        max_levels=L,
        n_per_index=n,
        predicted_cost=cost,
        deepest_floored=bool(raw.min() < 1.0),
    )


def allocate_spde(epsilon: float, base: BaseResolution, multiplier: float = 1.0) -> AllocationPlan:
    """Closed-form plan for the heat-equation instance.

    L_t = ceil(log2(2 / eps)), L_x = 2 L_t, and
    N_alpha = ceil(multiplier * eps^-2 * L_x * 2^(-alpha_x - 3 alpha_t / 2)),
    floored at one sample.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must be in (0, 1]")
    L_t = max(1, math.ceil(math.log2(2.0 / epsilon)))
    L_x = 2 * L_t
    n = {}
    floored = False
    for a in enumerate_index_set((L_x, L_t)):
        raw = multiplier * epsilon**-2 * L_x * 2.0 ** (-a[0] - 1.5 * a[1])
        if raw < 1.0 and a == (L_x, L_t):
            floored = True
        n[a] = max(1, math.ceil(raw))
    cost = float(sum(n[a] * cost_model(a, base) for a in n))
    return AllocationPlan(
        epsilon=epsilon, max_levels=(L_x, L_t), n_per_index=n, predicted_cost=cost, deepest_floored=floored
    )


@dataclass
class MimcmcResult:
    value: float
    increments: list[IncrementEstimate]
    total_cost: float
    acceptance: dict[MultiIndex, float] = field(default_factory=dict)


def mimcmc_estimate(
    plan: AllocationPlan,
    params: ModelParams,
    base: BaseResolution,
    obs_config: ObservationConfig,
    likelihood: LikelihoodSpec | None,
    seed: int,
    replicate: int = 0,
    rho: float = 0.5,
    burn_in: int | None = None,
    adapt: bool = True,
    qoi_weighted: bool = True,
    include_burn_in_cost: bool = False,
) -> MimcmcResult:
    """Sum of independently estimated increments over the plan's index set.

    Every index runs its own chain with a stream id derived from
    (seed, alpha, replicate); the origin index is a plain single-corner
    self-normalized average.
    """
    increments = []
    acceptance = {}
    total_cost = 0.0
    for alpha, n_steps in plan.n_per_index.items():
        cfg = ChainConfig(n_steps=n_steps, burn_in=burn_in, rho=rho, adapt=adapt)
        rng = derive_rng(seed, "chain", alpha, replicate)
        res = run_chain(alpha, params, base, obs_config, likelihood, cfg, rng, qoi_weighted)
        inc = increment_self_normalized(res.phi, res.H, alpha)
        steps = n_steps + (cfg.burn_in if include_burn_in_cost else 0)
        inc.cost = steps * cost_model(alpha, base)
        total_cost += inc.cost
        increments.append(inc)
        acceptance[tuple(alpha)] = res.acceptance_rate
    value = float(sum(i.value for i in increments))
    return MimcmcResult(value=value, increments=increments, total_cost=total_cost, acceptance=acceptance)


def single_level_mcmc(
    alpha: MultiIndex,
    params: ModelParams,
    base: BaseResolution,
    obs_config: ObservationConfig,
    likelihood: LikelihoodSpec | None,
    config: ChainConfig,
    rng: np.random.Generator,
    qoi_weighted: bool = True,
) -> tuple[float, ChainResult]:
    """Plain ergodic average of the QoI under a pCN-MH chain on pi_alpha."""
    res = run_chain(alpha, params, base, obs_config, likelihood, config, rng, qoi_weighted, coupled=False)
    est = increment_self_normalized(res.phi, res.H, alpha)
    return est.value, res


@dataclass
class RateFit:
    slopes: np.ndarray  # per fitted dimension
    intercept: float
    slope_se: np.ndarray


def fit_rates(points, values, dims=(0, 1), log_base: float = 2.0) -> RateFit:
    """Least squares of log(value) on the selected index coordinates plus 1.

    Returns the raw slopes (a pure 2^(-beta_x alpha_x - beta_t alpha_t)
    dependence yields slopes (-beta_x, -beta_t)).
    """
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0):
        raise ValueError("rate fits need positive values")
    A = np.column_stack([pts[:, d] for d in dims] + [np.ones(len(pts))])
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise ValueError("degenerate design matrix: need >= 2 distinct levels per fitted dimension")
    b = np.log(vals) / np.log(log_base)
    sol, res_ss, *_ = np.linalg.lstsq(A, b, rcond=None)
    dof = len(b) - A.shape[1]
    if dof > 0 and res_ss.size:
        s2 = float(res_ss[0]) / dof
        cov = s2 * np.linalg.inv(A.T @ A)
        se = np.sqrt(np.diag(cov))[: len(dims)]
    else:
        se = np.zeros(len(dims))
    return RateFit(slopes=sol[: len(dims)], intercept=float(sol[-1]), slope_se=se)
