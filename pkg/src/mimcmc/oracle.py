"""Closed-form Gaussian machinery for the heat-equation inverse problem.

Each sine mode of the SPDE is an independent scalar OU process, so the joint
law of the pointwise observations and any linear functional of the final
state is Gaussian with moments computable mode by mode.  Conditioning on the
noisy observations gives the exact posterior, used as ground truth for MSE
studies; the same construction applied to the exponential-Euler recursion
gives an exact per-level oracle for MCMC validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .forward import (
    BaseResolution,
    ModelParams,
    ObservationConfig,
    mode_rates,
    qoi_weights,
    resolution,
    sine_basis,
    step_multiplier,
    step_noise_std,
)
from .indices import MultiIndex
from .seeding import derive_rng

DEFAULT_K_MAX = 2**15


@dataclass
class GaussianSpec:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        n = self.mean.shape[0]
        if self.cov.shape != (n, n):
            raise ValueError(f"covariance shape {self.cov.shape} does not match mean length {n}")
        asym = np.abs(self.cov - self.cov.T).max() if n else 0.0
        if asym > 1e-12 * max(1.0, np.abs(self.cov).max()):
            raise ValueError("covariance is not symmetric")


def mode_moments(params: ModelParams, k, t):
    """Mean and variance of the continuum mode u_k(t).

    mean = e^{(theta - pi^2 k^2) t} u_{k,0};
    var  = sigma^2 (1 - e^{2 (theta - pi^2 k^2) t}) / (2 (pi^2 k^2 - theta)).
    """
    k = np.asarray(k, dtype=float)
    t = np.asarray(t, dtype=float)
    rate = params.theta - np.pi**2 * k**2
    if np.any(rate >= 0):
        raise ValueError("unstable mode: require theta < pi^2 k^2")
    mean = np.exp(rate * t) * params.u0
    var = params.sigma**2 * (-np.expm1(2.0 * rate * t)) / (-2.0 * rate)
    return mean, var


def _mode_cov_matrix(params: ModelParams, k: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Cov(u_k(s), u_k(t)) = e^{(theta - lambda)|t - s|} Var(u_k(min(s,t))), per mode.

    Returns (len(k), len(times), len(times)).
    """
    rate = params.theta - np.pi**2 * np.asarray(k, dtype=float) ** 2
    tmin = np.minimum.outer(times, times)
    tabs = np.abs(np.subtract.outer(times, times))
    var_at_min = params.sigma**2 * (-np.expm1(2.0 * rate[:, None, None] * tmin)) / (-2.0 * rate[:, None, None])
    return np.exp(rate[:, None, None] * tabs) * var_at_min


@dataclass(frozen=True)
class LinearQoI:
    """Linear functional sum_k weights[k-1] * u_k(T) of the final state."""

    weights: np.ndarray

    @staticmethod
    def default(K_max: int, weighted: bool = True) -> "LinearQoI":
        return LinearQoI(weights=qoi_weights(K_max, weighted))


def joint_gaussian(
    params: ModelParams,
    K_max: int,
    obs_config: ObservationConfig,
    qoi: LinearQoI | None = None,
    chunk: int = 1024,
) -> GaussianSpec:
    """Joint law of the 2m observation slots and the QoI slot (dimension 2m+1).

    Assembled mode by mode: slot j carries weight e_k(x_j) at its observation
    time, and the last slot carries the QoI weight at time T.
    """
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    if qoi is None:
        qoi = LinearQoI.default(K_max)
    if len(qoi.weights) != K_max:
        raise ValueError("QoI weight vector must have length K_max")
    times = obs_config.times
    m = obs_config.m
    slot_times = np.concatenate([np.tile(times, len(obs_config.locations)), [obs_config.T]])
    dim = len(slot_times)
    mean = np.zeros(dim)
    cov = np.zeros((dim, dim))
    for k0 in range(1, K_max + 1, chunk):
        k = np.arange(k0, min(k0 + chunk, K_max + 1))
        # (nk, dim) slot weights: e_k(x) for observation slots, QoI weight at the end
        w = np.concatenate(
            [sine_basis(k[:, None], np.asarray(obs_config.locations)[None, :]).repeat(m, axis=1)]
            + [np.asarray(qoi.weights)[k - 1][:, None]],
            axis=1,
        )
        mk, _ = mode_moments(params, k[:, None], slot_times[None, :])
        mean += (w * mk).sum(axis=0)
        C = _mode_cov_matrix(params, k, slot_times)
        cov += np.einsum("ki,kij,kj->ij", w, C, w)
    spec = GaussianSpec(mean=mean, cov=0.5 * (cov + cov.T))
    _check_psd(spec.cov)
    return spec


def _check_psd(cov: np.ndarray, tol: float = 1e-10) -> None:
    w = np.linalg.eigvalsh(cov)
    if w.min() < -tol * max(1.0, np.abs(w).max()):
        raise ValueError(f"covariance is not positive semidefinite (min eigenvalue {w.min():.3e})")


def _chol_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Symmetric solve with trace-scaled jitter on factorization failure."""
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.trace(A) / A.shape[0]
        L = np.linalg.cholesky(A + jitter * np.eye(A.shape[0]))
    y = np.linalg.solve(L, B)
    return np.linalg.solve(L.T, y)


def condition_on_data(spec: GaussianSpec, y: np.ndarray, tau2: float) -> GaussianSpec:
    """Posterior of the full slot vector given y = H u + N(0, tau2 I).

    Information form: post_cov = (H^T H / tau2 + cov^-1)^-1,
    post_mean = post_cov (cov^-1 mean + H^T y / tau2), with H selecting the
    observation slots (all but the last).
    """
    y = np.asarray(y, dtype=float)
    dim = spec.mean.shape[0]
    n_obs = y.shape[0]
    if n_obs >= dim:
        raise ValueError("observation vector must leave at least one latent slot")
    prec = _chol_solve(spec.cov, np.eye(dim))
    info = prec.copy()
    info[:n_obs, :n_obs] += np.eye(n_obs) / tau2
    rhs = prec @ spec.mean
    rhs[:n_obs] += y / tau2
    post_cov = _chol_solve(info, np.eye(dim))
    post_mean = post_cov @ rhs
    return GaussianSpec(mean=post_mean, cov=0.5 * (post_cov + post_cov.T))


def condition_on_data_covariance_form(spec: GaussianSpec, y: np.ndarray, tau2: float) -> GaussianSpec:
    """Independently coded covariance-form update, used as an algebraic oracle.

    post_mean = mean + cov H^T (H cov H^T + tau2 I)^-1 (y - H mean).
    """
    y = np.asarray(y, dtype=float)
    n_obs = y.shape[0]
    S = spec.cov[:n_obs, :n_obs] + tau2 * np.eye(n_obs)
    gain = _chol_solve(S, spec.cov[:n_obs, :]).T  # (dim, n_obs)
    post_mean = spec.mean + gain @ (y - spec.mean[:n_obs])
    post_cov = spec.cov - gain @ spec.cov[:n_obs, :]
    return GaussianSpec(mean=post_mean, cov=0.5 * (post_cov + post_cov.T))


def posterior_qoi(spec_posterior: GaussianSpec) -> tuple[float, float]:
    """Mean and variance of the QoI slot (last coordinate)."""
    return float(spec_posterior.mean[-1]), float(spec_posterior.cov[-1, -1])


def sample_modes_at_times(
    params: ModelParams, K_max: int, times: np.ndarray, rng: np.random.Generator, n_samples: int | None = None
) -> np.ndarray:
    """Exact draws of the continuum modes at increasing times (OU transition).

    Returns (K_max, len(times)) or (n_samples, K_max, len(times)).
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] <= 0:
        raise ValueError("times must be strictly increasing and positive")
    k = np.arange(1, K_max + 1, dtype=float)
    rate = params.theta - np.pi**2 * k**2
    shape = (K_max,) if n_samples is None else (n_samples, K_max)
    out = np.empty(shape + (len(times),))
    mean0, var0 = mode_moments(params, k, times[0])
    out[..., 0] = mean0 + np.sqrt(var0) * rng.standard_normal(shape)
    for j in range(1, len(times)):
        dt = times[j] - times[j - 1]
        a = np.exp(rate * dt)
        _, vj = mode_moments(params, k, times[j])
        _, vp = mode_moments(params, k, times[j - 1])
        resid = np.maximum(vj - a**2 * vp, 0.0)
        out[..., j] = a * out[..., j - 1] + np.sqrt(resid) * rng.standard_normal(shape)
    return out


def generate_data(
    params: ModelParams,
    K_max: int,
    obs_config: ObservationConfig,
    seed: int,
    qoi_weighted: bool = True,
) -> dict:
    """Synthetic truth draw and noisy observations, deterministic per seed.

    Returns a JSON-serializable record with the observation vector, the truth
    QoI value, and the generating configuration.
    """
    rng = derive_rng(seed, "data")
    times = obs_config.times
    modes = sample_modes_at_times(params, K_max, times, rng)
    k = np.arange(1, K_max + 1)
    clean = np.concatenate([sine_basis(k, x) @ modes for x in obs_config.locations])
    y = clean + np.sqrt(obs_config.tau2) * rng.standard_normal(clean.shape)
    truth_qoi = float(qoi_weights(K_max, qoi_weighted) @ modes[:, -1])  # t_m == T
    return {
        "seed": int(seed),
        "K_max": int(K_max),
        "m": int(obs_config.m),
        "tau2": float(obs_config.tau2),
        "locations": list(obs_config.locations),
        "theta": params.theta,
        "sigma": params.sigma,
        "T": params.T,
        "u0": params.u0,
        "qoi_weighted": bool(qoi_weighted),
        "truth_qoi": truth_qoi,
        "y": y.tolist(),
    }


def write_fixture(record: dict, path: Path, force: bool = False) -> None:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"fixture {path} exists; pass force to overwrite")
    path.write_text(json.dumps(record, indent=1))


def read_fixture(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def recurrence_moments(params: ModelParams, K: int, M: int, h: float, n: int | None = None):
    """Exact mean/variance of the exponential-Euler modes after n steps.

    Independent of the solver: iterates mean' = a mean, var' = a^2 var + v.
    """
    if n is None:
        n = M
    a = step_multiplier(params, K, h)
    v = step_noise_std(params, K, h) ** 2
    mean = np.full(K, float(params.u0))
    var = np.zeros(K)
    for _ in range(n):
        mean = a * mean
        var = a**2 * var + v
    return mean, var


def discrete_joint_gaussian(
    alpha: MultiIndex,
    params: ModelParams,
    base: BaseResolution,
    obs_config: ObservationConfig,
    qoi_weighted: bool = True,
) -> GaussianSpec:
    """Joint Gaussian of (observation slots, QoI) under the level-alpha scheme.

    Per-mode affine recursion: Cov(u_n, u_n') = a^|n - n'| Var(u_min(n,n')).
    Observation times must sit on the level-alpha grid.
    """
    res = resolution(alpha, base, params.T)
    m = obs_config.m
    if res.M % m:
        raise ValueError(f"observation count m={m} must divide M={res.M}")
    step = res.M // m
    obs_n = np.arange(1, m + 1) * step
    slot_n = np.concatenate([np.tile(obs_n, len(obs_config.locations)), [res.M]])

    a = step_multiplier(params, res.K, res.h_t)
    v = step_noise_std(params, res.K, res.h_t) ** 2
    k = np.arange(1, res.K + 1)
    qw = qoi_weights(res.K, qoi_weighted)
    # var(n) = v (1 - a^(2n)) / (1 - a^2), in expm1 form for a near 1
    log_a = np.log(a)
    var_n = v[:, None] * np.expm1(2.0 * np.outer(log_a, slot_n)) / np.expm1(2.0 * log_a)[:, None]
    mean_n = params.u0 * np.exp(np.outer(log_a, slot_n))

    w = np.concatenate(
        [sine_basis(k[:, None], np.asarray(obs_config.locations)[None, :]).repeat(m, axis=1), qw[:, None]],
        axis=1,
    )
    nmin = np.minimum.outer(slot_n, slot_n)
    nabs = np.abs(np.subtract.outer(slot_n, slot_n))
    dim = len(slot_n)
    mean = (w * mean_n).sum(axis=0)
    cov = np.zeros((dim, dim))
    for ki in range(res.K):
        var_at_min = v[ki] * np.expm1(2.0 * log_a[ki] * nmin) / np.expm1(2.0 * log_a[ki])
        C = np.exp(log_a[ki] * nabs) * var_at_min
        cov += np.outer(w[ki], w[ki]) * C
    return GaussianSpec(mean=mean, cov=0.5 * (cov + cov.T))


def discrete_posterior(
    alpha: MultiIndex,
    params: ModelParams,
    base: BaseResolution,
    obs_config: ObservationConfig,
    y: np.ndarray,
    qoi_weighted: bool = True,
) -> tuple[float, float]:
    """Exact posterior mean/variance of the level-alpha QoI given observations."""
    spec = discrete_joint_gaussian(alpha, params, base, obs_config, qoi_weighted)
    post = condition_on_data(spec, np.asarray(y, dtype=float), obs_config.tau2)
    return posterior_qoi(post)
