"""Metropolis-Hastings on the driving Gaussian with pCN proposals.

The chain state is the standardized noise array generating the finest corner
path; pushing it through the coupled solver yields every corner's solution,
so a proposal that preserves N(0, I) preserves the coupled prior, and the
Metropolis correction only involves the ratio of the coupling weights G.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .forward import (
    BaseResolution,
    ModelParams,
    ObservationConfig,
    coupled_solve,
    draw_noise,
    exp_euler_solve,
    observe,
    qoi,
    resolution,
)
from .indices import MultiIndex, corners
from .weights import LikelihoodSpec, corner_weights, log_likelihood

logger = logging.getLogger(__name__)

RHO_BOUNDS = (1e-6, 1.0)


@dataclass
class ChainConfig:
    n_steps: int
    burn_in: int | None = None  # default: max(1000, n_steps // 10)
    rho: float = 0.5
    adapt: bool = True
    target_acceptance: tuple[float, float] = (0.4, 0.6)
    adapt_window: int = 50
    record_state: bool = False

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError("rho must be in (0, 1]")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.burn_in is None:
            self.burn_in = max(1000, self.n_steps // 10)
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


@dataclass
class ChainResult:
    alpha: MultiIndex
    corners: tuple[MultiIndex, ...]
    phi: np.ndarray  # (n_steps, k)
    H: np.ndarray  # (n_steps, k)
    log_G: np.ndarray  # (n_steps,)
    acceptance_rate: float
    rho: float
    final_state: np.ndarray | None = None  # (n_steps, K) fine-corner modal state at T


def pcn_propose(state: np.ndarray, rho: float, rng: np.random.Generator) -> np.ndarray:
    """X' = sqrt(1-rho) X + sqrt(rho) eta; preserves N(0, I) exactly."""
    if not 0 < rho <= 1:
        raise ValueError("rho must be in (0, 1]")
    return np.sqrt(1.0 - rho) * state + np.sqrt(rho) * rng.standard_normal(state.shape)


def mh_accept(log_G_prop: float, log_G_cur: float, rng: np.random.Generator) -> bool:
    """Accept with probability min(1, exp(log_G_prop - log_G_cur))."""
    if np.isnan(log_G_prop) or np.isnan(log_G_cur):
        raise ValueError("non-finite coupling weight in MH step")
    d = log_G_prop - log_G_cur
    return d >= 0 or np.log(rng.uniform()) < d


@dataclass
class RhoTuner:
    """Geometric bisection on rho targeting a pilot acceptance band.

    ``update`` consumes one pilot window's acceptance rate.  Once the rate
    lands in the band the value is frozen; a collapsed bracket falls back to
    the starting rho with a warning.
    """

    rho: float
    band: tuple[float, float] = (0.4, 0.6)
    lo: float = RHO_BOUNDS[0]
    hi: float = RHO_BOUNDS[1]
    settled: bool = False
    _rho0: float = field(default=0.0, init=False)

    def __post_init__(self):
        self._rho0 = self.rho

    def update(self, acceptance: float) -> float:
        if self.settled:
            return self.rho
        if self.band[0] <= acceptance <= self.band[1]:
            self.settled = True
            return self.rho
        if acceptance > self.band[1]:
            self.lo = self.rho  # moves too timid, enlarge
        else:
            self.hi = self.rho
        if self.hi / self.lo < 1.05:
            logger.warning(
                "rho bisection bracket collapsed (lo=%.3g, hi=%.3g); falling back to rho=%.3g",
                self.lo, self.hi, self._rho0,
            )
            self.rho = self._rho0
            self.settled = True
            return self.rho
        self.rho = float(np.sqrt(self.lo * self.hi))
        return self.rho


def tune_rho(pilot_acceptances, rho0: float, band=(0.4, 0.6)) -> float:
    """Frozen rho from a sequence of pilot-window acceptance rates.

    Convenience wrapper over :class:`RhoTuner` for offline pilot statistics.
    """
    tuner = RhoTuner(rho=rho0, band=band)
    for acc in pilot_acceptances:
        tuner.update(acc)
        if tuner.settled:
            break
    return tuner.rho


def run_chain(
    alpha: MultiIndex,
    params: ModelParams,
    base: BaseResolution,
    obs_config: ObservationConfig,
    likelihood: LikelihoodSpec | None,
    config: ChainConfig,
    rng: np.random.Generator,
    qoi_weighted: bool = True,
    coupled: bool = True,
) -> ChainResult:
    """Run a Pi_alpha-invariant pCN-MH chain and record per-corner (phi, H).

    ``likelihood=None`` targets the coupled prior (G identically 1, every
    proposal accepted).  ``coupled=False`` runs a plain single-level chain on
    pi_alpha itself (one corner, G = g).
    """
    corner_list = corners(alpha).corners if coupled else (tuple(alpha),)
    k = len(corner_list)

    def evaluate(xi):
        if coupled:
            sol = coupled_solve(alpha, params, base, xi, obs_config.m)
            paths = [sol.obs_path[c] for c in corner_list]
            finals = [sol.final[c] for c in corner_list]
        else:
            path = exp_euler_solve(params, resolution(alpha, base, params.T), xi, obs_config.m)
            paths, finals = [path[..., 1:]], [path[..., -1]]
        phis = np.array([qoi(u, qoi_weighted) for u in finals])
        if likelihood is None:
            log_g = np.zeros(k)
        else:
            log_g = np.array([log_likelihood(likelihood, observe(p, obs_config)) for p in paths])
        return phis, log_g, finals[-1]

    state = draw_noise(rng, alpha, base)
    phi_cur, log_g_cur, u_cur = evaluate(state)
    log_G_cur = log_g_cur.max()

    tuner = RhoTuner(rho=config.rho, band=config.target_acceptance) if config.adapt else None
    rho = config.rho
    window_acc = 0
    n_total = config.burn_in + config.n_steps
    phi_out = np.empty((config.n_steps, k))
    H_out = np.empty((config.n_steps, k))
    log_G_out = np.empty(config.n_steps)
    state_out = np.empty((config.n_steps, state.shape[0])) if config.record_state else None
    n_accept = 0

    for j in range(n_total):
        prop = pcn_propose(state, rho, rng)
        phi_p, log_g_p, u_p = evaluate(prop)
        if mh_accept(log_g_p.max(), log_G_cur, rng):
            state, phi_cur, log_g_cur, u_cur = prop, phi_p, log_g_p, u_p
            log_G_cur = log_g_cur.max()
            if j < config.burn_in:
                window_acc += 1
            else:
                n_accept += 1
        in_burn_in = j < config.burn_in
        if tuner is not None and in_burn_in and (j + 1) % config.adapt_window == 0:
            rho = tuner.update(window_acc / config.adapt_window)
            window_acc = 0
        if not in_burn_in:
            i = j - config.burn_in
            cw = corner_weights(log_g_cur)
            phi_out[i] = phi_cur
            H_out[i] = cw.H
            log_G_out[i] = cw.log_G
            if state_out is not None:
                state_out[i] = u_cur
    return ChainResult(
        alpha=tuple(alpha),
        corners=corner_list,
        phi=phi_out,
        H=H_out,
        log_G=log_G_out,
        acceptance_rate=n_accept / config.n_steps,
        rho=rho,
        final_state=state_out,
    )
