"""Experiment drivers: variance-rate study, cost-vs-error study, validation.

Owns configuration, seeding, scheduling and CSV emission.  All deterministic
output is reproducible from (config, seed); wall-clock times go to their own
column and are excluded from the determinism contract.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain import ChainConfig, run_chain
from .estimators import (
    allocate_spde,
    cost_model,
    fit_rates,
    increment_self_normalized,
    mimcmc_estimate,
    single_level_mcmc,
)
from .forward import (
    BaseResolution,
    ModelParams,
    ObservationConfig,
    coupled_solve,
    draw_noise,
    qoi,
)
from .indices import corner_coefficients, corners, enumerate_index_set, pair_signs
from .oracle import (
    DEFAULT_K_MAX,
    LinearQoI,
    condition_on_data,
    generate_data,
    joint_gaussian,
    posterior_qoi,
    read_fixture,
    write_fixture,
)
from .seeding import derive_rng
from .weights import LikelihoodSpec, multi_increment

RATES_COLUMNS = ["alpha_x", "alpha_t", "n_samples", "var_prior", "var_chain", "cost_units"]
COST_ERROR_COLUMNS = ["method", "eps_or_level", "replicate", "estimate", "sq_error", "cost_units", "wall_s", "seed"]


@dataclass
class ExperimentConfig:
    # model and observation defaults
    theta: float = 0.5
    sigma: float = 1.0
    T: float = 1.0
    u0: float = 1.0
    tau2: float = 0.1
    m: int = 20
    K0: int = 2
    M0: int = 20
    K_max: int = DEFAULT_K_MAX
    # the point-evaluation functional u(1/2, T) reproduces the postulated
    # mixed rates; the k^-1-weighted variant is available via config
    qoi_weighted: bool = False
    seed: int = 20260823
    # variance-rate study
    rates_levels: tuple[int, int] = (5, 5)
    rates_samples: int = 10_000
    rates_chain_samples: int = 0  # optional chain-based variance column
    # cost-vs-error study; precision level ell targets alpha = (2 ell, ell)
    cost_levels: tuple[int, ...] = (1, 2, 3, 4)
    replicates: int = 30
    # sampling budgets per target precision eps = 2^(1 - ell): the MIMCMC plan
    # is scaled by n_multiplier and the single-level chain gets
    # ceil(mcmc_budget_factor / eps^2) retained steps.  The defaults keep the
    # statistical error tracking eps at desk scale instead of saturating at
    # the posterior spread.
    n_multiplier: float = 32.0
    mcmc_budget_factor: float = 64.0
    # chain settings
    rho: float = 0.5
    adapt: bool = True
    burn_in_increment: int = 200
    burn_in_mcmc: int = 500
    max_chain_steps: int = 1_000_000
    # scheduling and ceilings
    workers: int = 1
    paper_scale: bool = False
    max_levels: tuple[int, int] = (8, 4)

    def __post_init__(self):
        if self.M0 % self.m:
            raise ValueError(f"m={self.m} must divide M0={self.M0}")
        if self.paper_scale:
            self.max_levels = (14, 7)
            if self.cost_levels == (1, 2, 3, 4):
                self.cost_levels = (1, 2, 3, 4, 5, 6, 7)

    @property
    def params(self) -> ModelParams:
        return ModelParams(theta=self.theta, sigma=self.sigma, T=self.T, u0=self.u0)

    @property
    def base(self) -> BaseResolution:
        return BaseResolution(K0=self.K0, M0=self.M0)

    @property
    def obs(self) -> ObservationConfig:
        return ObservationConfig(m=self.m, tau2=self.tau2, T=self.T)

    @staticmethod
    def from_json(path: Path | None, **overrides) -> "ExperimentConfig":
        data = {}
        if path is not None:
            data = json.loads(Path(path).read_text())
        data.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "rates_levels" in data:
            data["rates_levels"] = tuple(data["rates_levels"])
        if "cost_levels" in data:
            data["cost_levels"] = tuple(data["cost_levels"])
        if "max_levels" in data:
            data["max_levels"] = tuple(data["max_levels"])
        return ExperimentConfig(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({c: (repr(v) if isinstance(v, float) else v) for c, v in r.items()})


def _echo_config(cfg: ExperimentConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True))


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


# --------------------------------------------------------------------------
# data fixture


def cmd_generate_data(cfg: ExperimentConfig, out: Path, force: bool = False) -> Path:
    """Write the synthetic (truth, y) fixture for the configured seed."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    record = generate_data(cfg.params, cfg.K_max, cfg.obs, cfg.seed, cfg.qoi_weighted)
    path = out / "fixture.json"
    write_fixture(record, path, force=force)
    return path


def load_or_generate_fixture(cfg: ExperimentConfig, out: Path) -> dict:
    path = Path(out) / "fixture.json"
    if path.exists():
        return read_fixture(path)
    record = generate_data(cfg.params, cfg.K_max, cfg.obs, cfg.seed, cfg.qoi_weighted)
    Path(out).mkdir(parents=True, exist_ok=True)
    write_fixture(record, path)
    return record


# --------------------------------------------------------------------------
# variance-rate study (Fig. 1 analogue)


def prior_increment_samples(
    alpha, cfg: ExperimentConfig, n_samples: int, batch_elems: int = 20_000_000
) -> np.ndarray:
    """i.i.d. coupled-prior draws of the plain mixed increment Delta phi_alpha."""
    params, base = cfg.params, cfg.base
    coefs = np.array(corner_coefficients(alpha), dtype=float)
    cs = corners(alpha)
    rng = derive_rng(cfg.seed, "prior", alpha)
    K = base.K0 * 2 ** alpha[0]
    M = base.M0 * 2 ** alpha[1]
    batch = max(1, min(n_samples, batch_elems // (K * M)))
    out = np.empty(n_samples)
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        noise = draw_noise(rng, alpha, base, shape=(b,))
        sol = coupled_solve(alpha, params, base, noise, n_obs=1)
        inc = np.zeros(b)
        for c, w in zip(cs.corners, coefs):
            inc += w * qoi(sol.final[c], cfg.qoi_weighted)
        out[done : done + b] = inc
        done += b
    return out


def chain_increment_variance(alpha, cfg: ExperimentConfig, likelihood: LikelihoodSpec, n_steps: int) -> float:
    """Variance of the weighted multi-increment along a Pi_alpha chain."""
    config = ChainConfig(n_steps=n_steps, burn_in=min(1000, max(100, n_steps // 10)), rho=cfg.rho, adapt=cfg.adapt)
    rng = derive_rng(cfg.seed, "chain", alpha)
    res = run_chain(alpha, cfg.params, cfg.base, cfg.obs, likelihood, config, rng, cfg.qoi_weighted)
    if res.phi.shape[1] == 1:
        vals = res.phi[:, 0] * res.H[:, 0]
    else:
        vals = multi_increment(res.phi, res.H, pair_signs(alpha))
    return float(vals.var(ddof=1))


def cmd_rates(cfg: ExperimentConfig, out: Path) -> dict:
    """Per-index increment variances over the level grid, with per-dimension rate fits.

    Rates are fitted one dimension at a time on the grid's axis slices (the
    alpha_t = 0 row for the space rate, the alpha_x = 0 column for the time
    rate); mixed increments decay at least as fast as the product bound, so a
    joint planar fit over the full grid would overstate both exponents.
    """
    out = Path(out)
    _echo_config(cfg, out)
    Lx, Lt = cfg.rates_levels
    if (Lx, Lt) > cfg.max_levels and not cfg.paper_scale:
        raise ValueError(f"rates grid {cfg.rates_levels} exceeds ceiling {cfg.max_levels}")
    if min(Lx, Lt) < 2:
        raise ValueError("degenerate design matrix: need at least levels (2, 2) to fit both rates")
    likelihood = None
    if cfg.rates_chain_samples > 0:
        fixture = load_or_generate_fixture(cfg, out)
        likelihood = LikelihoodSpec(y=np.asarray(fixture["y"]), tau2=cfg.tau2)

    rows = []
    for alpha in enumerate_index_set((Lx, Lt)):
        inc = prior_increment_samples(alpha, cfg, cfg.rates_samples)
        var_chain = (
            chain_increment_variance(alpha, cfg, likelihood, cfg.rates_chain_samples)
            if likelihood is not None
            else float("nan")
        )
        rows.append(
            {
                "alpha_x": alpha[0],
                "alpha_t": alpha[1],
                "n_samples": cfg.rates_samples,
                "var_prior": float(inc.var(ddof=1)),
                "var_chain": var_chain,
                "cost_units": cfg.rates_samples * cost_model(alpha, cfg.base),
            }
        )
    _write_csv(out / "rates.csv", RATES_COLUMNS, rows)

    grid = {(r["alpha_x"], r["alpha_t"]): r["var_prior"] for r in rows}
    x_slice = [(ax, 0) for ax in range(1, Lx + 1)]
    t_slice = [(0, at) for at in range(1, Lt + 1)]
    fit_x = fit_rates(x_slice, [grid[a] for a in x_slice], dims=(0,))
    fit_t = fit_rates(t_slice, [grid[a] for a in t_slice], dims=(1,))
    summary = {
        "beta_x": -float(fit_x.slopes[0]),
        "beta_x_se": float(fit_x.slope_se[0]),
        "beta_t": -float(fit_t.slopes[0]),
        "beta_t_se": float(fit_t.slope_se[0]),
        "qoi_weighted": cfg.qoi_weighted,
        "config_hash": cfg.digest(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary


# --------------------------------------------------------------------------
# cost-vs-error study (Fig. 2 analogue)


def _oracle_posterior_mean(cfg: ExperimentConfig, fixture: dict) -> float:
    spec = joint_gaussian(cfg.params, cfg.K_max, cfg.obs, LinearQoI.default(cfg.K_max, cfg.qoi_weighted))
    post = condition_on_data(spec, np.asarray(fixture["y"]), cfg.tau2)
    return posterior_qoi(post)[0]


def _cost_error_task(cfg: ExperimentConfig, fixture_y: list, oracle_mean: float, method: str, ell: int, rep: int) -> dict:
    likelihood = LikelihoodSpec(y=np.asarray(fixture_y), tau2=cfg.tau2)
    eps = 2.0 ** (1 - ell)
    t0 = time.perf_counter()
    if method == "mimcmc":
        plan = allocate_spde(eps, cfg.base, multiplier=cfg.n_multiplier)
        for a, n in plan.n_per_index.items():
            if n > cfg.max_chain_steps:
                raise ValueError(f"N_alpha={n} at {a} exceeds max_chain_steps")
        result = mimcmc_estimate(
            plan,
            cfg.params,
            cfg.base,
            cfg.obs,
            likelihood,
            cfg.seed,
            replicate=rep,
            rho=cfg.rho,
            burn_in=cfg.burn_in_increment,
            adapt=cfg.adapt,
            qoi_weighted=cfg.qoi_weighted,
        )
        estimate, cost = result.value, result.total_cost
    else:
        alpha = (2 * ell, ell)
        n_steps = min(cfg.max_chain_steps, math.ceil(cfg.mcmc_budget_factor * eps**-2))
        config = ChainConfig(n_steps=n_steps, burn_in=cfg.burn_in_mcmc, rho=cfg.rho, adapt=cfg.adapt)
        rng = derive_rng(cfg.seed, "mcmc", alpha, rep)
        estimate, _ = single_level_mcmc(
            alpha, cfg.params, cfg.base, cfg.obs, likelihood, config, rng, cfg.qoi_weighted
        )
        cost = n_steps * cost_model(alpha, cfg.base)
    wall = time.perf_counter() - t0
    return {
        "method": method,
        "eps_or_level": ell,
        "replicate": rep,
        "estimate": float(estimate),
        "sq_error": float((estimate - oracle_mean) ** 2),
        "cost_units": float(cost),
        "wall_s": round(wall, 3),
        "seed": cfg.seed,
    }


def cmd_cost_error(cfg: ExperimentConfig, out: Path) -> dict:
    """Replicated MIMCMC vs single-level MCMC error against the analytic oracle."""
    out = Path(out)
    _echo_config(cfg, out)
    for ell in cfg.cost_levels:
        if (2 * ell, ell) > cfg.max_levels:
            raise ValueError(f"precision level {ell} exceeds ceiling {cfg.max_levels}; use paper_scale")
    fixture = load_or_generate_fixture(cfg, out)
    oracle_mean = _oracle_posterior_mean(cfg, fixture)

    tasks = [
        (method, ell, rep)
        for method in ("mimcmc", "mcmc")
        for ell in cfg.cost_levels
        for rep in range(cfg.replicates)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_cost_error_task, cfg, fixture["y"], oracle_mean, *t) for t in tasks]
            rows = [f.result() for f in futures]
    else:
        rows = [_cost_error_task(cfg, fixture["y"], oracle_mean, *t) for t in tasks]
    rows.sort(key=lambda r: (r["method"], r["eps_or_level"], r["replicate"]))
    _write_csv(out / "cost_error.csv", COST_ERROR_COLUMNS, rows)

    summary = {
        "oracle_posterior_mean": oracle_mean,
        "qoi_weighted": cfg.qoi_weighted,
        "config_hash": cfg.digest(),
        "fixture_hash": file_digest(out / "fixture.json"),
    }
    for method in ("mimcmc", "mcmc"):
        pts = []
        for ell in cfg.cost_levels:
            sub = [r for r in rows if r["method"] == method and r["eps_or_level"] == ell]
            rmse = math.sqrt(sum(r["sq_error"] for r in sub) / len(sub))
            cost = sum(r["cost_units"] for r in sub) / len(sub)
            pts.append((rmse, cost))
        entry = {"rmse": [r for r, _ in pts], "mean_cost": [c for _, c in pts]}
        if len(pts) >= 2:
            fit = fit_rates([(math.log10(r), 0) for r, _ in pts], [c for _, c in pts], dims=(0,), log_base=10.0)
            entry.update(slope=float(fit.slopes[0]), slope_se=float(fit.slope_se[0]), intercept=float(fit.intercept))
        else:
            entry.update(slope=None, slope_se=None, intercept=None)
        summary[method] = entry
    # cheapest achieved cost at the tightest error both methods reach
    e_star = max(min(summary[m]["rmse"]) for m in ("mimcmc", "mcmc"))
    cost_at = {
        m: min(c for r, c in zip(summary[m]["rmse"], summary[m]["mean_cost"]) if r <= e_star)
        for m in ("mimcmc", "mcmc")
    }
    summary["tightest_common_rmse"] = e_star
    summary["cost_at_common_rmse"] = cost_at
    summary["mimcmc_cheaper"] = cost_at["mimcmc"] < cost_at["mcmc"]
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary
