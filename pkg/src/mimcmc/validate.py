"""Fast internal consistency checks, runnable without any data files.

Each check returns (name, tolerance, observed, passed); ``run_all`` prints one
line per check and reports overall success.  These are structural identities
(telescoping, coupling marginals, conditioning algebra), not statistical
experiments, so they run in seconds.
"""

from __future__ import annotations

import numpy as np

from .chain import pcn_propose
from .estimators import allocate_spde, increment_self_normalized, increment_simplified
from .forward import (
    BaseResolution,
    ModelParams,
    coarsen_space,
    coarsen_time,
    coupled_solve,
    draw_noise,
    exp_euler_solve,
    mode_rates,
    qoi,
    resolution,
    step_noise_std,
)
from .indices import corner_coefficients, corners, delta_weights, enumerate_index_set, pair_signs
from .oracle import (
    GaussianSpec,
    condition_on_data,
    condition_on_data_covariance_form,
)


def check_telescoping(rng) -> tuple[str, float, float, bool]:
    """Mixed first differences over a tensor box collapse to the corner value."""
    worst = 0.0
    for L in [(4,), (3, 3), (2, 2, 2)]:
        F = rng.standard_normal(tuple(l + 1 for l in L))
        # extend F by zero below the origin; the box sum then telescopes to F[L]
        total = 0.0
        for alpha in enumerate_index_set(L):
            w = delta_weights(alpha)
            total += sum(c_w * (F[c] if all(x >= 0 for x in c) else 0.0) for c, c_w in w.items())
        worst = max(worst, abs(total - F[tuple(L)]))
    return ("telescoping collapse", 1e-12, worst, worst < 1e-12)


def check_corner_structure(rng) -> tuple[str, float, float, bool]:
    """Corner pairing and signs reproduce the inclusion-exclusion weights."""
    bad = 0
    for alpha in [(1,), (2, 0), (1, 1), (3, 2), (1, 1, 1), (0, 2, 1)]:
        cs = corners(alpha)
        active = sum(a > 0 for a in alpha)
        if cs.k != 2**active or cs.corners[-1] != tuple(alpha):
            bad += 1
            continue
        coefs = corner_coefficients(alpha)
        if cs.k == 1:
            bad += coefs != [1]
            continue
        signs = pair_signs(alpha)
        expect = []
        for s in signs:
            expect += [-s, s]
        if coefs != expect:
            bad += 1
            continue
        lowest = min(j for j, a in enumerate(alpha) if a > 0)
        for i in range(cs.pair_count):
            lo, hi = cs.corners[2 * i], cs.corners[2 * i + 1]
            diff = tuple(h - l for h, l in zip(hi, lo))
            if sum(diff) != 1 or diff[lowest] != 1:
                bad += 1
                break
    return ("corner pairing and signs", 0.0, float(bad), bad == 0)


def check_time_coupling_variance() -> tuple[str, float, float, bool]:
    """Aggregated fine increments have exactly the coarse-step variance."""
    params = ModelParams()
    K, h = 2**10, 1.0 / 640
    v_f = step_noise_std(params, K, h) ** 2
    v_c = step_noise_std(params, K, 2 * h) ** 2
    combined = np.exp(-2.0 * mode_rates(K) * h) * v_f + v_f
    err = float(np.abs(combined / v_c - 1.0).max())
    return ("time-coupling variance identity", 1e-12, err, err < 1e-12)


def check_coupled_marginals(rng) -> tuple[str, float, float, bool]:
    """Each corner solve equals a direct solve driven by the coarsened noise."""
    params, base = ModelParams(), BaseResolution()
    alpha = (2, 1)
    noise = draw_noise(rng, alpha, base, shape=(3,))
    sol = coupled_solve(alpha, params, base, noise, n_obs=20)
    fine = resolution(alpha, base, params.T)
    xi = noise * step_noise_std(params, fine.K, fine.h_t)[:, None]
    worst = 0.0
    for c in corners(alpha).corners:
        res_c = resolution(c, base, params.T)
        xi_c = xi if res_c.M == fine.M else coarsen_time(xi, params, fine.h_t)
        xi_c = coarsen_space(xi_c, res_c.K)
        direct = exp_euler_solve(params, res_c, xi_c, n_checkpoints=20, prescaled=True)
        worst = max(worst, float(np.abs(direct[..., -1] - sol.final[c]).max()))
    return ("coupled corner marginals", 1e-12, worst, worst < 1e-12)


def check_pcn_invariance(rng) -> tuple[str, float, float, bool]:
    """One pCN step leaves standard normal moments unchanged (statistically)."""
    n = 200_000
    x = rng.standard_normal(n)
    y = pcn_propose(x, 0.37, rng)
    err = max(abs(float(y.mean())), abs(float(y.var()) - 1.0))
    return ("pCN proposal invariance", 0.02, err, err < 0.02)


def check_estimator_identity(rng) -> tuple[str, float, float, bool]:
    """Self-normalized estimator equals the simplified form at sample-mean normalizers."""
    alpha = (1, 1)
    n, k = 500, 4
    phi = rng.standard_normal((n, k))
    H = rng.uniform(0.1, 1.0, (n, k))
    a = increment_self_normalized(phi, H, alpha).value
    b = increment_simplified(phi, H, alpha, H.mean(axis=0)).value
    err = abs(a - b)
    return ("estimator route identity", 1e-12, err, err < 1e-12)


def check_conditioning_routes(rng) -> tuple[str, float, float, bool]:
    """Information-form and covariance-form Gaussian updates agree."""
    dim, n_obs = 25, 12
    A = rng.standard_normal((dim, dim))
    spec = GaussianSpec(mean=rng.standard_normal(dim), cov=A @ A.T + dim * np.eye(dim))
    y = rng.standard_normal(n_obs)
    p1 = condition_on_data(spec, y, 0.1)
    p2 = condition_on_data_covariance_form(spec, y, 0.1)
    err = max(float(np.abs(p1.mean - p2.mean).max()), float(np.abs(p1.cov - p2.cov).max()))
    return ("conditioning route agreement", 1e-8, err, err < 1e-8)


def check_allocation() -> tuple[str, float, float, bool]:
    """Closed-form sample counts follow the 2^(-alpha_x - 1.5 alpha_t) profile."""
    plan = allocate_spde(2.0**-4, BaseResolution())
    if plan.max_levels != (10, 5):
        return ("allocation closed form", 0.0, 1.0, False)
    worst = 0.0
    for a, n in plan.n_per_index.items():
        raw = 2.0**8 * 10 * 2.0 ** (-a[0] - 1.5 * a[1])
        worst = max(worst, abs(n - np.ceil(raw)) if raw >= 1 else abs(n - 1))
    return ("allocation closed form", 0.0, worst, worst == 0.0)


def check_deterministic_telescoping() -> tuple[str, float, float, bool]:
    """With sigma = 0 the increment sum over the box equals the finest QoI."""
    params, base = ModelParams(sigma=0.0), BaseResolution()
    L = (3, 2)
    total = 0.0
    for alpha in enumerate_index_set(L):
        fine = resolution(alpha, base, params.T)
        noise = np.zeros((fine.K, fine.M))
        sol = coupled_solve(alpha, params, base, noise, n_obs=1)
        total += sum(w * qoi(sol.final[c], False) for c, w in delta_weights(alpha).items())
    fine = resolution(L, base, params.T)
    direct = float(qoi(exp_euler_solve(params, fine, np.zeros((fine.K, fine.M)), 1)[..., -1], False))
    err = abs(total - direct)
    return ("deterministic telescoping", 1e-12, err, err < 1e-12)


def run_all(seed: int = 0, verbose: bool = True) -> bool:
    rng = np.random.default_rng(seed)
    checks = [
        check_telescoping(rng),
        check_corner_structure(rng),
        check_time_coupling_variance(),
        check_coupled_marginals(rng),
        check_pcn_invariance(rng),
        check_estimator_identity(rng),
        check_conditioning_routes(rng),
        check_allocation(),
        check_deterministic_telescoping(),
    ]
    ok = True
    for name, tol, observed, passed in checks:
        ok &= bool(passed)
        if verbose:
            status = "PASS" if passed else "FAIL"
            print(f"{status}  {name:36s} tol={tol:<8g} observed={observed:.3e}")
    if verbose:
        print("all checks passed" if ok else "FAILURES present")
    return ok
