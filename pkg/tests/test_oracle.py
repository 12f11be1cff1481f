import numpy as np
import pytest

from mimcmc.forward import BaseResolution, ModelParams, ObservationConfig
from mimcmc.oracle import (
    GaussianSpec,
    LinearQoI,
    condition_on_data,
    condition_on_data_covariance_form,
    discrete_joint_gaussian,
    discrete_posterior,
    generate_data,
    joint_gaussian,
    mode_moments,
    posterior_qoi,
    read_fixture,
    recurrence_moments,
    sample_modes_at_times,
    write_fixture,
)

PARAMS = ModelParams()
BASE = BaseResolution()


def test_mode_moments_frozen_values():
    # independently computed (30-digit arithmetic) closed forms at t = 1
    mean, var = mode_moments(PARAMS, np.array([1, 2, 3]), 1.0)
    assert np.allclose(mean, [8.5277117282608763e-5, 1.1800171550399474e-17, 4.3683222764679048e-39], rtol=1e-14)
    assert np.allclose(var, [0.053364045584013563, 0.012827611553530704, 0.0056608191410049776], rtol=1e-14)


def test_mode_moments_zero_time():
    mean, var = mode_moments(PARAMS, 1, 0.0)
    assert mean == pytest.approx(1.0)
    assert var == pytest.approx(0.0)


def test_mode_moments_rejects_unstable():
    with pytest.raises(ValueError):
        mode_moments(ModelParams(theta=9.0), 0.9, 1.0)  # pi^2 k^2 < theta


def test_gaussian_spec_symmetry_check():
    with pytest.raises(ValueError):
        GaussianSpec(mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_conditioning_routes_agree_on_random_spd():
    rng = np.random.default_rng(0)
    for dim in (8, 32, 64):
        A = rng.standard_normal((dim, dim))
        spec = GaussianSpec(mean=rng.standard_normal(dim), cov=A @ A.T + dim * np.eye(dim))
        y = rng.standard_normal(dim // 2)
        p1 = condition_on_data(spec, y, 0.3)
        p2 = condition_on_data_covariance_form(spec, y, 0.3)
        scale = np.abs(p1.cov).max()
        assert np.abs(p1.mean - p2.mean).max() < 1e-10 * max(1.0, scale)
        assert np.abs(p1.cov - p2.cov).max() < 1e-10 * max(1.0, scale)


def test_conditioning_contracts_variance():
    obs = ObservationConfig(m=4)
    spec = joint_gaussian(PARAMS, 64, obs)
    post = condition_on_data(spec, np.zeros(obs.size), obs.tau2)
    assert posterior_qoi(post)[1] < spec.cov[-1, -1]
    with pytest.raises(ValueError):
        condition_on_data(spec, np.zeros(spec.mean.shape[0]), obs.tau2)


def test_joint_gaussian_matches_monte_carlo():
    obs = ObservationConfig(m=2)
    spec = joint_gaussian(PARAMS, 8, obs, LinearQoI.default(8))
    rng = np.random.default_rng(1)
    modes = sample_modes_at_times(PARAMS, 8, obs.times, rng, n_samples=200_000)
    from mimcmc.forward import sine_basis

    k = np.arange(1, 9)
    slots = np.concatenate(
        [np.einsum("nkt,k->nt", modes, sine_basis(k, x)) for x in obs.locations], axis=1
    )
    emp = np.cov(slots.T)
    scale = np.abs(spec.cov[: obs.size, : obs.size]).max()
    assert np.abs(emp - spec.cov[: obs.size, : obs.size]).max() < 0.02 * scale
    assert np.abs(slots.mean(axis=0) - spec.mean[: obs.size]).max() < 0.01


def test_generate_data_deterministic_and_roundtrip(tmp_path):
    obs = ObservationConfig(m=4)
    a = generate_data(PARAMS, 128, obs, 7)
    b = generate_data(PARAMS, 128, obs, 7)
    c = generate_data(PARAMS, 128, obs, 8)
    assert a["y"] == b["y"]
    assert a["y"] != c["y"]
    assert len(a["y"]) == obs.size
    p = tmp_path / "fix.json"
    write_fixture(a, p)
    assert read_fixture(p) == a
    with pytest.raises(FileExistsError):
        write_fixture(a, p)
    write_fixture(c, p, force=True)
    assert read_fixture(p) == c


def test_recurrence_moments_match_long_run_sampling():
    from mimcmc.forward import exp_euler_solve, resolution

    res = resolution((1, 0), BASE)
    em, ev = recurrence_moments(PARAMS, res.K, res.M, res.h_t)
    rng = np.random.default_rng(2)
    noise = rng.standard_normal((50_000, res.K, res.M))
    u = exp_euler_solve(PARAMS, res, noise, n_checkpoints=1)[..., -1]
    assert np.abs((u.mean(0) - em) / np.sqrt(ev / 50_000)).max() < 4.5
    assert np.abs((u.var(0) - ev) / (ev * np.sqrt(2 / 50_000))).max() < 4.5


def test_discrete_joint_gaussian_diag_matches_recurrence():
    obs = ObservationConfig(m=4)
    alpha = (1, 0)
    spec = discrete_joint_gaussian(alpha, PARAMS, BASE, obs, qoi_weighted=False)
    from mimcmc.forward import qoi_weights, resolution

    res = resolution(alpha, BASE)
    em, ev = recurrence_moments(PARAMS, res.K, res.M, res.h_t)
    w = qoi_weights(res.K, False)
    assert spec.mean[-1] == pytest.approx(w @ em)
    assert spec.cov[-1, -1] == pytest.approx(w @ (ev * w))


def test_discrete_posterior_converges_to_continuum():
    obs = ObservationConfig(m=4)
    y = 0.1 * np.ones(obs.size)
    cont_spec = joint_gaussian(PARAMS, 4096, obs, LinearQoI.default(4096, False))
    cont = posterior_qoi(condition_on_data(cont_spec, y, obs.tau2))[0]
    errs = [abs(discrete_posterior(a, PARAMS, BASE, obs, y, qoi_weighted=False)[0] - cont)
            for a in [(1, 0), (3, 1), (5, 2)]]
    assert errs[2] < errs[0]
    assert errs[2] < 1e-3


def test_sample_modes_requires_increasing_times():
    with pytest.raises(ValueError):
        sample_modes_at_times(PARAMS, 4, np.array([0.5, 0.5]), np.random.default_rng(0))
