import numpy as np
import pytest

from mimcmc.indices import pair_signs
from mimcmc.weights import (
    LikelihoodSpec,
    corner_weights,
    log_likelihood,
    multi_increment,
    multi_increment_scaled,
)


def test_likelihood_spec_validation():
    with pytest.raises(ValueError):
        LikelihoodSpec(y=np.zeros(3), tau2=0.0)


def test_log_likelihood_value():
    spec = LikelihoodSpec(y=np.array([1.0, 0.0]), tau2=0.5)
    got = log_likelihood(spec, np.array([0.0, 2.0]))
    assert got == pytest.approx(-(1.0 + 4.0) / 1.0)


def test_log_likelihood_batched_and_mismatch():
    spec = LikelihoodSpec(y=np.zeros(3), tau2=1.0)
    out = log_likelihood(spec, np.ones((4, 3)))
    assert out.shape == (4,)
    assert np.allclose(out, -1.5)
    with pytest.raises(ValueError):
        log_likelihood(spec, np.ones(2))


def test_corner_weights_max_is_one():
    log_g = np.array([[-3.0, -1.0, -2.0], [-10.0, -30.0, -5.0]])
    cw = corner_weights(log_g)
    assert np.allclose(cw.H.max(axis=-1), 1.0)
    assert np.allclose(cw.log_G, [-1.0, -5.0])
    assert np.all(cw.H <= 1.0)


def test_corner_weights_rejects_non_finite():
    with pytest.raises(ValueError):
        corner_weights(np.array([0.0, -np.inf]))


def test_multi_increment_two_corners():
    phi = np.array([[1.0, 3.0]])
    H = np.array([[0.5, 1.0]])
    # one pair with sign +1: phi_1 H_1 - phi_0 H_0
    assert multi_increment(phi, H, [1])[0] == pytest.approx(3.0 - 0.5)


def test_multi_increment_four_corners_signs():
    signs = pair_signs((1, 1))
    phi = np.ones((1, 4))
    H = np.array([[0.2, 0.4, 0.6, 0.8]])
    expect = signs[0] * (0.4 - 0.2) + signs[1] * (0.8 - 0.6)
    assert multi_increment(phi, H, signs)[0] == pytest.approx(expect)


def test_multi_increment_shape_validation():
    with pytest.raises(ValueError):
        multi_increment(np.ones((2, 3)), np.ones((2, 3)), [1])
    with pytest.raises(ValueError):
        multi_increment(np.ones((2, 4)), np.ones((2, 4)), [1])


def test_scaled_increment_is_G_times_plain():
    rng = np.random.default_rng(3)
    log_g = rng.normal(size=(6, 4))
    phi = rng.normal(size=(6, 4))
    cw = corner_weights(log_g)
    signs = pair_signs((2, 1))
    got = multi_increment_scaled(phi, cw, signs)
    assert np.allclose(got, np.exp(cw.log_G) * multi_increment(phi, cw.H, signs))
