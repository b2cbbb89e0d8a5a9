"""Jitter augmentations, mixup and sharpening."""

import numpy as np
import pytest

from ruc import probvec
from ruc.augment import AugmentConfig, mixup, sharpen, strong_aug, weak_aug
from ruc.errors import ConfigError, InputShapeError

OFF = AugmentConfig(
    sigma_weak=0.0, sigma_strong=0.0, dropout=0.0, scale_jitter=0.0, alpha=0.75
)


def test_config_validation():
    with pytest.raises(ConfigError):
        AugmentConfig(sigma_weak=0.5, sigma_strong=0.5)  # strong must exceed weak
    with pytest.raises(ConfigError):
        AugmentConfig(sigma_weak=0.1, sigma_strong=0.0)
    with pytest.raises(ConfigError):
        AugmentConfig(sigma_weak=-0.1)
    with pytest.raises(ConfigError):
        AugmentConfig(dropout=1.0)
    with pytest.raises(ConfigError):
        AugmentConfig(alpha=-1.0)
    with pytest.raises(ConfigError):
        AugmentConfig(temperature=0.0)
    AugmentConfig(sigma_weak=0.0, sigma_strong=0.0)  # both off is allowed


def test_weak_zero_sigma_is_identity_and_draws_nothing():
    x = np.arange(12.0).reshape(3, 4)
    rng = np.random.default_rng(0)
    out = weak_aug(x, OFF, rng)
    np.testing.assert_array_equal(out, x)
    assert out is not x
    # the generator state was not advanced
    assert rng.standard_normal() == np.random.default_rng(0).standard_normal()


def test_weak_deterministic_under_rng_state():
    x = np.random.default_rng(1).standard_normal((4, 6))
    cfg = AugmentConfig()
    a = weak_aug(x, cfg, np.random.default_rng(42))
    b = weak_aug(x, cfg, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
    assert (a != x).all()


def test_weak_jitter_stddev_monte_carlo():
    # 10^4 draws of a D=16 vector: per-coordinate stddev ~ sigma within 0.01
    x = np.zeros((10_000, 16))
    out = weak_aug(x, AugmentConfig(sigma_weak=0.1, sigma_strong=0.5), np.random.default_rng(2))
    stds = out.std(axis=0)
    assert (np.abs(stds - 0.1) < 0.01).all()


def test_strong_all_knobs_zero_is_identity():
    x = np.random.default_rng(3).standard_normal((5, 7))
    rng = np.random.default_rng(4)
    np.testing.assert_array_equal(strong_aug(x, OFF, rng), x)
    assert rng.standard_normal() == np.random.default_rng(4).standard_normal()


def test_strong_dropout_fraction_monte_carlo():
    cfg = AugmentConfig(sigma_weak=0.0, sigma_strong=0.0, dropout=0.5, scale_jitter=0.0)
    x = np.ones((1, 10_000))
    out = strong_aug(x, cfg, np.random.default_rng(5))
    frac = float((out == 0.0).mean())
    assert abs(frac - 0.5) < 0.02


def test_strong_scale_is_per_sample():
    cfg = AugmentConfig(sigma_weak=0.0, sigma_strong=0.0, dropout=0.0, scale_jitter=0.5)
    x = np.ones((6, 3))
    out = strong_aug(x, cfg, np.random.default_rng(6))
    scales = out[:, 0]
    np.testing.assert_allclose(out, scales[:, None] * x, rtol=1e-15)
    assert ((scales >= 0.5) & (scales <= 1.5)).all()
    assert np.unique(scales).size == 6


def test_strong_single_vector_shape():
    cfg = AugmentConfig()
    out = strong_aug(np.ones(4), cfg, np.random.default_rng(7))
    assert out.shape == (4,)
    with pytest.raises(InputShapeError):
        strong_aug(np.ones((2, 2, 2)), cfg, np.random.default_rng(7))


# ---------------------------------------------------------------- mixup


def test_mixup_fixed_lambda_values():
    x1, x2 = np.array([2.0, 0.0]), np.array([0.0, 2.0])
    y1, y2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    rng = np.random.default_rng(8)
    xm, ym = mixup(x1, y1, x2, y2, 0.75, rng, lam=0.5)
    np.testing.assert_allclose(xm, [1.0, 1.0], rtol=1e-15)
    np.testing.assert_allclose(ym, [0.5, 0.5], rtol=1e-15)
    # lam = 0.2 is reflected to 0.8, keeping the first argument dominant
    xm, ym = mixup(x1, y1, x2, y2, 0.75, rng, lam=0.2)
    np.testing.assert_allclose(xm, 0.8 * x1 + 0.2 * x2, rtol=1e-15)
    np.testing.assert_allclose(ym, [0.8, 0.2], rtol=1e-15)


def test_mixup_equal_pair_is_fixed_point():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    y = np.array([[0.3, 0.7], [0.9, 0.1]])
    xm, ym = mixup(x, y, x.copy(), y.copy(), 0.75, np.random.default_rng(9))
    np.testing.assert_allclose(xm, x, rtol=1e-15)
    np.testing.assert_allclose(ym, y, rtol=1e-15)


def test_mixup_weights_favor_first_argument():
    rng = np.random.default_rng(10)
    x1 = np.zeros((500, 1))
    x2 = np.ones((500, 1))
    y = np.tile([0.5, 0.5], (500, 1))
    xm, ym = mixup(x1, y, x2, y, 0.75, rng)
    lam = 1.0 - xm[:, 0]  # xm = (1 - lam) * x2 here
    assert (lam >= 0.5).all() and (lam <= 1.0).all()
    assert np.unique(lam).size > 400  # one draw per pair
    assert probvec.valid_rows(ym).all()


def test_mixup_alpha_zero_passes_first_pair_through():
    rng = np.random.default_rng(11)
    x1 = np.random.default_rng(12).standard_normal((3, 4))
    y1 = np.tile([1.0, 0.0], (3, 1))
    xm, ym = mixup(x1, y1, x1 + 5, 1 - y1, 0.0, rng)
    np.testing.assert_array_equal(xm, x1)
    np.testing.assert_array_equal(ym, y1)
    assert rng.uniform() == np.random.default_rng(11).uniform()  # no beta draw


def test_mixup_shape_errors():
    rng = np.random.default_rng(13)
    with pytest.raises(InputShapeError):
        mixup(np.zeros(3), np.zeros(2), np.zeros(4), np.zeros(2), 0.5, rng)
    with pytest.raises(InputShapeError):
        mixup(np.zeros((2, 3)), np.zeros(2), np.zeros((2, 3)), np.zeros(2), 0.5, rng)


# ---------------------------------------------------------------- sharpen


def test_sharpen_temperature_one_is_identity():
    p = np.array([0.2, 0.5, 0.3])
    np.testing.assert_allclose(sharpen(p, 1.0), p, rtol=1e-12)


def test_sharpen_uniform_stays_uniform():
    p = np.full(4, 0.25)
    for t in (0.1, 0.5, 2.0, 10.0):
        np.testing.assert_allclose(sharpen(p, t), p, rtol=1e-12)


def test_sharpen_hand_value():
    # (0.8, 0.2) at T=0.5: squares (0.64, 0.04) renormalized by 0.68
    out = sharpen(np.array([0.8, 0.2]), 0.5)
    np.testing.assert_allclose(out, [0.64 / 0.68, 0.04 / 0.68], rtol=1e-12)
    np.testing.assert_allclose(out, [0.94118, 0.05882], atol=5e-6)


def test_sharpen_preserves_argmax_and_order():
    rng = np.random.default_rng(14)
    p = rng.dirichlet(np.ones(6), size=300)
    for t in (0.25, 0.5, 3.0):
        out = sharpen(p, t)
        assert probvec.valid_rows(out).all()
        np.testing.assert_array_equal(np.argmax(out, axis=1), np.argmax(p, axis=1))
        # full ordering of entries survives within every row
        np.testing.assert_array_equal(np.argsort(out, axis=1), np.argsort(p, axis=1))


def test_sharpen_low_temperature_approaches_onehot():
    out = sharpen(np.array([0.6, 0.3, 0.1]), 1e-3)
    assert out[0] > 1 - 1e-12


def test_sharpen_validation():
    with pytest.raises(ConfigError):
        sharpen(np.array([0.5, 0.5]), 0.0)
    with pytest.raises(InputShapeError):
        sharpen(np.array([0.7, 0.7]), 0.5)
