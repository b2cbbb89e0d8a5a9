"""Signed-gradient attacks and the accuracy-vs-budget sweep.

A hand-built linear net on four collinear points gives exact expected
accuracies at every budget, since each attacked point moves by exactly
epsilon along the first coordinate.
"""

import numpy as np
import pytest

from ruc import probvec
from ruc.attacks import AttackConfig, attack_batch, attack_targets, bim, fgsm, robustness_curve
from ruc.errors import ConfigError
from ruc.metrics import evaluate_classifier
from ruc.network import ClassifierNet, LossTerm, forward_batch, init_net, loss_value
from ruc.synthdata import PseudoLabeledDataset


def random_net(seed=0, d=4, c=3):
    return init_net(d, (8,), c, seed)


def random_problem(seed=0, n=12, d=4, c=3):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    t = probvec.onehot_rows(rng.integers(0, c, size=n), c)
    return x, t


def sign_net():
    """Classifies by the sign of the first coordinate (class 0 = positive)."""
    return ClassifierNet([np.array([[1.0, -1.0], [0.0, 0.0]])], [np.zeros(2)])


def sign_dataset():
    x = np.array([[-3.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    return PseudoLabeledDataset(
        x=x, gt=[1, 1, 0, 0], ids=np.arange(4), n_classes=2, pseudo=None
    )


# ---------------------------------------------------------------- config


def test_attack_config_validation():
    with pytest.raises(ConfigError, match="attack kind"):
        AttackConfig(kind="pgd")
    with pytest.raises(ConfigError):
        AttackConfig(epsilon=-0.1)
    with pytest.raises(ConfigError):
        AttackConfig(iterations=0)
    with pytest.raises(ConfigError):
        AttackConfig(step=0.0)
    with pytest.raises(ConfigError, match="label_mode"):
        AttackConfig(label_mode="both")


# ---------------------------------------------------------------- fgsm


def test_fgsm_zero_budget_copies_input():
    net = random_net()
    x, t = random_problem()
    adv = fgsm(net, x, t, 0.0)
    assert adv is not x
    np.testing.assert_array_equal(adv, x)


def test_fgsm_moves_each_coordinate_by_epsilon():
    net = random_net()
    x, t = random_problem()
    adv = fgsm(net, x, t, 0.25)
    diff = np.abs(adv - x)
    assert diff.max() <= 0.25 * (1 + 1e-12)
    # generic gradients have no exact zeros, so every coordinate saturates
    np.testing.assert_allclose(diff, 0.25, atol=1e-12)


def test_fgsm_closed_form_on_linear_net():
    rng = np.random.default_rng(2)
    w = rng.standard_normal((4, 3))
    net = ClassifierNet([w], [rng.standard_normal(3) * 0.1])
    x, t = random_problem(seed=3, d=4, c=3)
    p = forward_batch(net, x)
    expected = x + 0.1 * np.sign((p - t) @ w.T)
    np.testing.assert_allclose(fgsm(net, x, t, 0.1), expected, atol=1e-12)


def test_fgsm_increases_the_attacked_loss():
    net = random_net(seed=5)
    x, t = random_problem(seed=5)
    adv = fgsm(net, x, t, 1e-3)
    clean = loss_value(net, [LossTerm("ce", x, t)])
    attacked = loss_value(net, [LossTerm("ce", adv, t)])
    assert attacked > clean


def test_fgsm_input_validation():
    net = random_net()
    x, t = random_problem()
    with pytest.raises(ConfigError):
        fgsm(net, x, t, -0.1)
    with pytest.raises(ConfigError, match="shape"):
        fgsm(net, x[:, :2], t, 0.1)
    with pytest.raises(ConfigError, match="targets"):
        fgsm(net, x, t[:-1], 0.1)


# ---------------------------------------------------------------- bim


def test_bim_single_full_step_equals_fgsm():
    net = random_net(seed=1)
    x, t = random_problem(seed=1)
    a = bim(net, x, t, 0.2, iterations=1, step=0.2)
    b = fgsm(net, x, t, 0.2)
    np.testing.assert_array_equal(a, b)


def test_bim_respects_the_ball_despite_oversized_steps():
    net = random_net(seed=4)
    x, t = random_problem(seed=4)
    eps = 0.1
    adv = bim(net, x, t, eps, iterations=4, step=eps)  # total movement 4x budget
    assert np.abs(adv - x).max() <= eps * (1 + 1e-12)


def test_bim_default_step_is_budget_over_iterations():
    net = random_net(seed=6)
    x, t = random_problem(seed=6)
    a = bim(net, x, t, 0.2, iterations=4)
    b = bim(net, x, t, 0.2, iterations=4, step=0.05)
    np.testing.assert_array_equal(a, b)


def test_bim_zero_budget_copies_input():
    net = random_net()
    x, t = random_problem()
    adv = bim(net, x, t, 0.0, iterations=3)
    assert adv is not x
    np.testing.assert_array_equal(adv, x)


def test_bim_validation():
    net = random_net()
    x, t = random_problem()
    with pytest.raises(ConfigError):
        bim(net, x, t, 0.1, iterations=0)
    with pytest.raises(ConfigError):
        bim(net, x, t, 0.1, iterations=2, step=-0.01)


# ---------------------------------------------------------------- targets


def test_attack_targets_self_mode():
    net = sign_net()
    ds = sign_dataset()
    targets = attack_targets(net, ds.x, AttackConfig())
    pred = np.argmax(forward_batch(net, ds.x), axis=1)
    np.testing.assert_array_equal(targets, probvec.onehot_rows(pred, 2))


def test_attack_targets_gt_mode():
    net = sign_net()
    ds = sign_dataset()
    cfg = AttackConfig(label_mode="gt")
    targets = attack_targets(net, ds.x, cfg, gt=ds.gt)
    np.testing.assert_array_equal(targets, probvec.onehot_rows(ds.gt, 2))
    with pytest.raises(ConfigError, match="ground-truth"):
        attack_targets(net, ds.x, cfg)


def test_attack_batch_dispatches_by_kind():
    net = random_net(seed=7)
    x, _ = random_problem(seed=7)
    t = attack_targets(net, x, AttackConfig())
    got = attack_batch(net, x, AttackConfig(kind="fgsm", epsilon=0.1))
    np.testing.assert_array_equal(got, fgsm(net, x, t, 0.1))
    got = attack_batch(net, x, AttackConfig(kind="bim", epsilon=0.1, iterations=3))
    np.testing.assert_array_equal(got, bim(net, x, t, 0.1, iterations=3))


# ---------------------------------------------------------------- sweep


def test_robustness_curve_exact_values_on_sign_problem():
    # each point sits 1 or 3 away from the decision boundary; a budget of 2
    # flips exactly the near pair, which no class relabeling can repair
    accs = robustness_curve(sign_net(), sign_dataset(), [0.0, 0.5, 2.0], AttackConfig())
    np.testing.assert_array_equal(accs, [1.0, 1.0, 0.5])


def test_robustness_curve_zero_budget_matches_clean_eval():
    net = random_net(seed=8, d=3, c=2)
    rng = np.random.default_rng(8)
    ds = PseudoLabeledDataset(
        x=rng.standard_normal((30, 3)),
        gt=rng.integers(0, 2, size=30),
        ids=np.arange(30),
        n_classes=2,
        pseudo=None,
    )
    accs = robustness_curve(net, ds, [0.0], AttackConfig(kind="bim"))
    assignment, _, _ = evaluate_classifier(net, ds)
    assert accs.shape == (1,)
    assert accs[0] == assignment.accuracy


def test_robustness_curve_validation():
    net = sign_net()
    ds = sign_dataset()
    with pytest.raises(ConfigError, match="non-empty"):
        robustness_curve(net, ds, [], AttackConfig())
    with pytest.raises(ConfigError):
        robustness_curve(net, ds, [[0.1]], AttackConfig())
