"""White-box gradient attacks for probing classifier robustness.

Both attacks maximize the cross-entropy of the attacked network against a
fixed per-sample target label under an L-infinity budget. By default the
target is the network's own prediction on the unperturbed input, so no
ground truth leaks into the perturbation; ground-truth targets are opt-in.
Inputs are synthetic feature vectors, so perturbed points are not clamped
to any value range.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ruc import probvec
from ruc.errors import ConfigError
from ruc.metrics import hungarian_accuracy
from ruc.network import ClassifierNet, forward_batch, input_gradient
from ruc.synthdata import PseudoLabeledDataset

logger = logging.getLogger(__name__)

__all__ = [
    "AttackConfig",
    "attack_batch",
    "bim",
    "fgsm",
    "robustness_curve",
]


@dataclass(frozen=True)
class AttackConfig:
    """``step=None`` lets BIM default to epsilon / iterations."""

    kind: str = "fgsm"  # fgsm | bim
    epsilon: float = 0.1
    iterations: int = 5  # bim only
    step: float | None = None  # bim only
    label_mode: str = "self"  # self | gt

    def __post_init__(self):
        if self.kind not in ("fgsm", "bim"):
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.step is not None and self.step <= 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if self.label_mode not in ("self", "gt"):
            raise ConfigError(f"unknown label_mode {self.label_mode!r}")


def _check_xy(net: ClassifierNet, x: np.ndarray, targets: np.ndarray):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ConfigError(f"expected inputs of shape (n, {net.input_dim}), got {x.shape}")
    t = probvec.check_rows(targets, what="target")
    if t.shape != (x.shape[0], net.n_classes):
        raise ConfigError(f"targets shape {t.shape} does not match inputs {x.shape}")
    return x, t


def fgsm(net: ClassifierNet, x: np.ndarray, targets: np.ndarray, epsilon: float) -> np.ndarray:
    """One signed-gradient step: x + epsilon * sign(dJ/dx)."""
    x, t = _check_xy(net, x, targets)
    if epsilon < 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon == 0:
        return x.copy()
    return x + epsilon * np.sign(input_gradient(net, x, t))


def bim(
    net: ClassifierNet,
    x: np.ndarray,
    targets: np.ndarray,
    epsilon: float,
    iterations: int = 5,
    step: float | None = None,
) -> np.ndarray:
    """Iterated signed-gradient ascent, re-projected onto the epsilon ball
    around the original input after every step."""
    x, t = _check_xy(net, x, targets)
    if epsilon < 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    if epsilon == 0:
        return x.copy()
    if step is None:
        step = epsilon / iterations
    if step <= 0:
        raise ConfigError(f"step must be positive, got {step}")
    lo, hi = x - epsilon, x + epsilon
    adv = x.copy()
    for _ in range(iterations):
        adv = adv + step * np.sign(input_gradient(net, adv, t))
        np.clip(adv, lo, hi, out=adv)
    return adv


def attack_targets(
    net: ClassifierNet,
    x: np.ndarray,
    cfg: AttackConfig,
    gt: np.ndarray | None = None,
) -> np.ndarray:
    """Onehot targets for the loss being ascended: the net's own clean
    predictions (``self``) or the true labels (``gt``)."""
    if cfg.label_mode == "gt":
        if gt is None:
            raise ConfigError("label_mode 'gt' needs ground-truth labels")
        return probvec.onehot_rows(np.asarray(gt, dtype=np.int64), net.n_classes)
    return probvec.onehot_rows(np.argmax(forward_batch(net, x), axis=1), net.n_classes)


def attack_batch(
    net: ClassifierNet,
    x: np.ndarray,
    cfg: AttackConfig,
    gt: np.ndarray | None = None,
) -> np.ndarray:
    targets = attack_targets(net, x, cfg, gt)
    if cfg.kind == "fgsm":
        return fgsm(net, x, targets, cfg.epsilon)
    return bim(net, x, targets, cfg.epsilon, cfg.iterations, cfg.step)


def robustness_curve(
    net: ClassifierNet,
    dataset: PseudoLabeledDataset,
    eps_list,
    cfg: AttackConfig,
) -> np.ndarray:
    """Accuracy (optimal cluster-to-class matching) on attacked inputs, one
    value per epsilon, with the matching recomputed at each point."""
    eps_arr = np.asarray(eps_list, dtype=np.float64)
    if eps_arr.ndim != 1 or eps_arr.size == 0:
        raise ConfigError("eps_list must be a non-empty 1-d sequence")
    accs = np.empty(eps_arr.size)
    for i, eps in enumerate(eps_arr):
        adv = attack_batch(net, dataset.x, _with_eps(cfg, float(eps)), dataset.gt)
        pred = np.argmax(forward_batch(net, adv), axis=1)
        accs[i] = hungarian_accuracy(pred, dataset.gt, dataset.n_classes).accuracy
    return accs


def _with_eps(cfg: AttackConfig, eps: float) -> AttackConfig:
    return AttackConfig(cfg.kind, eps, cfg.iterations, cfg.step, cfg.label_mode)
