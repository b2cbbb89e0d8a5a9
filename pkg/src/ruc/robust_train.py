"""Semi-supervised retraining of noisy pseudo-labels with two co-trained nets.

The pipeline partitions a pseudo-labeled dataset into clean and unclean
samples, then trains (by default) two networks. Per epoch and per network,
each batch combines three ingredients: a cross-entropy term on strongly
augmented clean samples against smoothed labels, a cross-entropy term on
mixed clean samples whose labels were refined toward the other network's
prediction, and a squared-error consistency term on mixed unclean samples
against sharpened label guesses averaged over weak augmentations of both
networks. At the end of every epoch, unclean samples that either network
classifies with confidence above a scheduled threshold are promoted into
the clean set with onehot labels; the clean set never shrinks.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ruc import probvec
from ruc.augment import AugmentConfig, mixup, sharpen, strong_aug, weak_aug
from ruc.errors import ConfigError, NumericError, TrainingDiverged
from ruc.metrics import evaluate_classifier
from ruc.network import (
    ClassifierNet,
    LossTerm,
    OptimizerState,
    cosine_lr,
    forward_batch,
    init_net,
    init_optimizer,
    loss_and_gradients,
    loss_value,
    reinit_final_layer,
    sgd_step,
)
from ruc.selection import (
    Partition,
    SelectionConfig,
    Tau2Schedule,
    select,
    tau2_at,
)
from ruc.synthdata import EmbeddingProvider, PseudoLabeledDataset

logger = logging.getLogger(__name__)

__all__ = [
    "BaselineMetrics",
    "CoTrainState",
    "EpochMetrics",
    "TrainConfig",
    "co_refine_labeled",
    "co_refurbish",
    "guess_unlabeled",
    "loss_labeled",
    "loss_strong",
    "loss_unlabeled",
    "mixmatch",
    "refine_weights",
    "run_erm_baseline",
    "run_ruc",
    "smooth_label",
    "total_loss",
    "write_baseline_log",
    "write_metric_log",
]

METRIC_COLUMNS = [
    "epoch",
    "acc_net1",
    "acc_net2",
    "ece_net1",
    "ece_net2",
    "clean_size",
    "tau2",
    "loss_total",
]


@dataclass(frozen=True)
class TrainConfig:
    """Everything the retraining loop needs besides the dataset.

    ``epsilon`` is the smoothing mass moved off the labeled class; with
    ``epsilon_mode="uniform"`` it is instead drawn per sample from U(0, 1)
    at every use. ``co_training=False`` trains a single network with the
    refinement weight forced to zero, ``use_strong_loss=False`` drops the
    strong-augmentation term, ``refurbish=False`` freezes the clean set.
    """

    selection: SelectionConfig = SelectionConfig()
    augment: AugmentConfig = AugmentConfig()
    tau2: Tau2Schedule = Tau2Schedule()
    epsilon: float = 0.5
    epsilon_mode: str = "fixed"  # fixed | uniform
    n_views: int = 2  # weak augmentations per unlabeled sample
    lambda_u: float = 25.0  # weight of the consistency term
    batch_size: int = 100
    epochs: int = 50
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0005
    hidden: tuple[int, ...] = (64,)
    seed: int = 0
    co_training: bool = True
    use_strong_loss: bool = True
    refurbish: bool = True
    eval_bins: int = 15

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.epsilon_mode not in ("fixed", "uniform"):
            raise ConfigError(f"unknown epsilon_mode {self.epsilon_mode!r}")
        if self.n_views < 1:
            raise ConfigError(f"n_views must be >= 1, got {self.n_views}")
        if self.lambda_u < 0:
            raise ConfigError(f"lambda_u must be >= 0, got {self.lambda_u}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.eval_bins < 1:
            raise ConfigError(f"eval_bins must be >= 1, got {self.eval_bins}")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    acc_net1: float
    acc_net2: float
    ece_net1: float
    ece_net2: float
    clean_size: int
    tau2: float
    loss_total: float


@dataclass(frozen=True)
class BaselineMetrics:
    epoch: int
    acc: float
    ece: float
    loss: float


@dataclass
class CoTrainState:
    """Mutable training state; rows index into the training dataset."""

    nets: list[ClassifierNet]
    optimizers: list[OptimizerState]
    clean_rows: np.ndarray
    clean_labels: np.ndarray
    unclean_rows: np.ndarray
    strategy: str
    epoch: int
    history: list[EpochMetrics]

    def partition(self, dataset: PseudoLabeledDataset) -> Partition:
        return Partition(
            clean_ids=dataset.ids[self.clean_rows].copy(),
            clean_labels=self.clean_labels.copy(),
            unclean_ids=dataset.ids[self.unclean_rows].copy(),
            strategy=self.strategy,
        )


def smooth_label(y: np.ndarray, epsilon) -> np.ndarray:
    """Move ``epsilon`` of the label mass uniformly onto the other classes:
    (1 - eps) * y + eps / (C - 1) * (1 - y). Accepts a scalar epsilon or one
    value per row."""
    rows = probvec.check_rows(y, what="label")
    c = rows.shape[1]
    if c < 2:
        raise ConfigError("smoothing needs at least two classes")
    eps = np.asarray(epsilon, dtype=np.float64)
    if (eps < 0).any() or (eps >= 1).any():
        raise ConfigError("epsilon must be in [0, 1)")
    if eps.ndim == 1:
        eps = eps[:, None]
    elif eps.ndim != 0:
        raise ConfigError("epsilon must be a scalar or one value per row")
    out = (1.0 - eps) * rows + (eps / (c - 1)) * (1.0 - rows)
    return out[0] if np.asarray(y).ndim == 1 else out


def refine_weights(counter_probs: np.ndarray) -> np.ndarray:
    """Per-sample refinement weights from the counter network's confidence,
    min-max normalized over the batch window; a constant batch yields 0.5."""
    conf = probvec.as_rows(counter_probs).max(axis=1)
    if conf.size == 0:
        return conf
    lo, hi = conf.min(), conf.max()
    if hi <= lo:
        return np.full(conf.shape, 0.5)
    return (conf - lo) / (hi - lo)


def co_refine_labeled(
    x: np.ndarray,
    y: np.ndarray,
    counter_net: ClassifierNet | None,
    w,
    temperature: float,
) -> np.ndarray:
    """Sharpened blend of the kept label with the counter net's prediction:
    sharpen((1 - w) y + w f_counter(x), T). ``w`` is scalar or per row;
    without a counter network the blend degenerates to sharpen(y, T)."""
    rows = probvec.check_rows(y, what="label")
    w = np.asarray(w, dtype=np.float64)
    if (w < 0).any() or (w > 1).any():
        raise ConfigError("refinement weight must lie in [0, 1]")
    if counter_net is None:
        mixed = rows
    else:
        pred = forward_batch(counter_net, x)
        wv = w[:, None] if w.ndim == 1 else w
        mixed = (1.0 - wv) * rows + wv * pred
    out = sharpen(mixed, temperature)
    return out[0] if np.asarray(y).ndim == 1 else out


def guess_unlabeled(
    u: np.ndarray,
    net1: ClassifierNet,
    net2: ClassifierNet | None,
    n_views: int,
    temperature: float,
    cfg: AugmentConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sharpened average prediction over ``n_views`` weak augmentations,
    with each view scored by both networks (or just net1 if net2 is None)."""
    if n_views < 1:
        raise ConfigError(f"n_views must be >= 1, got {n_views}")
    u = np.asarray(u, dtype=np.float64)
    single = u.ndim == 1
    if single:
        u = u[None, :]
    total = np.zeros((u.shape[0], net1.n_classes))
    for _ in range(n_views):
        view = weak_aug(u, cfg, rng)
        total += forward_batch(net1, view)
        if net2 is not None:
            total += forward_batch(net2, view)
    total /= n_views * (2 if net2 is not None else 1)
    out = sharpen(total, temperature)
    return out[0] if single else out


def mixmatch(
    x_labeled: np.ndarray,
    y_labeled: np.ndarray,
    x_unlabeled: np.ndarray,
    y_unlabeled: np.ndarray,
    alpha: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Mix both pools pairwise against a shuffle of their union.

    Returns (mixed labeled x, labels, mixed unlabeled x, guesses) with the
    input sizes. An empty labeled pool simply yields empty labeled outputs
    while the unlabeled pool mixes against itself, and vice versa.
    """
    if x_labeled.ndim != 2 or x_unlabeled.ndim != 2:
        raise ConfigError("mixmatch expects batched (2-d) inputs")
    nl = x_labeled.shape[0]
    all_x = np.concatenate([x_labeled, x_unlabeled], axis=0)
    all_y = np.concatenate([y_labeled, y_unlabeled], axis=0)
    perm = rng.permutation(all_x.shape[0])
    px, py = all_x[perm], all_y[perm]
    xh, yh = mixup(x_labeled, y_labeled, px[:nl], py[:nl], alpha, rng)
    uh, qh = mixup(x_unlabeled, y_unlabeled, px[nl:], py[nl:], alpha, rng)
    return xh, yh, uh, qh


def _loss_terms(
    x_strong, y_smooth, x_mixed, y_mixed, u_mixed, q_mixed, lambda_u, use_strong=True
) -> list[LossTerm]:
    terms = []
    if use_strong and x_strong.shape[0]:
        terms.append(LossTerm("ce", x_strong, y_smooth))
    if x_mixed.shape[0]:
        terms.append(LossTerm("ce", x_mixed, y_mixed))
    if lambda_u != 0 and u_mixed.shape[0]:
        terms.append(LossTerm("sq", u_mixed, q_mixed, weight=lambda_u))
    return terms


def loss_labeled(net: ClassifierNet, x_mixed, y_mixed) -> float:
    """Mean cross-entropy on the mixed clean batch (empty batch: 0)."""
    return loss_value(net, [LossTerm("ce", x_mixed, y_mixed)])


def loss_unlabeled(net: ClassifierNet, u_mixed, q_mixed) -> float:
    """Mean squared L2 between predictions and mixed guesses (empty: 0)."""
    return loss_value(net, [LossTerm("sq", u_mixed, q_mixed)])


def loss_strong(
    net: ClassifierNet,
    x: np.ndarray,
    y: np.ndarray,
    epsilon,
    cfg: AugmentConfig,
    rng: np.random.Generator,
) -> float:
    """Mean cross-entropy of smoothed labels against predictions on
    strongly augmented inputs."""
    return loss_value(
        net, [LossTerm("ce", strong_aug(x, cfg, rng), smooth_label(y, epsilon))]
    )


def total_loss(
    net: ClassifierNet,
    x_strong,
    y_smooth,
    x_mixed,
    y_mixed,
    u_mixed,
    q_mixed,
    lambda_u: float,
    use_strong: bool = True,
) -> float:
    """Strong + labeled + lambda_u * unlabeled on pre-built batches."""
    if lambda_u < 0:
        raise ConfigError(f"lambda_u must be >= 0, got {lambda_u}")
    return loss_value(
        net,
        _loss_terms(x_strong, y_smooth, x_mixed, y_mixed, u_mixed, q_mixed, lambda_u, use_strong),
    )


def co_refurbish(
    u_x: np.ndarray,
    net1: ClassifierNet,
    net2: ClassifierNet | None,
    tau2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Promotion mask plus onehot labels for the promoted rows.

    Each sample is scored by whichever network is more confident on it
    (net1 wins ties); the sample is promoted iff that confidence strictly
    exceeds tau2.
    """
    if not 1.0 / net1.n_classes < tau2 <= 1.0:
        raise ConfigError(
            f"tau2 must be in (1/C, 1] = ({1.0 / net1.n_classes:g}, 1], got {tau2}"
        )
    u_x = np.asarray(u_x, dtype=np.float64)
    if u_x.shape[0] == 0:
        return np.zeros(0, dtype=bool), np.zeros((0, net1.n_classes))
    best = forward_batch(net1, u_x)
    if net2 is not None:
        p2 = forward_batch(net2, u_x)
        use2 = p2.max(axis=1) > best.max(axis=1)
        best = np.where(use2[:, None], p2, best)
    mask = best.max(axis=1) > tau2
    labels = probvec.onehot_rows(np.argmax(best[mask], axis=1), net1.n_classes)
    return mask, labels


def _epoch_batches(rng, n_clean, n_unclean, batch_size):
    """Per-step position arrays into the clean and unclean pools.

    Both pools are reshuffled; the shorter one is padded by resampling with
    replacement so the two pools produce the same number of batches. An
    empty pool contributes empty batches.
    """
    longest = max(n_clean, n_unclean)
    if longest == 0:
        return []
    n_batches = -(-longest // batch_size)
    total = n_batches * batch_size

    def plan(m):
        if m == 0:
            return [np.empty(0, dtype=np.int64)] * n_batches
        perm = rng.permutation(m)
        pad = rng.choice(m, size=total - m, replace=True)
        return np.split(np.concatenate([perm, pad]), n_batches)

    clean_plan = plan(n_clean)
    unclean_plan = plan(n_unclean)
    return list(zip(clean_plan, unclean_plan))


def _train_batch(dataset, state, cfg, net, counter, opt, x_pos, u_pos, rng):
    c = dataset.n_classes
    x_b = dataset.x[state.clean_rows[x_pos]]
    y_b = state.clean_labels[x_pos]
    u_b = dataset.x[state.unclean_rows[u_pos]]
    temp = cfg.augment.temperature

    if cfg.epsilon_mode == "uniform":
        eps = rng.uniform(0.0, 1.0, size=x_b.shape[0])
    else:
        eps = cfg.epsilon
    y_smooth = smooth_label(y_b, eps)

    if counter is not None and x_b.shape[0]:
        w = refine_weights(forward_batch(counter, x_b))
    else:
        w = np.zeros(x_b.shape[0])
    y_bar = co_refine_labeled(x_b, y_b, counter, w, temp)

    if u_b.shape[0]:
        q_bar = guess_unlabeled(u_b, net, counter, cfg.n_views, temp, cfg.augment, rng)
    else:
        q_bar = np.zeros((0, c))

    xh, yh, uh, qh = mixmatch(x_b, y_bar, u_b, q_bar, cfg.augment.alpha, rng)

    if cfg.use_strong_loss and x_b.shape[0]:
        xs = strong_aug(x_b, cfg.augment, rng)
    else:
        xs, y_smooth = np.zeros((0, dataset.n_features)), np.zeros((0, c))

    terms = _loss_terms(xs, y_smooth, xh, yh, uh, qh, cfg.lambda_u)
    if not terms:
        return 0.0
    loss, grads = loss_and_gradients(net, terms)
    sgd_step(net, opt, grads)
    return loss


def _snapshot(state, dataset, cfg, tau2, loss_total):
    evals = [evaluate_classifier(net, dataset, cfg.eval_bins) for net in state.nets]
    if len(evals) == 1:
        evals.append(evals[0])
    (a1, c1, _), (a2, c2, _) = evals
    state.history.append(
        EpochMetrics(
            epoch=state.epoch,
            acc_net1=a1.accuracy,
            acc_net2=a2.accuracy,
            ece_net1=c1.ece,
            ece_net2=c2.ece,
            clean_size=int(state.clean_rows.size),
            tau2=tau2,
            loss_total=loss_total,
        )
    )


def run_ruc(
    dataset: PseudoLabeledDataset,
    cfg: TrainConfig,
    provider: EmbeddingProvider | None = None,
    partition: Partition | None = None,
) -> CoTrainState:
    """Select clean samples, then co-train with mixing, refinement,
    guessing and end-of-epoch refurbishing.

    The returned state carries the trained nets, the final partition and
    one metrics row per epoch (plus an epoch-0 row for the untrained nets).
    The clean set can only grow. Fully deterministic given the dataset and
    ``cfg.seed``.
    """
    if dataset.pseudo is None:
        raise ConfigError("dataset has no pseudo-labels; apply a noise model first")
    if len(dataset) == 0:
        raise ConfigError("cannot train on an empty dataset")
    if partition is None:
        partition = select(dataset, cfg.selection, provider)

    seeds = np.random.SeedSequence([cfg.seed, 0]).spawn(5)
    rng = np.random.default_rng(seeds[4])
    n_nets = 2 if cfg.co_training else 1
    nets, opts = [], []
    for i in range(n_nets):
        net = init_net(dataset.n_features, cfg.hidden, dataset.n_classes, seeds[i])
        # Fresh output head on top of the fresh body mirrors the protocol of
        # retraining from a pretrained feature extractor; it also keeps the
        # head seed stream independent of the body's.
        reinit_final_layer(net, seeds[2 + i])
        nets.append(net)
        opts.append(init_optimizer(net, cfg.lr, cfg.momentum, cfg.weight_decay))

    state = CoTrainState(
        nets=nets,
        optimizers=opts,
        clean_rows=dataset.rows_of(partition.clean_ids),
        clean_labels=partition.clean_labels.copy(),
        unclean_rows=dataset.rows_of(partition.unclean_ids),
        strategy=partition.strategy,
        epoch=0,
        history=[],
    )
    if state.clean_rows.size == 0:
        logger.warning(
            "initial clean set is empty; training on guesses until refurbishing promotes samples"
        )
    _snapshot(state, dataset, cfg, tau2_at(0, cfg.tau2), math.nan)

    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg.epochs, cfg.lr)
        for opt in opts:
            opt.lr = lr
            opt.epoch = epoch
        losses = []
        tau2 = tau2_at(epoch, cfg.tau2)
        try:
            for k in range(n_nets):
                net = state.nets[k]
                counter = state.nets[1 - k] if n_nets == 2 else None
                batches = _epoch_batches(
                    rng, state.clean_rows.size, state.unclean_rows.size, cfg.batch_size
                )
                for x_pos, u_pos in batches:
                    loss = _train_batch(
                        dataset, state, cfg, net, counter, opts[k], x_pos, u_pos, rng
                    )
                    if not math.isfinite(loss):
                        raise TrainingDiverged("loss is non-finite", epoch=epoch)
                    losses.append(loss)

            if cfg.refurbish and state.unclean_rows.size:
                u_x = dataset.x[state.unclean_rows]
                mask, labels = co_refurbish(
                    u_x, state.nets[0], state.nets[1] if n_nets == 2 else None, tau2
                )
                if mask.any():
                    state.clean_rows = np.concatenate(
                        [state.clean_rows, state.unclean_rows[mask]]
                    )
                    state.clean_labels = np.concatenate([state.clean_labels, labels])
                    state.unclean_rows = state.unclean_rows[~mask]

            state.epoch = epoch + 1
            _snapshot(
                state, dataset, cfg, tau2, float(np.mean(losses)) if losses else math.nan
            )
        except NumericError as exc:
            raise TrainingDiverged(f"numeric failure: {exc}", epoch=epoch) from exc
    return state


def run_erm_baseline(
    dataset: PseudoLabeledDataset, cfg: TrainConfig
) -> tuple[ClassifierNet, list[BaselineMetrics]]:
    """Plain supervised comparator: one net, cross-entropy against every
    pseudo-label as given, same optimizer, schedule and batching."""
    if dataset.pseudo is None:
        raise ConfigError("dataset has no pseudo-labels; apply a noise model first")
    if len(dataset) == 0:
        raise ConfigError("cannot train on an empty dataset")
    seeds = np.random.SeedSequence([cfg.seed, 1]).spawn(3)
    net = init_net(dataset.n_features, cfg.hidden, dataset.n_classes, seeds[0])
    reinit_final_layer(net, seeds[1])
    opt = init_optimizer(net, cfg.lr, cfg.momentum, cfg.weight_decay)
    rng = np.random.default_rng(seeds[2])

    history = []

    def log(epoch, loss):
        assignment, calibration, _ = evaluate_classifier(net, dataset, cfg.eval_bins)
        history.append(BaselineMetrics(epoch, assignment.accuracy, calibration.ece, loss))

    log(0, math.nan)
    for epoch in range(cfg.epochs):
        opt.lr = cosine_lr(epoch, cfg.epochs, cfg.lr)
        opt.epoch = epoch
        losses = []
        try:
            for pos, _ in _epoch_batches(rng, len(dataset), 0, cfg.batch_size):
                terms = [LossTerm("ce", dataset.x[pos], dataset.pseudo[pos])]
                loss, grads = loss_and_gradients(net, terms)
                if not math.isfinite(loss):
                    raise TrainingDiverged("loss is non-finite", epoch=epoch)
                sgd_step(net, opt, grads)
                losses.append(loss)
            log(epoch + 1, float(np.mean(losses)))
        except NumericError as exc:
            raise TrainingDiverged(f"numeric failure: {exc}", epoch=epoch) from exc
    return net, history


def write_metric_log(rows: list[EpochMetrics], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.epoch,
                    f"{r.acc_net1:.6f}",
                    f"{r.acc_net2:.6f}",
                    f"{r.ece_net1:.6f}",
                    f"{r.ece_net2:.6f}",
                    r.clean_size,
                    f"{r.tau2:.4f}",
                    f"{r.loss_total:.9g}",
                ]
            )


def write_baseline_log(rows: list[BaselineMetrics], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "acc", "ece", "loss"])
        for r in rows:
            writer.writerow([r.epoch, f"{r.acc:.6f}", f"{r.ece:.6f}", f"{r.loss:.9g}"])
