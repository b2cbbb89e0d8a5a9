"""Acceptance suite: ten end-to-end guarantees of the retraining pipeline.

Each test prints exactly one ``criterion N: PASS/FAIL - ...`` line (replayed
in a terminal section after the run) and then asserts, so a failing
criterion is visible both in the pytest report and in the printed summary.

The shared fixture trains the full pipeline and its supervised baseline on
five seeds of the canonical noisy-mixture benchmark: 4 classes at
separation 4, 2000 samples, 30% neighbor flips presented with 0.99
confidence, hybrid selection (tau1 = 0.98, k = 100), 50 epochs, smoothing
epsilon 0.1.
"""

import itertools
import math
import time
from types import SimpleNamespace

import numpy as np
import pytest

from ruc import probvec
from ruc.attacks import AttackConfig, robustness_curve
from ruc.augment import AugmentConfig, mixup, sharpen
from ruc.cli import DatasetSpec, build_dataset
from ruc.metrics import hungarian_accuracy, selection_quality
from ruc.network import (
    ClassifierNet,
    LossTerm,
    cosine_lr,
    init_net,
    init_optimizer,
    input_gradient,
    loss_and_gradients,
    loss_value,
    reinit_final_layer,
    sgd_step,
)
from ruc.robust_train import (
    TrainConfig,
    co_refine_labeled,
    guess_unlabeled,
    run_erm_baseline,
    run_ruc,
    smooth_label,
    write_baseline_log,
    write_metric_log,
)
from ruc.selection import Partition, SelectionConfig, select
from ruc.synthdata import NoiseModel

SEEDS = (0, 1, 2, 3, 4)
SPEC = DatasetSpec(n_classes=4, n_per_class=500, dim=16, separation=4.0, spread=1.0)
NOISE = NoiseModel(rate=0.30, corruption="neighbor-flip", profile="overconfident", peak=0.99)
SELECTION = SelectionConfig(tau1=0.98, k=100, strategy="hybrid")
EPS_SWEEP = (0.0, 0.05, 0.1, 0.2, 0.4)


def train_config(seed):
    return TrainConfig(selection=SELECTION, epsilon=0.1, epochs=50, seed=seed)


def check(log, num, ok, detail):
    log(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="session")
def experiment():
    """Five full pipeline runs (selection, co-training, baseline)."""
    runs = []
    for seed in SEEDS:
        start = time.monotonic()
        dataset = build_dataset(SPEC, NOISE, seed)
        partition = select(dataset, SELECTION)
        cfg = train_config(seed)
        state = run_ruc(dataset, cfg, partition=partition)
        baseline_net, baseline_history = run_erm_baseline(dataset, cfg)
        runs.append(
            SimpleNamespace(
                seed=seed,
                dataset=dataset,
                partition=partition,
                cfg=cfg,
                state=state,
                baseline_net=baseline_net,
                baseline_history=baseline_history,
                pseudo_acc=float(
                    (np.argmax(dataset.pseudo, axis=1) == dataset.gt).mean()
                ),
                elapsed=time.monotonic() - start,
            )
        )
    return runs


# ------------------------------------------------------------ criterion 1


def fd_param_grads(net, terms, step=1e-5):
    d_weights, d_biases = [], []
    for tensors, out in ((net.weights, d_weights), (net.biases, d_biases)):
        for tensor in tensors:
            grad = np.zeros_like(tensor)
            it = np.nditer(tensor, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = tensor[idx]
                tensor[idx] = orig + step
                up = loss_value(net, terms)
                tensor[idx] = orig - step
                down = loss_value(net, terms)
                tensor[idx] = orig
                grad[idx] = (up - down) / (2 * step)
            out.append(grad)
    return d_weights, d_biases


def rel_err(got, want):
    return np.max(np.abs(got - want) / np.maximum(1.0, np.maximum(np.abs(got), np.abs(want))))


def test_criterion_01_gradients_match_finite_differences(acceptance_log):
    start = time.monotonic()
    worst = 0.0
    for i in range(20):
        rng = np.random.default_rng(1000 + i)
        d = int(rng.integers(2, 5))
        c = int(rng.integers(2, 4))
        hidden = () if i % 2 == 0 else (3,)
        net = init_net(d, hidden, c, 2000 + i)
        x1, x2 = rng.standard_normal((3, d)), rng.standard_normal((3, d))
        t1 = probvec.onehot_rows(rng.integers(0, c, size=3), c)
        t2 = rng.dirichlet(np.ones(c), size=3)
        for terms in (
            [LossTerm("ce", x1, t1)],
            [LossTerm("sq", x2, t2, weight=2.5)],
            [LossTerm("ce", x1, t1), LossTerm("sq", x2, t2, weight=2.5)],
        ):
            _, grads = loss_and_gradients(net, terms)
            fd_w, fd_b = fd_param_grads(net, terms)
            for got, want in zip(grads.d_weights + grads.d_biases, fd_w + fd_b):
                worst = max(worst, rel_err(got, want))
        # per-row input gradients against single-row finite differences
        analytic = input_gradient(net, x1, t1)
        step = 1e-6
        for r in range(x1.shape[0]):
            for j in range(d):
                probe = x1[r].copy()
                probe[j] += step
                up = loss_value(net, [LossTerm("ce", probe[None, :], t1[r : r + 1])])
                probe[j] -= 2 * step
                down = loss_value(net, [LossTerm("ce", probe[None, :], t1[r : r + 1])])
                fd = (up - down) / (2 * step)
                worst = max(worst, rel_err(np.array(analytic[r, j]), np.array(fd)))
    elapsed = time.monotonic() - start
    ok = worst < 1e-4 and elapsed < 10.0
    check(
        acceptance_log, 1, ok,
        f"max relative gradient error {worst:.3g} over 20 instances in {elapsed:.1f}s",
    )


# ------------------------------------------------------------ criterion 2


def test_criterion_02_matching_equals_exhaustive_search(acceptance_log):
    start = time.monotonic()
    rng = np.random.default_rng(7)
    exact = 0
    for _ in range(200):
        c = int(rng.integers(2, 7))
        pred = rng.integers(0, c, size=80)
        gt = rng.integers(0, c, size=80)
        table = np.zeros((c, c), dtype=np.int64)
        np.add.at(table, (pred, gt), 1)
        brute = max(
            sum(int(table[row, col]) for row, col in enumerate(perm))
            for perm in itertools.permutations(range(c))
        )
        if hungarian_accuracy(pred, gt, c).matched == brute:
            exact += 1
    elapsed = time.monotonic() - start
    ok = exact == 200 and elapsed < 5.0
    check(
        acceptance_log, 2, ok,
        f"{exact}/200 random contingency tables matched exhaustive search in {elapsed:.1f}s",
    )


# ------------------------------------------------------------ criterion 3


def test_criterion_03_label_transforms_preserve_the_simplex(acceptance_log):
    n, c, d = 10_000, 5, 4
    rng = np.random.default_rng(11)
    y = rng.dirichlet(np.ones(c), size=n)
    x = rng.standard_normal((n, d))
    counter = init_net(d, (8,), c, 42)
    net2 = init_net(d, (8,), c, 43)
    outputs = {
        "smooth_label": smooth_label(y, 0.37),
        "sharpen": sharpen(y, 0.42),
        "mixup": mixup(
            x, y, x[::-1].copy(), y[::-1].copy(), 0.75, np.random.default_rng(12)
        )[1],
        "co_refine_labeled": co_refine_labeled(
            x, y, counter, rng.uniform(0, 1, size=n), 0.6
        ),
        "guess_unlabeled": guess_unlabeled(
            x, counter, net2, 2, 0.5, AugmentConfig(), np.random.default_rng(13)
        ),
    }
    worst = 0.0
    ok = True
    for name, rows in outputs.items():
        gap = float(np.abs(rows.sum(axis=1) - 1.0).max())
        worst = max(worst, gap)
        if gap > 1e-9 or (rows < 0).any():
            ok = False
    if not (np.argmax(sharpen(y, 0.42), axis=1) == np.argmax(y, axis=1)).all():
        ok = False
    check(
        acceptance_log, 3, ok,
        f"5 transforms on {n} rows: max |sum - 1| = {worst:.3g}, all entries >= 0, "
        "sharpening keeps the argmax",
    )


# ------------------------------------------------------------ criterion 4


def test_criterion_04_pipeline_reduces_to_plain_supervision(acceptance_log):
    dataset = build_dataset(SPEC, NOISE, 0)
    n = len(dataset)
    all_clean = Partition(
        clean_ids=dataset.ids.copy(),
        clean_labels=dataset.pseudo.copy(),
        unclean_ids=np.empty(0, dtype=np.int64),
        strategy="confidence",
    )
    cfg = TrainConfig(
        selection=SELECTION,
        augment=AugmentConfig(
            sigma_weak=0.0, sigma_strong=0.0, dropout=0.0, scale_jitter=0.0,
            alpha=0.0, temperature=1.0,
        ),
        epsilon=0.0,
        lambda_u=0.0,
        n_views=1,
        batch_size=n,
        epochs=1,
        co_training=False,
        use_strong_loss=False,
        refurbish=False,
        seed=123,
    )
    state = run_ruc(dataset, cfg, partition=all_clean)

    # plain supervised comparator sharing the pipeline's init streams
    seeds = np.random.SeedSequence([cfg.seed, 0]).spawn(5)
    net = init_net(dataset.n_features, cfg.hidden, dataset.n_classes, seeds[0])
    reinit_final_layer(net, seeds[2])
    opt = init_optimizer(net, cfg.lr, cfg.momentum, cfg.weight_decay)
    opt.lr = cosine_lr(0, cfg.epochs, cfg.lr)
    _, grads = loss_and_gradients(net, [LossTerm("ce", dataset.x, dataset.pseudo)])
    sgd_step(net, opt, grads)

    worst = 0.0
    trained = state.nets[0]
    for got, want in zip(trained.weights + trained.biases, net.weights + net.biases):
        worst = max(worst, float(np.abs(got - want).max()))
    ok = worst < 1e-12
    check(
        acceptance_log, 4, ok,
        f"one neutralized epoch vs one supervised step: max parameter delta {worst:.3g}",
    )


# ------------------------------------------------------------ criterion 5


def test_criterion_05_clean_set_never_shrinks(acceptance_log, experiment):
    ok_seeds = 0
    for run in experiment:
        sizes = [row.clean_size for row in run.state.history]
        if all(b >= a for a, b in zip(sizes, sizes[1:])):
            ok_seeds += 1
    ok = ok_seeds == len(experiment)
    check(
        acceptance_log, 5, ok,
        f"clean set non-decreasing across every epoch on {ok_seeds}/{len(experiment)} seeds",
    )


# ------------------------------------------------------------ criterion 6


def test_criterion_06_retraining_beats_the_pseudo_labels(acceptance_log, experiment):
    wins = 0
    details = []
    for run in experiment:
        final = run.state.history[-1].acc_net1
        if final >= run.pseudo_acc + 0.05:
            wins += 1
        details.append(f"{final:.3f}")
    total_time = sum(run.elapsed for run in experiment)
    ok = wins >= 4 and total_time < 300.0
    pseudo = experiment[0].pseudo_acc
    check(
        acceptance_log, 6, ok,
        f"final accuracy ({', '.join(details)}) >= pseudo accuracy {pseudo:.3f} + 0.05 "
        f"on {wins}/5 seeds in {total_time:.0f}s",
    )


# ------------------------------------------------------------ criterion 7


def test_criterion_07_better_calibrated_than_the_baseline(acceptance_log, experiment):
    wins = 0
    pairs = []
    for run in experiment:
        ruc_ece = run.state.history[-1].ece_net1
        base_ece = run.baseline_history[-1].ece
        if ruc_ece <= base_ece:
            wins += 1
        pairs.append(f"{ruc_ece:.3f}<={base_ece:.3f}")
    ok = wins >= 4
    check(
        acceptance_log, 7, ok,
        f"calibration error vs baseline ({'; '.join(pairs)}): better on {wins}/5 seeds",
    )


# ------------------------------------------------------------ criterion 8


def test_criterion_08_hybrid_precision_and_metric_recall(acceptance_log, experiment):
    precision_wins = 0
    recall_wins = 0
    for run in experiment:
        quality = {}
        for strategy in ("confidence", "metric", "hybrid"):
            cfg = SelectionConfig(
                tau1=SELECTION.tau1, k=SELECTION.k, strategy=strategy
            )
            quality[strategy] = selection_quality(select(run.dataset, cfg), run.dataset)
        if quality["hybrid"].precision >= (
            max(quality["confidence"].precision, quality["metric"].precision) - 0.02
        ):
            precision_wins += 1
        if quality["metric"].recall >= quality["confidence"].recall:
            recall_wins += 1
    ok = precision_wins >= 4 and recall_wins >= 4
    check(
        acceptance_log, 8, ok,
        f"hybrid precision within 0.02 of the best on {precision_wins}/5 seeds; "
        f"metric recall >= confidence recall on {recall_wins}/5 seeds",
    )


# ------------------------------------------------------------ criterion 9


def test_criterion_09_more_robust_under_attack(acceptance_log, experiment):
    fgsm_cfg = AttackConfig(kind="fgsm")
    bim_cfg = AttackConfig(kind="bim", iterations=5)
    fgsm_ruc, fgsm_base, bim_ruc, bim_base = [], [], [], []
    per_seed_wins = 0
    for run in experiment:
        r = robustness_curve(run.state.nets[0], run.dataset, EPS_SWEEP, fgsm_cfg)
        b = robustness_curve(run.baseline_net, run.dataset, EPS_SWEEP, fgsm_cfg)
        fgsm_ruc.append(r)
        fgsm_base.append(b)
        if (r >= b).all():
            per_seed_wins += 1
        bim_ruc.append(robustness_curve(run.state.nets[0], run.dataset, EPS_SWEEP, bim_cfg))
        bim_base.append(robustness_curve(run.baseline_net, run.dataset, EPS_SWEEP, bim_cfg))
    fgsm_mean_ok = bool(
        (np.mean(fgsm_ruc, axis=0) >= np.mean(fgsm_base, axis=0)).all()
    )
    bim_mean_ok = bool((np.mean(bim_ruc, axis=0) >= np.mean(bim_base, axis=0)).all())
    ok = per_seed_wins >= 3 and fgsm_mean_ok and bim_mean_ok
    check(
        acceptance_log, 9, ok,
        f"fgsm dominates at every budget on {per_seed_wins}/5 seeds, "
        f"on average {'yes' if fgsm_mean_ok else 'no'}; "
        f"bim on average {'yes' if bim_mean_ok else 'no'}",
    )


# ------------------------------------------------------------ criterion 10


def test_criterion_10_reruns_write_identical_logs(acceptance_log, experiment, tmp_path):
    first = experiment[0]
    dataset = build_dataset(SPEC, NOISE, first.seed)
    partition = select(dataset, SELECTION)
    state = run_ruc(dataset, train_config(first.seed), partition=partition)
    _, baseline_history = run_erm_baseline(dataset, train_config(first.seed))

    write_metric_log(first.state.history, tmp_path / "a.csv")
    write_metric_log(state.history, tmp_path / "b.csv")
    write_baseline_log(first.baseline_history, tmp_path / "a_base.csv")
    write_baseline_log(baseline_history, tmp_path / "b_base.csv")
    same_main = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    same_base = (
        (tmp_path / "a_base.csv").read_bytes() == (tmp_path / "b_base.csv").read_bytes()
    )
    ok = same_main and same_base
    check(
        acceptance_log, 10, ok,
        "independent reruns of seed 0 wrote byte-identical metric logs"
        if ok
        else "rerun logs differ",
    )
