"""Command line front end.

Verbs: ``gen`` (synthesize a noisy pseudo-labeled dataset), ``select``
(partition it into clean/unclean), ``train`` (run the full per-seed
experiment: dataset, selection, co-training, supervised baseline, attacks,
per-seed report), ``attack`` (recompute robustness curves from saved nets)
and ``report`` (aggregate across seed directories).

All verbs share ``--config`` (an INI file overriding the built-in
defaults), ``--seed`` (comma list) and ``--out``. Every artifact of seed s
lives under ``<out>/<s>/``. Exit codes: 0 success, 1 runtime failure,
2 invalid configuration or arguments.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ruc import _kernels
from ruc.attacks import AttackConfig, robustness_curve
from ruc.augment import AugmentConfig
from ruc.errors import (
    ConfigError,
    EvaluationError,
    NumericError,
    ParseError,
    TrainingDiverged,
)
from ruc.metrics import evaluate_classifier, selection_quality
from ruc.network import load_net, save_net
from ruc.robust_train import (
    TrainConfig,
    run_erm_baseline,
    run_ruc,
    write_baseline_log,
    write_metric_log,
)
from ruc.selection import SelectionConfig, Tau2Schedule, save_partition, select
from ruc.synthdata import (
    EmbeddingProvider,
    NoiseModel,
    PseudoLabeledDataset,
    apply_noise,
    gen_gaussian_mixture,
    load_dataset,
    save_dataset,
)

logger = logging.getLogger(__name__)

VERSION = "0.1.0"

DEFAULTS = {
    "dataset": {
        "n_classes": "4",
        "n_per_class": "500",
        "dim": "16",
        "separation": "4.0",
        "spread": "1.0",
    },
    "noise": {
        "rate": "0.3",
        "corruption": "neighbor-flip",
        "profile": "overconfident",
        "peak": "0.99",
        "temperature": "4.0",
    },
    "selection": {
        "tau1": "0.99",
        "k": "100",
        "strategy": "hybrid",
        "embedding": "identity",
        "embed_dim": "",
        "embed_seed": "0",
    },
    "augment": {
        "sigma_weak": "0.1",
        "sigma_strong": "0.5",
        "dropout": "0.1",
        "scale_jitter": "0.1",
        "alpha": "0.75",
        "temperature": "0.5",
    },
    "train": {
        "epsilon": "0.5",
        "epsilon_mode": "fixed",
        "n_views": "2",
        "lambda_u": "25.0",
        "batch_size": "100",
        "epochs": "50",
        "lr": "0.01",
        "momentum": "0.9",
        "weight_decay": "0.0005",
        "hidden": "64",
        "tau2_start": "0.9",
        "tau2_step": "0.02",
        "tau2_every": "40",
        "tau2_cap": "1.0",
        "eval_bins": "15",
    },
    "ablation": {
        "no_smoothing": "false",
        "no_cotrain": "false",
        "mixmatch_only": "false",
    },
    "attack": {
        "kind": "fgsm",
        "epsilons": "0,0.05,0.1,0.2,0.3,0.5",
        "iterations": "5",
        "step": "",
        "label_mode": "self",
    },
    "run": {
        "out": "runs",
        "seeds": "0",
    },
}

REPORT_INPUTS = [
    "dataset.txt",
    "partition.txt",
    "metrics.csv",
    "baseline_metrics.csv",
    "robustness.csv",
    "report.json",
]


@dataclass(frozen=True)
class DatasetSpec:
    n_classes: int = 4
    n_per_class: int = 500
    dim: int = 16
    separation: float = 4.0
    spread: float = 1.0


@dataclass(frozen=True)
class Settings:
    """One fully resolved configuration, independent of the seed."""

    dataset: DatasetSpec
    noise: NoiseModel
    train: TrainConfig
    embedding: EmbeddingProvider
    attack: AttackConfig
    epsilons: tuple[float, ...]
    out: Path
    seeds: tuple[int, ...]


class _Section:
    """One INI section with defaults and typed, validated access."""

    def __init__(self, name: str, values: dict):
        self.name = name
        self.values = values

    def _raw(self, key: str) -> str:
        return self.values[key]

    def str(self, key: str) -> str:
        return self._raw(key).strip()

    def int(self, key: str) -> int:
        raw = self.str(key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be an integer, got {raw!r}")

    def float(self, key: str) -> float:
        raw = self.str(key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be a number, got {raw!r}")

    def bool(self, key: str) -> bool:
        raw = self.str(key).lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{self.name}] {key} must be a boolean, got {raw!r}")

    def floats(self, key: str) -> tuple[float, ...]:
        raw = self.str(key)
        if not raw:
            return ()
        try:
            return tuple(float(tok) for tok in raw.split(","))
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be comma-separated numbers")

    def ints(self, key: str) -> tuple[int, ...]:
        raw = self.str(key)
        if not raw:
            return ()
        try:
            return tuple(int(tok) for tok in raw.split(","))
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be comma-separated integers")


def _read_config(path: str | None) -> dict[str, _Section]:
    merged = {name: dict(keys) for name, keys in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}")
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}")
        for section in parser.sections():
            if section not in merged:
                raise ConfigError(
                    f"unknown config section [{section}] (expected one of "
                    f"{', '.join(sorted(merged))})"
                )
            for key, value in parser.items(section):
                if key not in merged[section]:
                    raise ConfigError(
                        f"unknown key {key!r} in section [{section}] (expected one of "
                        f"{', '.join(sorted(merged[section]))})"
                    )
                merged[section][key] = value
    return {name: _Section(name, values) for name, values in merged.items()}


def load_settings(args) -> Settings:
    cfg = _read_config(getattr(args, "config", None))

    ds = cfg["dataset"]
    dataset = DatasetSpec(
        n_classes=ds.int("n_classes"),
        n_per_class=ds.int("n_per_class"),
        dim=ds.int("dim"),
        separation=ds.float("separation"),
        spread=ds.float("spread"),
    )

    nz = cfg["noise"]
    noise = NoiseModel(
        rate=nz.float("rate"),
        corruption=nz.str("corruption"),
        profile=nz.str("profile"),
        peak=nz.float("peak"),
        temperature=nz.float("temperature"),
    )

    sel = cfg["selection"]
    selection = SelectionConfig(
        tau1=sel.float("tau1"), k=sel.int("k"), strategy=sel.str("strategy")
    )
    embed_mode = sel.str("embedding")
    if embed_mode == "trained-encoder":
        raise ConfigError(
            "the trained-encoder embedding needs a network object and is only "
            "available through the library API"
        )
    embedding = EmbeddingProvider(
        mode=embed_mode,
        out_dim=sel.int("embed_dim") if sel.str("embed_dim") else None,
        seed=sel.int("embed_seed"),
    )

    au = cfg["augment"]
    augment = AugmentConfig(
        sigma_weak=au.float("sigma_weak"),
        sigma_strong=au.float("sigma_strong"),
        dropout=au.float("dropout"),
        scale_jitter=au.float("scale_jitter"),
        alpha=au.float("alpha"),
        temperature=au.float("temperature"),
    )

    ab = cfg["ablation"]
    no_smoothing = ab.bool("no_smoothing") or getattr(args, "no_smoothing", False)
    no_cotrain = ab.bool("no_cotrain") or getattr(args, "no_cotrain", False)
    mixmatch_only = ab.bool("mixmatch_only") or getattr(args, "mixmatch_only", False)

    tr = cfg["train"]
    train = TrainConfig(
        selection=selection,
        augment=augment,
        tau2=Tau2Schedule(
            start=tr.float("tau2_start"),
            step=tr.float("tau2_step"),
            every=tr.int("tau2_every"),
            cap=tr.float("tau2_cap"),
        ),
        epsilon=0.0 if no_smoothing else tr.float("epsilon"),
        epsilon_mode=tr.str("epsilon_mode"),
        n_views=tr.int("n_views"),
        lambda_u=tr.float("lambda_u"),
        batch_size=tr.int("batch_size"),
        epochs=tr.int("epochs"),
        lr=tr.float("lr"),
        momentum=tr.float("momentum"),
        weight_decay=tr.float("weight_decay"),
        hidden=tr.ints("hidden"),
        co_training=not no_cotrain,
        use_strong_loss=not mixmatch_only,
        eval_bins=tr.int("eval_bins"),
    )

    at = cfg["attack"]
    step = at.str("step")
    attack = AttackConfig(
        kind=at.str("kind"),
        iterations=at.int("iterations"),
        step=float(step) if step else None,
        label_mode=at.str("label_mode"),
    )
    epsilons = at.floats("epsilons")
    if not epsilons:
        raise ConfigError("[attack] epsilons must list at least one value")

    run = cfg["run"]
    seeds = _parse_seeds(getattr(args, "seed", None)) or run.ints("seeds")
    if not seeds:
        raise ConfigError("no seeds given (flag --seed or [run] seeds)")
    if any(s < 0 for s in seeds):
        raise ConfigError(f"seeds must be non-negative, got {seeds}")
    out = Path(getattr(args, "out", None) or run.str("out"))
    return Settings(dataset, noise, train, embedding, attack, epsilons, out, seeds)


def _parse_seeds(raw: str | None) -> tuple[int, ...]:
    if raw is None:
        return ()
    try:
        return tuple(int(tok) for tok in raw.split(","))
    except ValueError:
        raise ConfigError(f"--seed must be a comma list of integers, got {raw!r}")


def build_dataset(spec: DatasetSpec, noise: NoiseModel, seed: int) -> PseudoLabeledDataset:
    """The canonical per-seed experiment dataset: a Gaussian mixture with
    noisy pseudo-labels, both derived deterministically from ``seed``."""
    clean = gen_gaussian_mixture(
        spec.n_classes, spec.n_per_class, spec.dim, spec.separation, spec.spread, seed
    )
    return apply_noise(clean, noise, np.random.SeedSequence([seed, 2]))


def _seed_dir(settings: Settings, seed: int) -> Path:
    path = settings.out / str(seed)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_or_build_dataset(settings: Settings, seed: int, data: str | None):
    if data is not None:
        return load_dataset(data)
    path = settings.out / str(seed) / "dataset.txt"
    if path.exists():
        logger.info("seed %d: reusing %s", seed, path)
        return load_dataset(path)
    dataset = build_dataset(settings.dataset, settings.noise, seed)
    _seed_dir(settings, seed)
    save_dataset(dataset, path)
    logger.info("seed %d: wrote %s (%d samples)", seed, path, len(dataset))
    return dataset


def _settings_dict(settings: Settings) -> dict:
    train = dataclasses.asdict(settings.train)
    train.pop("seed")  # the manifest's own seed field is authoritative
    return {
        "dataset": dataclasses.asdict(settings.dataset),
        "noise": dataclasses.asdict(settings.noise),
        "train": train,
        "embedding": {
            "mode": settings.embedding.mode,
            "out_dim": settings.embedding.out_dim,
            "seed": settings.embedding.seed,
        },
        "attack": {
            **dataclasses.asdict(settings.attack),
            "epsilons": list(settings.epsilons),
        },
    }


def _write_manifest(settings: Settings, seed: int, verb: str) -> None:
    manifest = {
        "tool": "ruc",
        "version": VERSION,
        "verb": verb,
        "seed": seed,
        "backend": _kernels.BACKEND,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "settings": _settings_dict(settings),
    }
    path = _seed_dir(settings, seed) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")


def _quality_dict(partition, dataset) -> dict:
    q = selection_quality(partition, dataset)
    return {
        "n_clean": int(partition.n_clean),
        "precision": float(q.precision),
        "recall": float(q.recall),
        "f1": float(q.f1),
        "degenerate": bool(q.degenerate),
    }


def _confidence_histogram(dataset, partition, bins: int = 10) -> dict:
    conf = dataset.pseudo.max(axis=1)
    clean_rows = dataset.rows_of(partition.clean_ids)
    mask = np.zeros(len(dataset), dtype=bool)
    mask[clean_rows] = True
    edges = np.linspace(0.0, 1.0, bins + 1)
    clean_counts, _ = np.histogram(conf[mask], bins=edges)
    unclean_counts, _ = np.histogram(conf[~mask], bins=edges)
    return {
        "edges": edges.tolist(),
        "clean": clean_counts.tolist(),
        "unclean": unclean_counts.tolist(),
    }


def run_experiment(settings: Settings, seed: int, data: str | None = None) -> dict:
    """Full per-seed pipeline; returns the per-seed report dict.

    Writes dataset.txt, partition.txt, metrics.csv, baseline_metrics.csv,
    net1.net (and net2.net when co-training), baseline.net, robustness.csv,
    report.json and manifest.json under ``<out>/<seed>/``.
    """
    out = _seed_dir(settings, seed)
    dataset = _load_or_build_dataset(settings, seed, data)
    if not (out / "dataset.txt").exists():  # keep the seed dir self-contained
        save_dataset(dataset, out / "dataset.txt")
    train_cfg = dataclasses.replace(settings.train, seed=seed)

    partition = select(dataset, train_cfg.selection, settings.embedding)
    save_partition(partition, out / "partition.txt")
    logger.info(
        "seed %d: %s selection kept %d of %d samples",
        seed,
        partition.strategy,
        partition.n_clean,
        len(dataset),
    )

    state = run_ruc(dataset, train_cfg, settings.embedding, partition)
    write_metric_log(state.history, out / "metrics.csv")
    save_net(state.nets[0], out / "net1.net")
    if len(state.nets) > 1:
        save_net(state.nets[1], out / "net2.net")

    baseline_net, baseline_history = run_erm_baseline(dataset, train_cfg)
    write_baseline_log(baseline_history, out / "baseline_metrics.csv")
    save_net(baseline_net, out / "baseline.net")

    ruc_curve = robustness_curve(state.nets[0], dataset, settings.epsilons, settings.attack)
    base_curve = robustness_curve(baseline_net, dataset, settings.epsilons, settings.attack)
    _write_robustness(out / "robustness.csv", settings.epsilons, base_curve, ruc_curve)

    report = _seed_report(settings, seed, dataset, partition, state, baseline_history)
    report["robustness"] = {
        "epsilon": list(settings.epsilons),
        "baseline": base_curve.tolist(),
        "ruc": ruc_curve.tolist(),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    _write_manifest(settings, seed, "train")
    final = state.history[-1]
    logger.info(
        "seed %d: final accuracy %.4f (baseline %.4f), ece %.4f (baseline %.4f)",
        seed,
        final.acc_net1,
        baseline_history[-1].acc,
        final.ece_net1,
        baseline_history[-1].ece,
    )
    return report


def _write_robustness(path, epsilons, base_curve, ruc_curve) -> None:
    lines = ["epsilon,accuracy_baseline,accuracy_ruc"]
    for eps, b, r in zip(epsilons, base_curve, ruc_curve):
        lines.append(f"{eps:g},{b:.6f},{r:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")


def _seed_report(settings, seed, dataset, partition, state, baseline_history) -> dict:
    pseudo_acc = float((np.argmax(dataset.pseudo, axis=1) == dataset.gt).mean())
    final = state.history[-1]
    strategies = {}
    for strategy in ("confidence", "metric", "hybrid"):
        cfg = dataclasses.replace(settings.train.selection, strategy=strategy)
        strategies[strategy] = _quality_dict(
            select(dataset, cfg, settings.embedding), dataset
        )
    return {
        "seed": seed,
        "backend": _kernels.BACKEND,
        "pseudo_label_accuracy": pseudo_acc,
        "final": {
            "acc_net1": final.acc_net1,
            "acc_net2": final.acc_net2,
            "ece_net1": final.ece_net1,
            "ece_net2": final.ece_net2,
            "clean_size": final.clean_size,
            "acc_baseline": baseline_history[-1].acc,
            "ece_baseline": baseline_history[-1].ece,
        },
        "selection": {
            "used": partition.strategy,
            **strategies,
        },
        "confidence_histogram": _confidence_histogram(dataset, partition),
    }


def _cmd_gen(args) -> int:
    settings = load_settings(args)
    for seed in settings.seeds:
        out = _seed_dir(settings, seed)
        dataset = build_dataset(settings.dataset, settings.noise, seed)
        save_dataset(dataset, out / "dataset.txt")
        _write_manifest(settings, seed, "gen")
        pseudo_acc = float((np.argmax(dataset.pseudo, axis=1) == dataset.gt).mean())
        print(
            f"seed {seed}: wrote {out / 'dataset.txt'} "
            f"({len(dataset)} samples, pseudo-label accuracy {pseudo_acc:.4f})"
        )
    return 0


def _cmd_select(args) -> int:
    settings = load_settings(args)
    for seed in settings.seeds:
        out = _seed_dir(settings, seed)
        dataset = _load_or_build_dataset(settings, seed, args.data)
        partition = select(dataset, settings.train.selection, settings.embedding)
        save_partition(partition, out / "partition.txt")
        q = _quality_dict(partition, dataset)
        print(
            f"seed {seed}: {partition.strategy} kept {q['n_clean']}/{len(dataset)} "
            f"(precision {q['precision']:.4f}, recall {q['recall']:.4f}, "
            f"f1 {q['f1']:.4f})"
        )
    return 0


def _cmd_train(args) -> int:
    settings = load_settings(args)
    for seed in settings.seeds:
        report = run_experiment(settings, seed, args.data)
        final = report["final"]
        print(
            f"seed {seed}: accuracy {final['acc_net1']:.4f} "
            f"(baseline {final['acc_baseline']:.4f}), "
            f"ece {final['ece_net1']:.4f} (baseline {final['ece_baseline']:.4f}), "
            f"clean set {final['clean_size']}"
        )
    return 0


def _cmd_attack(args) -> int:
    settings = load_settings(args)
    for seed in settings.seeds:
        out = settings.out / str(seed)
        missing = [
            name
            for name in ("dataset.txt", "net1.net", "baseline.net")
            if not (out / name).exists()
        ]
        if missing:
            raise EvaluationError(
                f"seed dir {out} is missing {', '.join(missing)}; run `ruc train` first"
            )
        dataset = load_dataset(out / "dataset.txt")
        ruc_net = load_net(out / "net1.net")
        baseline_net = load_net(out / "baseline.net")
        ruc_curve = robustness_curve(ruc_net, dataset, settings.epsilons, settings.attack)
        base_curve = robustness_curve(
            baseline_net, dataset, settings.epsilons, settings.attack
        )
        _write_robustness(out / "robustness.csv", settings.epsilons, base_curve, ruc_curve)
        for eps, b, r in zip(settings.epsilons, base_curve, ruc_curve):
            print(f"seed {seed}: eps={eps:g} baseline {b:.4f} ruc {r:.4f}")
    return 0


def _stat(values) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(arr.mean()),
        "stddev": float(arr.std()),
        "values": arr.tolist(),
    }


def _cmd_report(args) -> int:
    settings = load_settings(args)
    seed_dirs = sorted(
        (int(p.name), p)
        for p in settings.out.iterdir()
        if p.is_dir() and p.name.lstrip("-").isdigit()
    ) if settings.out.is_dir() else []
    if not seed_dirs:
        raise EvaluationError(
            f"no seed directories under {settings.out}; expected <out>/<seed>/ dirs "
            f"containing {', '.join(REPORT_INPUTS)}"
        )
    gaps = []
    reports = {}
    for seed, path in seed_dirs:
        missing = [name for name in REPORT_INPUTS if not (path / name).exists()]
        if missing:
            gaps.append(f"{seed}: missing {', '.join(missing)}")
            continue
        try:
            reports[seed] = json.loads((path / "report.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            gaps.append(f"{seed}: unreadable report.json ({exc})")
    if not reports:
        raise EvaluationError(
            f"no complete seed directory under {settings.out} "
            f"(each needs {', '.join(REPORT_INPUTS)}): " + "; ".join(gaps)
        )

    seeds = sorted(reports)
    aggregate = {
        "seeds": seeds,
        "n_seeds": len(seeds),
        "gaps": gaps,
        "final_acc_ruc": _stat([reports[s]["final"]["acc_net1"] for s in seeds]),
        "final_acc_baseline": _stat([reports[s]["final"]["acc_baseline"] for s in seeds]),
        "final_ece_ruc": _stat([reports[s]["final"]["ece_net1"] for s in seeds]),
        "final_ece_baseline": _stat([reports[s]["final"]["ece_baseline"] for s in seeds]),
        "pseudo_label_accuracy": _stat(
            [reports[s]["pseudo_label_accuracy"] for s in seeds]
        ),
        "selection": {},
        "robustness": {},
    }
    for strategy in ("confidence", "metric", "hybrid"):
        aggregate["selection"][strategy] = {
            metric: _stat([reports[s]["selection"][strategy][metric] for s in seeds])
            for metric in ("precision", "recall", "f1")
        }
    eps0 = reports[seeds[0]]["robustness"]["epsilon"]
    if all(reports[s]["robustness"]["epsilon"] == eps0 for s in seeds):
        aggregate["robustness"] = {
            "epsilon": eps0,
            "ruc": [
                _stat([reports[s]["robustness"]["ruc"][i] for s in seeds])
                for i in range(len(eps0))
            ],
            "baseline": [
                _stat([reports[s]["robustness"]["baseline"][i] for s in seeds])
                for i in range(len(eps0))
            ],
        }
    else:
        gaps.append("robustness: epsilon grids differ across seeds; not aggregated")

    out_path = settings.out / "report.json"
    out_path.write_text(json.dumps(aggregate, indent=2) + "\n")
    if gaps:
        for gap in gaps:
            logger.warning("partial report: %s", gap)
    print(
        f"aggregated {len(seeds)} seed(s) -> {out_path}: "
        f"accuracy {aggregate['final_acc_ruc']['mean']:.4f} "
        f"+/- {aggregate['final_acc_ruc']['stddev']:.4f} "
        f"(baseline {aggregate['final_acc_baseline']['mean']:.4f}), "
        f"ece {aggregate['final_ece_ruc']['mean']:.4f} "
        f"(baseline {aggregate['final_ece_baseline']['mean']:.4f})"
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruc",
        description="Clean-sample selection and robust retraining on noisy "
        "pseudo-labels over synthetic Gaussian mixtures.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="INI file overriding defaults")
    common.add_argument("--seed", metavar="LIST", help="comma-separated seeds")
    common.add_argument("--out", metavar="DIR", help="output root (default: runs)")
    common.add_argument(
        "-v", "--verbose", action="store_true", help="debug-level logging"
    )
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    p = sub.add_parser("gen", parents=[common], help="generate noisy datasets")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("select", parents=[common], help="partition clean/unclean")
    p.add_argument("--data", metavar="FILE", help="dataset file (default: per-seed)")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("train", parents=[common], help="run the full experiment")
    p.add_argument("--data", metavar="FILE", help="dataset file (default: per-seed)")
    p.add_argument(
        "--no-smoothing",
        dest="no_smoothing",
        action="store_true",
        help="ablation: train without label smoothing",
    )
    p.add_argument(
        "--no-cotrain",
        dest="no_cotrain",
        action="store_true",
        help="ablation: single network, no co-refinement",
    )
    p.add_argument(
        "--mixmatch-only",
        dest="mixmatch_only",
        action="store_true",
        help="ablation: drop the strong-augmentation loss term",
    )
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("attack", parents=[common], help="recompute robustness curves")
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("report", parents=[common], help="aggregate seed directories")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        logger.error("invalid configuration: %s", exc)
        return 2
    except TrainingDiverged as exc:
        logger.error("training aborted: %s", exc)
        return 1
    except (EvaluationError, NumericError, OSError) as exc:
        logger.error("run failed: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
