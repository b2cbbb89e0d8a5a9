"""Clean/unclean partitioning of pseudo-labeled samples.

Three strategies: confidence (keep samples whose pseudo-label max exceeds a
threshold), metric (keep samples whose k nearest neighbors in an embedding
space vote for the sample's own pseudo class), and hybrid (their
intersection). Every strategy keeps the surviving samples' pseudo-label
vectors as the initial clean labels and discards labels of the rest.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ruc import _kernels as K
from ruc import probvec
from ruc.errors import ConfigError, ParseError
from ruc.synthdata import EmbeddingProvider, PseudoLabeledDataset, embed_all

__all__ = [
    "Partition",
    "SelectionConfig",
    "Tau2Schedule",
    "load_partition",
    "save_partition",
    "select",
    "select_confidence",
    "select_hybrid",
    "select_metric",
    "tau2_at",
]


@dataclass(frozen=True)
class SelectionConfig:
    tau1: float = 0.99  # confidence threshold, strict
    k: int = 100  # neighbors for the metric vote
    strategy: str = "hybrid"  # confidence | metric | hybrid

    def __post_init__(self):
        if not 0.0 < self.tau1 < 1.0:
            raise ConfigError(f"tau1 must be in (0, 1), got {self.tau1}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.strategy not in ("confidence", "metric", "hybrid"):
            raise ConfigError(f"unknown strategy {self.strategy!r}")


@dataclass
class Partition:
    """Clean ids with their kept labels, unclean ids, and the strategy tag.

    Ids appear in dataset order; together the two id arrays cover every
    sample exactly once.
    """

    clean_ids: np.ndarray
    clean_labels: np.ndarray  # (len(clean_ids), C)
    unclean_ids: np.ndarray
    strategy: str

    @property
    def n_clean(self) -> int:
        return int(self.clean_ids.size)


def _partition_from_mask(
    dataset: PseudoLabeledDataset, keep: np.ndarray, strategy: str
) -> Partition:
    return Partition(
        clean_ids=dataset.ids[keep].copy(),
        clean_labels=dataset.pseudo[keep].copy(),
        unclean_ids=dataset.ids[~keep].copy(),
        strategy=strategy,
    )


def _require_pseudo(dataset: PseudoLabeledDataset):
    if dataset.pseudo is None:
        raise ConfigError("dataset has no pseudo-labels; apply a noise model first")


def select_confidence(dataset: PseudoLabeledDataset, tau1: float) -> Partition:
    """Clean iff max(pseudo) strictly exceeds tau1."""
    _require_pseudo(dataset)
    if not 0.0 < tau1 < 1.0:
        raise ConfigError(f"tau1 must be in (0, 1), got {tau1}")
    keep = dataset.pseudo.max(axis=1) > tau1
    return _partition_from_mask(dataset, keep, "confidence")


def _metric_mask(
    dataset: PseudoLabeledDataset, provider: EmbeddingProvider, k: int
) -> np.ndarray:
    n = len(dataset)
    if not 1 <= k < n:
        raise ConfigError(f"k must satisfy 1 <= k < n={n}, got {k}")
    emb = np.ascontiguousarray(embed_all(provider, dataset.x))
    dist = K.sqdist(emb, emb)
    own = np.argmax(dataset.pseudo, axis=1)
    keep = np.zeros(n, dtype=bool)
    c = dataset.n_classes
    for i in range(n):
        # Neighbor order: ascending distance, ties by lower sample id; the
        # query itself is excluded.
        order = np.lexsort((dataset.ids, dist[i]))
        order = order[order != i][:k]
        votes = np.bincount(own[order], minlength=c)
        top = votes.max()
        winners = np.flatnonzero(votes == top)
        # A tied vote is treated as inconclusive: the sample stays unclean.
        keep[i] = winners.size == 1 and winners[0] == own[i]
    return keep


def select_metric(
    dataset: PseudoLabeledDataset, provider: EmbeddingProvider, k: int
) -> Partition:
    """Clean iff the majority pseudo class among the k nearest neighbors
    equals the sample's own pseudo class."""
    _require_pseudo(dataset)
    return _partition_from_mask(dataset, _metric_mask(dataset, provider, k), "metric")


def select_hybrid(
    dataset: PseudoLabeledDataset,
    tau1: float,
    provider: EmbeddingProvider,
    k: int,
) -> Partition:
    """Intersection of the confidence and metric clean sets."""
    _require_pseudo(dataset)
    if not 0.0 < tau1 < 1.0:
        raise ConfigError(f"tau1 must be in (0, 1), got {tau1}")
    keep = (dataset.pseudo.max(axis=1) > tau1) & _metric_mask(dataset, provider, k)
    return _partition_from_mask(dataset, keep, "hybrid")


def select(
    dataset: PseudoLabeledDataset,
    cfg: SelectionConfig,
    provider: EmbeddingProvider | None = None,
) -> Partition:
    provider = provider or EmbeddingProvider()
    if cfg.strategy == "confidence":
        return select_confidence(dataset, cfg.tau1)
    if cfg.strategy == "metric":
        return select_metric(dataset, provider, cfg.k)
    return select_hybrid(dataset, cfg.tau1, provider, cfg.k)


@dataclass(frozen=True)
class Tau2Schedule:
    """Stepwise promotion threshold: start + step per ``every`` epochs,
    never above ``cap``."""

    start: float = 0.9
    step: float = 0.02
    every: int = 40
    cap: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.start <= self.cap <= 1.0:
            raise ConfigError("need 0 < start <= cap <= 1")
        if self.step < 0 or self.every < 1:
            raise ConfigError("need step >= 0 and every >= 1")


def tau2_at(epoch: int, schedule: Tau2Schedule | None = None) -> float:
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    schedule = schedule or Tau2Schedule()
    return min(schedule.start + schedule.step * (epoch // schedule.every), schedule.cap)


def save_partition(partition: Partition, path: str | Path) -> None:
    """One line per sample: ``id clean <label reals>`` or ``id unclean``."""
    lines = []
    for i, row in zip(partition.clean_ids, partition.clean_labels):
        vals = " ".join(f"{v:.17g}" for v in row)
        lines.append(f"{int(i)} clean {vals}")
    for i in partition.unclean_ids:
        lines.append(f"{int(i)} unclean")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="ascii")


def load_partition(path: str | Path, strategy: str = "loaded") -> Partition:
    raw = Path(path).read_bytes()
    clean_ids, clean_labels, unclean_ids = [], [], []
    offset = 0
    width = None
    for lineno, chunk in enumerate(raw.split(b"\n"), start=1):
        line = chunk.decode("ascii", errors="replace").strip()
        if line:
            fields = line.split()
            try:
                sid = int(fields[0])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad id", byte_offset=offset) from exc
            if len(fields) >= 2 and fields[1] == "unclean" and len(fields) == 2:
                unclean_ids.append(sid)
            elif len(fields) > 2 and fields[1] == "clean":
                try:
                    label = [float(f) for f in fields[2:]]
                except ValueError as exc:
                    raise ParseError(
                        f"line {lineno}: bad label", byte_offset=offset
                    ) from exc
                if width is None:
                    width = len(label)
                elif width != len(label):
                    raise ParseError(
                        f"line {lineno}: label width {len(label)} != {width}",
                        byte_offset=offset,
                    )
                clean_ids.append(sid)
                clean_labels.append(label)
            else:
                raise ParseError(f"line {lineno}: malformed", byte_offset=offset)
        offset += len(chunk) + 1
    labels = np.asarray(clean_labels, dtype=np.float64)
    if labels.size:
        probvec.check_rows(labels, what="partition label")
    else:
        labels = labels.reshape(0, width or 0)
    return Partition(
        clean_ids=np.asarray(clean_ids, dtype=np.int64),
        clean_labels=labels,
        unclean_ids=np.asarray(unclean_ids, dtype=np.int64),
        strategy=strategy,
    )
