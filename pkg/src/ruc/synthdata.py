"""Synthetic Gaussian-mixture datasets with simulated noisy pseudo-labels.

A dataset holds feature vectors, ground-truth classes (used for evaluation
only), stable integer ids and, once a noise model has been applied, one
pseudo-label probability vector per sample. The noise model corrupts a
chosen fraction of class assignments and renders every assignment as a
probability vector with a configurable confidence profile, mimicking an
upstream clustering model whose labels are partly wrong and typically
overconfident.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ruc import _kernels as K
from ruc import probvec
from ruc.errors import ConfigError, InputShapeError, ParseError
from ruc.network import ClassifierNet, forward_batch

__all__ = [
    "EmbeddingProvider",
    "LabeledSample",
    "NoiseModel",
    "PseudoLabeledDataset",
    "apply_noise",
    "embed",
    "embed_all",
    "gen_gaussian_mixture",
    "load_dataset",
    "save_dataset",
]

HEADER_RE = re.compile(r"^RUCDS v1 C=(\d+) D=(\d+) N=(\d+)$")


@dataclass(frozen=True)
class LabeledSample:
    """One sample viewed row-wise; ``gt`` is for evaluation only."""

    id: int
    x: np.ndarray
    gt: int


@dataclass
class PseudoLabeledDataset:
    x: np.ndarray  # (n, D) float64
    gt: np.ndarray  # (n,) int64, evaluation only
    ids: np.ndarray  # (n,) int64, unique
    n_classes: int
    pseudo: np.ndarray | None = None  # (n, C) rows on the simplex, or None
    provenance: str = ""

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.gt = np.asarray(self.gt, dtype=np.int64)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.x.ndim != 2:
            raise InputShapeError(f"x must be 2-d, got shape {self.x.shape}")
        n = self.x.shape[0]
        if self.gt.shape != (n,) or self.ids.shape != (n,):
            raise InputShapeError("gt and ids must have one entry per sample")
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")
        if n and (self.gt.min() < 0 or self.gt.max() >= self.n_classes):
            raise ConfigError("gt classes out of range")
        if np.unique(self.ids).size != n:
            raise ConfigError("sample ids must be unique")
        if self.pseudo is None and n == 0:
            self.pseudo = np.zeros((0, self.n_classes))
        if self.pseudo is not None:
            self.pseudo = np.ascontiguousarray(self.pseudo, dtype=np.float64)
            if self.pseudo.shape != (n, self.n_classes):
                raise InputShapeError(
                    f"pseudo labels must have shape ({n}, {self.n_classes})"
                )

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def sample(self, row: int) -> LabeledSample:
        return LabeledSample(int(self.ids[row]), self.x[row], int(self.gt[row]))

    def rows_of(self, ids: np.ndarray) -> np.ndarray:
        """Row indices holding the given ids (error on unknown ids)."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size == 0:
            return np.empty(0, dtype=np.int64)
        if len(self) == 0:
            raise ConfigError(f"unknown sample ids: {ids[:5].tolist()}")
        order = np.argsort(self.ids, kind="stable")
        sorted_ids = self.ids[order]
        pos = np.searchsorted(sorted_ids, ids)
        bad = (pos >= len(self)) | (sorted_ids[np.minimum(pos, len(self) - 1)] != ids)
        if bad.any():
            raise ConfigError(f"unknown sample ids: {ids[bad][:5].tolist()}")
        return order[pos]


def gen_gaussian_mixture(
    n_classes: int,
    n_per_class: int,
    dim: int,
    separation: float,
    spread: float,
    seed: int,
) -> PseudoLabeledDataset:
    """Balanced isotropic Gaussian clusters; pseudo-labels left unset.

    Cluster means all have norm ``separation``. When the class count fits
    the dimension the mean directions are a seeded random orthonormal frame
    (pairwise equidistant clusters); otherwise they are independent random
    unit vectors.
    """
    if n_classes < 2 or dim < 2:
        raise ConfigError("need n_classes >= 2 and dim >= 2")
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    if separation <= 0 or spread <= 0:
        raise ConfigError("separation and spread must be positive")
    rng = np.random.default_rng(seed)
    if n_classes <= dim:
        q, r = np.linalg.qr(rng.standard_normal((dim, n_classes)))
        directions = (q * np.sign(np.diag(r))).T
    else:
        raw = rng.standard_normal((n_classes, dim))
        directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    means = separation * directions
    n = n_classes * n_per_class
    gt = np.repeat(np.arange(n_classes), n_per_class)
    x = means[gt] + spread * rng.standard_normal((n, dim))
    return PseudoLabeledDataset(
        x=x,
        gt=gt,
        ids=np.arange(n),
        n_classes=n_classes,
        pseudo=None,
        provenance=(
            f"gmix(C={n_classes},per={n_per_class},D={dim},"
            f"sep={separation:g},spread={spread:g},seed={seed})"
        ),
    )


@dataclass(frozen=True)
class NoiseModel:
    """How simulated pseudo-labels deviate from ground truth.

    ``rate`` is the corrupted fraction; ``corruption`` picks the wrong class
    (uniform-flip: uniform over the other classes; neighbor-flip: the other
    class whose empirical cluster mean is nearest to the sample). The
    confidence profile renders each class assignment as a probability
    vector: onehot, overconfident (``peak`` on the assigned class, uniform
    remainder), or tempered (softmax of the assigned-class indicator scaled
    by ``temperature``).
    """

    rate: float
    corruption: str = "uniform-flip"
    profile: str = "overconfident"
    peak: float = 0.99
    temperature: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"noise rate must be in [0, 1], got {self.rate}")
        if self.corruption not in ("uniform-flip", "neighbor-flip"):
            raise ConfigError(f"unknown corruption {self.corruption!r}")
        if self.profile not in ("onehot", "overconfident", "tempered"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        if not 0.0 < self.peak <= 1.0:
            raise ConfigError(f"peak must be in (0, 1], got {self.peak}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")


def _class_means(dataset: PseudoLabeledDataset) -> np.ndarray:
    """Empirical per-class means; classes with no samples get nan rows."""
    means = np.full((dataset.n_classes, dataset.n_features), np.nan)
    for c in range(dataset.n_classes):
        rows = dataset.gt == c
        if rows.any():
            means[c] = dataset.x[rows].mean(axis=0)
    return means


def apply_noise(
    dataset: PseudoLabeledDataset, model: NoiseModel, seed: int | np.random.SeedSequence
) -> PseudoLabeledDataset:
    """New dataset with pseudo-labels; features and gt are never altered.

    Exactly round(rate * n) samples, chosen uniformly without replacement,
    get a wrong class assignment (always different from gt); the rest keep
    gt. Every assignment is then rendered per the confidence profile.
    """
    n, c = len(dataset), dataset.n_classes
    if model.profile == "overconfident" and model.peak <= 1.0 / c:
        raise ConfigError(f"peak {model.peak} must exceed uniform 1/{c}")
    rng = np.random.default_rng(seed)
    m = int(np.rint(model.rate * n))
    corrupt = np.sort(rng.choice(n, size=m, replace=False))
    assigned = dataset.gt.copy()
    if m:
        if model.corruption == "uniform-flip":
            shift = rng.integers(1, c, size=m)
            assigned[corrupt] = (dataset.gt[corrupt] + shift) % c
        else:
            means = _class_means(dataset)
            empty = np.isnan(means).any(axis=1)
            dist = K.sqdist(
                np.ascontiguousarray(dataset.x[corrupt]),
                np.ascontiguousarray(np.nan_to_num(means, nan=0.0)),
            )
            dist[:, empty] = np.inf
            dist[np.arange(m), dataset.gt[corrupt]] = np.inf
            if not np.isfinite(dist.min(axis=1)).all():
                raise ConfigError("neighbor-flip needs at least two non-empty classes")
            assigned[corrupt] = np.argmin(dist, axis=1)
    if model.profile == "onehot":
        pseudo = probvec.onehot_rows(assigned, c)
    elif model.profile == "overconfident":
        pseudo = np.full((n, c), (1.0 - model.peak) / (c - 1))
        pseudo[np.arange(n), assigned] = model.peak
    else:
        hi = math.exp(model.temperature)
        pseudo = np.full((n, c), 1.0 / (hi + c - 1))
        pseudo[np.arange(n), assigned] = hi / (hi + c - 1)
    return PseudoLabeledDataset(
        x=dataset.x,
        gt=dataset.gt.copy(),
        ids=dataset.ids.copy(),
        n_classes=c,
        pseudo=pseudo,
        provenance=(
            f"{dataset.provenance}+noise(rate={model.rate:g},"
            f"{model.corruption},{model.profile},seed={seed})"
        ),
    )


@dataclass
class EmbeddingProvider:
    """Maps features to the space where neighbor distances are measured.

    identity: the features themselves. random-projection: a fixed seeded
    Gaussian matrix (out_dim, D). trained-encoder: activations of the last
    hidden layer of a supplied net.
    """

    mode: str = "identity"
    out_dim: int | None = None
    seed: int = 0
    net: ClassifierNet | None = None

    def __post_init__(self):
        if self.mode not in ("identity", "random-projection", "trained-encoder"):
            raise ConfigError(f"unknown embedding mode {self.mode!r}")
        if self.mode == "random-projection" and (self.out_dim is None or self.out_dim < 1):
            raise ConfigError("random-projection needs a positive out_dim")
        if self.mode == "trained-encoder":
            if self.net is None:
                raise ConfigError("trained-encoder needs a net")
            if self.net.n_layers < 2:
                raise ConfigError("trained-encoder needs at least one hidden layer")


def embed_all(provider: EmbeddingProvider, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise InputShapeError(f"embed_all expects 2-d input, got {x.shape}")
    if provider.mode == "identity":
        return x
    if provider.mode == "random-projection":
        proj = np.random.default_rng(provider.seed).standard_normal(
            (provider.out_dim, x.shape[1])
        )
        return x @ proj.T
    net = provider.net
    a = x
    for li in range(net.n_layers - 1):
        a = K.relu(K.affine(a, net.weights[li], net.biases[li]))
    return a


def embed(provider: EmbeddingProvider, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError(f"embed expects a 1-d vector, got {x.shape}")
    return embed_all(provider, x[None, :])[0]


def save_dataset(dataset: PseudoLabeledDataset, path: str | Path) -> None:
    """Plain-text format: one header line ``RUCDS v1 C=<c> D=<d> N=<n>``,
    then one line per sample: id, gt class, D feature reals and, when
    pseudo-labels are set, C label reals; reals carry 17 significant digits
    so float64 values round-trip exactly."""
    lines = [f"RUCDS v1 C={dataset.n_classes} D={dataset.n_features} N={len(dataset)}"]
    has_pseudo = dataset.pseudo is not None
    for row in range(len(dataset)):
        parts = [str(int(dataset.ids[row])), str(int(dataset.gt[row]))]
        parts += [f"{v:.17g}" for v in dataset.x[row]]
        if has_pseudo:
            parts += [f"{v:.17g}" for v in dataset.pseudo[row]]
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_dataset(path: str | Path) -> PseudoLabeledDataset:
    raw = Path(path).read_bytes()
    offset = 0
    rows = []
    line_starts = []
    for chunk in raw.split(b"\n"):
        line_starts.append(offset)
        rows.append(chunk)
        offset += len(chunk) + 1
    while rows and rows[-1] == b"":
        rows.pop()
        line_starts.pop()
    if not rows:
        raise ParseError("empty dataset file", byte_offset=0)
    header = rows[0].decode("ascii", errors="replace")
    match = HEADER_RE.match(header)
    if not match:
        raise ParseError(f"bad header {header!r}", byte_offset=0)
    c, d, n = (int(g) for g in match.groups())
    if len(rows) - 1 != n:
        raise ParseError(
            f"expected {n} sample lines, found {len(rows) - 1}",
            byte_offset=line_starts[min(len(line_starts) - 1, n)] if n else len(raw),
        )
    ids = np.empty(n, dtype=np.int64)
    gt = np.empty(n, dtype=np.int64)
    x = np.empty((n, d))
    pseudo = np.empty((n, c))
    has_pseudo: bool | None = None
    for i in range(n):
        at = line_starts[i + 1]
        fields = rows[i + 1].split()
        if len(fields) == 2 + d:
            row_has = False
        elif len(fields) == 2 + d + c:
            row_has = True
        else:
            raise ParseError(
                f"line {i + 2}: expected {2 + d} or {2 + d + c} fields, got {len(fields)}",
                byte_offset=at,
            )
        if has_pseudo is None:
            has_pseudo = row_has
        elif has_pseudo != row_has:
            raise ParseError(
                f"line {i + 2}: inconsistent pseudo-label presence", byte_offset=at
            )
        try:
            ids[i] = int(fields[0])
            gt[i] = int(fields[1])
            x[i] = [float(f) for f in fields[2 : 2 + d]]
            if row_has:
                pseudo[i] = [float(f) for f in fields[2 + d :]]
        except ValueError as exc:
            raise ParseError(f"line {i + 2}: {exc}", byte_offset=at) from exc
    try:
        return PseudoLabeledDataset(
            x=x,
            gt=gt,
            ids=ids,
            n_classes=c,
            pseudo=pseudo if has_pseudo else None,
            provenance=f"loaded:{Path(path).name}",
        )
    except (ConfigError, InputShapeError) as exc:
        raise ParseError(str(exc), byte_offset=line_starts[min(1, len(line_starts) - 1)]) from exc
