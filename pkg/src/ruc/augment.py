"""Vector-space augmentations, label sharpening and convex sample mixing.

Weak augmentation is additive Gaussian jitter; strong augmentation chains
jitter, feature dropout and a global scale jitter. All functions accept a
single vector (1-d) or a batch of rows (2-d) and preserve the input's
shape. Stages whose knob is zero are skipped entirely, so they neither
change the input nor consume random draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ruc import probvec
from ruc.errors import ConfigError, InputShapeError

__all__ = ["AugmentConfig", "mixup", "sharpen", "strong_aug", "weak_aug"]


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for both augmentation strengths plus mixing and sharpening.

    The strong jitter must strictly exceed the weak one, except that both
    may be zero to switch jitter off for ablations. ``alpha`` is the Beta
    parameter of mixup; alpha = 0 is the documented degenerate setting that
    forces the mixing weight to 1 (mixing off, first argument passes
    through unchanged).
    """

    sigma_weak: float = 0.1
    sigma_strong: float = 0.5
    dropout: float = 0.1
    scale_jitter: float = 0.1
    alpha: float = 0.75
    temperature: float = 0.5

    def __post_init__(self):
        if self.sigma_weak < 0 or self.sigma_strong < 0:
            raise ConfigError("jitter strengths must be >= 0")
        if self.sigma_weak >= self.sigma_strong and self.sigma_strong != 0:
            raise ConfigError(
                f"strong jitter must exceed weak ({self.sigma_weak} >= {self.sigma_strong})"
            )
        if self.sigma_strong == 0 and self.sigma_weak != 0:
            raise ConfigError("weak jitter requires a larger strong jitter")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.scale_jitter < 0:
            raise ConfigError(f"scale_jitter must be >= 0, got {self.scale_jitter}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2):
        raise InputShapeError(f"expected 1-d or 2-d input, got shape {x.shape}")
    return x


def weak_aug(x: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    x = _check_x(x)
    if cfg.sigma_weak == 0:
        return x.copy()
    return x + cfg.sigma_weak * rng.standard_normal(x.shape)


def strong_aug(x: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """Jitter, then feature dropout, then one scale factor per sample."""
    x = _check_x(x)
    out = x.copy()
    if cfg.sigma_strong > 0:
        out += cfg.sigma_strong * rng.standard_normal(out.shape)
    if cfg.dropout > 0:
        out *= rng.random(out.shape) >= cfg.dropout
    if cfg.scale_jitter > 0:
        lo, hi = 1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter
        if out.ndim == 1:
            out *= rng.uniform(lo, hi)
        else:
            out *= rng.uniform(lo, hi, size=(out.shape[0], 1))
    return out


def sharpen(p: np.ndarray, temperature: float) -> np.ndarray:
    """Raise probabilities to 1/T and renormalize; T < 1 peaks, T > 1 flattens.

    Computed on max-normalized values so extreme temperatures stay finite;
    the ordering (and thus the argmax) of the entries never changes.
    """
    if temperature <= 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    rows = probvec.check_rows(p, what="sharpen input")
    scaled = (rows / rows.max(axis=1, keepdims=True)) ** (1.0 / temperature)
    out = scaled / scaled.sum(axis=1, keepdims=True)
    return out[0] if np.asarray(p).ndim == 1 else out


def mixup(
    x1: np.ndarray,
    y1: np.ndarray,
    x2: np.ndarray,
    y2: np.ndarray,
    alpha: float,
    rng: np.random.Generator,
    lam: float | np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Convex combination biased toward the first argument.

    lam ~ Beta(alpha, alpha) per pair, then lam <- max(lam, 1 - lam) so the
    output stays closer to (x1, y1). ``lam`` overrides the draw (test hook);
    alpha = 0 forces lam = 1, returning copies of the first pair.
    """
    x1, x2 = _check_x(x1), _check_x(x2)
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    if x1.shape != x2.shape or y1.shape != y2.shape:
        raise InputShapeError("mixup pairs must share shapes")
    if x1.ndim != y1.ndim:
        raise InputShapeError("features and labels must both be single or batched")
    n = x1.shape[0] if x1.ndim == 2 else None
    if lam is None:
        if alpha == 0:
            return x1.copy(), y1.copy()
        lam = rng.beta(alpha, alpha, size=None if n is None else n)
    lam = np.maximum(lam, 1.0 - np.asarray(lam, dtype=np.float64))
    lx = lam if n is None else lam[:, None]
    return lx * x1 + (1.0 - lx) * x2, lx * y1 + (1.0 - lx) * y2
