"""Dense softmax classifier with analytic gradients and momentum SGD.

The network is a stack of affine layers with rectifier activations on the
hidden layers and a softmax head. Losses are described as a list of terms,
each either a cross-entropy or a squared-error penalty between target
probability vectors and the network output on a batch of inputs; gradients
for any such combination come from one backward pass per term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ruc import _kernels as K
from ruc.errors import ConfigError, InputShapeError, NumericError, ParseError

__all__ = [
    "ClassifierNet",
    "GradientSet",
    "LossTerm",
    "OptimizerState",
    "cosine_lr",
    "forward",
    "forward_batch",
    "gradients",
    "init_net",
    "init_optimizer",
    "input_gradient",
    "load_net",
    "loss_and_gradients",
    "loss_value",
    "predict",
    "reinit_final_layer",
    "save_net",
    "sgd_step",
]


@dataclass
class ClassifierNet:
    """Affine layer stack; ``weights[l]`` has shape (d_in, d_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "ClassifierNet":
        return ClassifierNet(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )


@dataclass
class GradientSet:
    """One tensor per parameter tensor of the matching net."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


@dataclass(frozen=True)
class LossTerm:
    """One summand of a training objective.

    ``kind`` is "ce" (cross-entropy against target probability vectors) or
    "sq" (squared L2 distance between output and target probabilities). The
    term value is ``weight`` times the mean per-row loss over the batch; an
    empty batch contributes nothing.
    """

    kind: str
    inputs: np.ndarray
    targets: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ce", "sq"):
            raise ConfigError(f"unknown loss kind {self.kind!r}")
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise InputShapeError("loss term inputs and targets must be 2-d")
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise InputShapeError(
                f"loss term row mismatch: {self.inputs.shape[0]} inputs vs "
                f"{self.targets.shape[0]} targets"
            )


@dataclass
class OptimizerState:
    """Momentum SGD state; ``lr`` is the rate applied by the next step."""

    momentum: float
    weight_decay: float
    base_lr: float
    lr: float
    epoch: int
    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]


def _glorot(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-bound, bound, size=(d_in, d_out))


def init_net(
    input_dim: int,
    hidden_sizes: tuple[int, ...],
    n_classes: int,
    seed: int | np.random.SeedSequence,
    activation: str = "relu",
) -> ClassifierNet:
    """Fresh net with uniform Glorot weights and zero biases."""
    if input_dim < 1:
        raise ConfigError(f"input_dim must be >= 1, got {input_dim}")
    if n_classes < 2:
        raise ConfigError(f"n_classes must be >= 2, got {n_classes}")
    if any(h < 1 for h in hidden_sizes):
        raise ConfigError(f"hidden sizes must be >= 1, got {hidden_sizes}")
    if activation != "relu":
        raise ConfigError(f"unsupported activation {activation!r}")
    rng = np.random.default_rng(seed)
    dims = [input_dim, *hidden_sizes, n_classes]
    weights = [_glorot(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    return ClassifierNet(weights, biases, activation)


def reinit_final_layer(
    net: ClassifierNet, seed: int | np.random.SeedSequence
) -> ClassifierNet:
    """Redraw the output layer in place; earlier layers are untouched."""
    rng = np.random.default_rng(seed)
    d_in, d_out = net.weights[-1].shape
    net.weights[-1] = _glorot(rng, d_in, d_out)
    net.biases[-1] = np.zeros(d_out)
    return net


def _as_batch(net: ClassifierNet, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise InputShapeError(
            f"expected inputs with {net.input_dim} features, got shape {x.shape}"
        )
    return x


def _forward_cached(net, x):
    """Forward pass keeping pre-activations and layer inputs for backprop."""
    zs = []
    layer_in = [x]
    a = x
    last = net.n_layers - 1
    for li in range(net.n_layers):
        z = K.affine(a, net.weights[li], net.biases[li])
        if not np.isfinite(z).all():
            raise NumericError("non-finite pre-activation", layer=li)
        zs.append(z)
        if li < last:
            a = K.relu(z)
            layer_in.append(a)
    return zs, layer_in, K.softmax(zs[-1])


def forward_batch(net: ClassifierNet, x: np.ndarray) -> np.ndarray:
    """Class probabilities, one row per input row."""
    return _forward_cached(net, _as_batch(net, x))[2]


def forward(net: ClassifierNet, x: np.ndarray) -> np.ndarray:
    """Class probabilities for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError(f"forward expects a 1-d vector, got shape {x.shape}")
    return forward_batch(net, x)[0]


def predict(net: ClassifierNet, x: np.ndarray) -> np.ndarray:
    return np.argmax(forward_batch(net, x), axis=1)


def _ce_rows(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # H(t, softmax(z)) = logsumexp(z) - <t, z>, stable for extreme logits.
    m = logits.max(axis=1)
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    return lse - (targets * logits).sum(axis=1)


def _check_term(net: ClassifierNet, term: LossTerm) -> tuple[np.ndarray, np.ndarray]:
    x = _as_batch(net, term.inputs)
    t = np.ascontiguousarray(term.targets, dtype=np.float64)
    if t.shape[1] != net.n_classes:
        raise InputShapeError(
            f"targets have {t.shape[1]} classes, net has {net.n_classes}"
        )
    return x, t


def loss_value(net: ClassifierNet, terms: list[LossTerm]) -> float:
    """Total objective value for the given terms (forward passes only)."""
    total = 0.0
    for term in terms:
        x, t = _check_term(net, term)
        if x.shape[0] == 0:
            continue
        zs, _, probs = _forward_cached(net, x)
        if term.kind == "ce":
            rows = _ce_rows(zs[-1], t)
        else:
            rows = ((probs - t) ** 2).sum(axis=1)
        total += term.weight * rows.mean()
    return float(total)


def _backprop(net, zs, layer_in, dz, grads):
    for li in range(net.n_layers - 1, -1, -1):
        dx, dw, db = K.affine_grads(layer_in[li], net.weights[li], dz)
        grads.d_weights[li] += dw
        grads.d_biases[li] += db
        if li > 0:
            dz = K.relu_grad(zs[li - 1], dx)
    return dx


def _zero_grads(net: ClassifierNet) -> GradientSet:
    return GradientSet(
        [np.zeros_like(w) for w in net.weights],
        [np.zeros_like(b) for b in net.biases],
    )


def loss_and_gradients(
    net: ClassifierNet, terms: list[LossTerm]
) -> tuple[float, GradientSet]:
    """Objective value and parameter gradients in one backward pass per term.

    For a cross-entropy term the output-logit gradient per row is p - t; for
    a squared-error term on probabilities it is 2 p * (u - <u, p>) with
    u = p - t (softmax Jacobian applied to 2(p - t)). Both are scaled by
    weight / n_rows so the sum over terms differentiates the mean-based
    objective of :func:`loss_value`.
    """
    total = 0.0
    grads = _zero_grads(net)
    for term in terms:
        x, t = _check_term(net, term)
        n = x.shape[0]
        if n == 0:
            continue
        zs, layer_in, probs = _forward_cached(net, x)
        scale = term.weight / n
        if term.kind == "ce":
            total += term.weight * _ce_rows(zs[-1], t).mean()
            dz = (probs - t) * scale
        else:
            u = probs - t
            total += term.weight * (u**2).sum(axis=1).mean()
            dz = 2.0 * scale * probs * (u - (u * probs).sum(axis=1, keepdims=True))
        _backprop(net, zs, layer_in, np.ascontiguousarray(dz), grads)
    return float(total), grads


def gradients(net: ClassifierNet, terms: list[LossTerm]) -> GradientSet:
    return loss_and_gradients(net, terms)[1]


def input_gradient(net: ClassifierNet, x: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-row gradient of the cross-entropy H(target, f(x)) w.r.t. x.

    Rows are independent: row i of the result is the gradient of row i's own
    loss (no batch averaging), as attack steps perturb samples individually.
    """
    x = _as_batch(net, x)
    t = np.ascontiguousarray(targets, dtype=np.float64)
    if t.ndim == 1:
        t = t[None, :]
    if t.shape != (x.shape[0], net.n_classes):
        raise InputShapeError(f"targets shape {t.shape} does not match inputs")
    zs, layer_in, probs = _forward_cached(net, x)
    grads = _zero_grads(net)
    return _backprop(net, zs, layer_in, np.ascontiguousarray(probs - t), grads)


def init_optimizer(
    net: ClassifierNet,
    lr: float,
    momentum: float = 0.9,
    weight_decay: float = 0.0005,
) -> OptimizerState:
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if not 0 <= momentum < 1:
        raise ConfigError(f"momentum must be in [0, 1), got {momentum}")
    if weight_decay < 0:
        raise ConfigError(f"weight decay must be >= 0, got {weight_decay}")
    return OptimizerState(
        momentum=momentum,
        weight_decay=weight_decay,
        base_lr=lr,
        lr=lr,
        epoch=0,
        v_weights=[np.zeros_like(w) for w in net.weights],
        v_biases=[np.zeros_like(b) for b in net.biases],
    )


def sgd_step(
    net: ClassifierNet, state: OptimizerState, grads: GradientSet
) -> tuple[ClassifierNet, OptimizerState]:
    """v <- mu*v + (g + wd*theta); theta <- theta - lr*v. In place."""
    for i in range(net.n_layers):
        state.v_weights[i] *= state.momentum
        state.v_weights[i] += grads.d_weights[i] + state.weight_decay * net.weights[i]
        net.weights[i] -= state.lr * state.v_weights[i]
        state.v_biases[i] *= state.momentum
        state.v_biases[i] += grads.d_biases[i] + state.weight_decay * net.biases[i]
        net.biases[i] -= state.lr * state.v_biases[i]
    return net, state


def cosine_lr(epoch: int, total_epochs: int, lr0: float) -> float:
    """Half-cosine decay from lr0 (epoch 0) to 0 (epoch = total_epochs)."""
    if total_epochs <= 0:
        raise ConfigError(f"total_epochs must be positive, got {total_epochs}")
    if not 0 <= epoch <= total_epochs:
        raise ConfigError(f"epoch {epoch} outside [0, {total_epochs}]")
    return lr0 * (1.0 + math.cos(math.pi * epoch / total_epochs)) / 2.0


def save_net(net: ClassifierNet, path: str | Path) -> None:
    """Binary checkpoint: int64 layer count and per-layer (d_in, d_out),
    then every weight matrix (row major) and bias vector as little-endian
    float64, in layer order."""
    dims = np.empty(1 + 2 * net.n_layers, dtype="<i8")
    dims[0] = net.n_layers
    for i, w in enumerate(net.weights):
        dims[1 + 2 * i] = w.shape[0]
        dims[2 + 2 * i] = w.shape[1]
    payload = np.concatenate(
        [a.ravel() for pair in zip(net.weights, net.biases) for a in pair]
    ).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(dims.tobytes())
        fh.write(payload.tobytes())


def load_net(path: str | Path, activation: str = "relu") -> ClassifierNet:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ParseError("checkpoint too short for layer count", byte_offset=0)
    n_layers = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    if n_layers < 1:
        raise ParseError(f"invalid layer count {n_layers}", byte_offset=0)
    head_end = 8 + 16 * n_layers
    if len(raw) < head_end:
        raise ParseError("checkpoint truncated in shape header", byte_offset=len(raw))
    dims = np.frombuffer(raw[8:head_end], dtype="<i8").reshape(n_layers, 2)
    if (dims < 1).any():
        raise ParseError(f"invalid layer dims {dims.tolist()}", byte_offset=8)
    n_floats = int((dims[:, 0] * dims[:, 1] + dims[:, 1]).sum())
    if len(raw) != head_end + 8 * n_floats:
        raise ParseError(
            f"checkpoint payload should hold {n_floats} floats",
            byte_offset=min(len(raw), head_end),
        )
    flat = np.frombuffer(raw[head_end:], dtype="<f8").astype(np.float64)
    weights, biases = [], []
    pos = 0
    for d_in, d_out in dims:
        d_in, d_out = int(d_in), int(d_out)
        weights.append(flat[pos : pos + d_in * d_out].reshape(d_in, d_out).copy())
        pos += d_in * d_out
        biases.append(flat[pos : pos + d_out].copy())
        pos += d_out
    for i in range(n_layers - 1):
        if dims[i][1] != dims[i + 1][0]:
            raise ParseError(
                f"layer {i} output dim {dims[i][1]} does not feed layer {i + 1}",
                byte_offset=8,
            )
    return ClassifierNet(weights, biases, activation)
