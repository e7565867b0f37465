"""A small dense classifier with manual backpropagation.

Architecture: flatten -> dense(hidden) -> ReLU -> dense(classes), softmax
head. Gradients for both parameters and inputs are computed analytically,
which is what the attack and mask-training code paths consume. Training uses
Adam with bias correction. Everything runs in double precision and is
deterministic given a seed.
"""

from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagicError, FileFormatError, FormatVersionError, PayloadLengthError

__all__ = [
    "Classifier",
    "AdamState",
    "TrainConfig",
    "init_classifier",
    "forward",
    "softmax",
    "cross_entropy",
    "backward",
    "adam_step",
    "train_classifier",
    "accuracy",
    "predict",
    "parameter_checksum",
    "save_classifier",
    "load_classifier",
]

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"FCLS"
CHECKPOINT_VERSION = 1


@dataclass
class Classifier:
    """Dense ReLU network; ``weights[i]`` has shape (fan_in, fan_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_shape: tuple[int, int, int]
    frozen: bool = False

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def input_dim(self) -> int:
        c, h, w = self.input_shape
        return c * h * w


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter tensor."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], learning_rate: float = 0.01,
                   beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            step=0,
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 64
    learning_rate: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")


def init_classifier(input_shape: tuple[int, int, int], n_classes: int,
                    hidden_dim: int = 64, seed: int = 0) -> Classifier:
    """Seeded uniform init scaled by fan-in; biases start at zero."""
    rng = np.random.default_rng(seed)
    c, h, w = input_shape
    dims = [c * h * w, hidden_dim, n_classes]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Classifier(weights=weights, biases=biases, input_shape=(c, h, w))


def _flatten_batch(model: Classifier, images: np.ndarray) -> np.ndarray:
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4 or images.shape[1:] != model.input_shape:
        raise ValueError(
            f"batch shape {images.shape} does not match model input "
            f"(N, {', '.join(map(str, model.input_shape))})"
        )
    return images.reshape(images.shape[0], -1)


def _forward_trace(model: Classifier, images: np.ndarray):
    """Returns (logits, per-layer pre-activations, per-layer inputs)."""
    x = _flatten_batch(model, images)
    inputs, preacts = [], []
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(a)
        z = a @ w + b
        preacts.append(z)
        a = z if i == last else np.maximum(z, 0.0)
    return a, preacts, inputs


def forward(model: Classifier, images: np.ndarray) -> np.ndarray:
    """Logits of shape (N, K) for an image batch of shape (N, C, H, W)."""
    logits, _, _ = _forward_trace(model, images)
    return logits


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log softmax probability of the labeled class."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ValueError("logits must be (N, K) with labels of shape (N,)")
    if logits.shape[0] == 0:
        raise ValueError("cannot average the loss of an empty batch")
    k = logits.shape[1]
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    logp = _log_softmax(logits)
    return float(-logp[np.arange(len(labels)), labels].mean())


def backward(model: Classifier, images: np.ndarray, labels: np.ndarray):
    """Exact gradients of mean cross-entropy w.r.t. parameters and inputs.

    Returns
    -------
    param_grads : list alternating [dW0, db0, dW1, db1, ...]
    input_grads : array with the batch shape (N, C, H, W)
    """
    labels = np.asarray(labels)
    logits, preacts, inputs = _forward_trace(model, images)
    n, k = logits.shape
    if n == 0:
        raise ValueError("cannot backpropagate through an empty batch")
    if labels.shape != (n,) or labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must have shape ({n},) with values in [0, {k})")

    delta = softmax(logits)
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    param_grads: list[np.ndarray] = []
    for i in range(len(model.weights) - 1, -1, -1):
        param_grads.append(delta.sum(axis=0))          # db_i
        param_grads.append(inputs[i].T @ delta)        # dW_i
        delta = delta @ model.weights[i].T
        if i > 0:
            delta = delta * (preacts[i - 1] > 0)
    param_grads.reverse()
    input_grads = delta.reshape((n, *model.input_shape))
    return param_grads, input_grads


def adam_step(state: AdamState, params: list[np.ndarray],
              grads: list[np.ndarray]) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns new parameter arrays and state."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("parameter, gradient and moment list lengths must agree")
    t = state.step + 1
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        new_m.append(m)
        new_v.append(v)
        new_p.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps))
    next_state = AdamState(m=new_m, v=new_v, step=t, learning_rate=state.learning_rate,
                           beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    return new_p, next_state


def _pack_params(model: Classifier) -> list[np.ndarray]:
    out = []
    for w, b in zip(model.weights, model.biases):
        out.extend([w, b])
    return out


def _unpack_params(model: Classifier, params: list[np.ndarray]) -> None:
    model.weights = params[0::2]
    model.biases = params[1::2]


def train_classifier(images: np.ndarray, labels: np.ndarray, config: TrainConfig,
                     test_images: np.ndarray | None = None,
                     test_labels: np.ndarray | None = None,
                     hidden_dim: int = 64) -> Classifier:
    """Train a fresh classifier on (images, labels); returns it frozen.

    Logs train (and, when given, test) accuracy at the end. A single-class
    dataset trains but emits a warning.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if len(images) == 0:
        raise ValueError("training set is empty")
    n_classes = int(labels.max()) + 1
    if len(np.unique(labels)) < 2:
        warnings.warn("training labels contain a single class", stacklevel=2)
        n_classes = max(n_classes, 2)

    model = init_classifier(tuple(images.shape[1:]), n_classes,
                            hidden_dim=hidden_dim, seed=config.seed)
    params = _pack_params(model)
    state = AdamState.for_params(params, learning_rate=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    n = len(images)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            _unpack_params(model, params)
            grads, _ = backward(model, images[idx], labels[idx])
            params, state = adam_step(state, params, grads)
    _unpack_params(model, params)
    model.frozen = True

    train_acc = accuracy(model, images, labels)
    if test_images is not None and test_labels is not None:
        test_acc = accuracy(model, test_images, test_labels)
        logger.info("trained classifier: train acc %.4f, test acc %.4f", train_acc, test_acc)
    else:
        logger.info("trained classifier: train acc %.4f", train_acc)
    return model


def predict(model: Classifier, images: np.ndarray) -> np.ndarray:
    """Argmax class per sample; ties resolve to the lowest class index."""
    return np.argmax(forward(model, images), axis=1)


def accuracy(model: Classifier, images: np.ndarray, labels: np.ndarray) -> float:
    if len(images) == 0:
        raise ValueError("cannot compute accuracy of an empty dataset")
    return float(np.mean(predict(model, images) == np.asarray(labels)))


def parameter_checksum(model: Classifier) -> str:
    """Hex digest over all parameter bytes; detects any mutation."""
    import hashlib

    h = hashlib.sha256()
    for p in _pack_params(model):
        h.update(np.ascontiguousarray(p, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_classifier(model: Classifier, path) -> None:
    """Versioned binary checkpoint; little-endian float64 parameters."""
    c, h, w = model.input_shape
    header = bytearray()
    header += CHECKPOINT_MAGIC
    header += struct.pack("<H", CHECKPOINT_VERSION)
    header += struct.pack("<IIII", c, h, w, model.n_classes)
    header += struct.pack("<B", 1 if model.frozen else 0)
    header += struct.pack("<I", len(model.weights))
    for wgt in model.weights:
        header += struct.pack("<II", wgt.shape[0], wgt.shape[1])
    with open(path, "wb") as f:
        f.write(bytes(header))
        for wgt, b in zip(model.weights, model.biases):
            f.write(np.ascontiguousarray(wgt, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_classifier(path) -> Classifier:
    """Inverse of :func:`save_classifier`; roundtrip is bit-exact."""
    with open(path, "rb") as f:
        raw = f.read()

    def take(offset, n):
        if offset + n > len(raw):
            raise PayloadLengthError(
                f"checkpoint truncated: need {offset + n} bytes, file has {len(raw)}"
            )
        return raw[offset:offset + n], offset + n

    chunk, off = take(0, 4)
    if chunk != CHECKPOINT_MAGIC:
        raise BadMagicError(f"not a classifier checkpoint (magic {chunk!r})")
    chunk, off = take(off, 2)
    version = struct.unpack("<H", chunk)[0]
    if version != CHECKPOINT_VERSION:
        raise FormatVersionError(f"unsupported checkpoint version {version}")
    chunk, off = take(off, 16)
    c, h, w, n_classes = struct.unpack("<IIII", chunk)
    chunk, off = take(off, 1)
    frozen = bool(chunk[0])
    chunk, off = take(off, 4)
    n_layers = struct.unpack("<I", chunk)[0]
    dims = []
    for _ in range(n_layers):
        chunk, off = take(off, 8)
        dims.append(struct.unpack("<II", chunk))

    weights, biases = [], []
    for fan_in, fan_out in dims:
        chunk, off = take(off, fan_in * fan_out * 8)
        weights.append(np.frombuffer(chunk, dtype="<f8").reshape(fan_in, fan_out).copy())
        chunk, off = take(off, fan_out * 8)
        biases.append(np.frombuffer(chunk, dtype="<f8").copy())
    if off != len(raw):
        raise PayloadLengthError(f"{len(raw) - off} trailing bytes after parameters")

    model = Classifier(weights=weights, biases=biases, input_shape=(c, h, w), frozen=frozen)
    if model.n_classes != n_classes:
        raise FileFormatError("layer dims inconsistent with recorded class count")
    if model.weights and model.weights[0].shape[0] != c * h * w:
        raise FileFormatError("first layer fan-in inconsistent with recorded input shape")
    return model
