"""Training of modulatory frequency masks against a frozen classifier.

A mask starts as the identity filter (all ones) and is optimized with
projected Adam on

    L(M) = CE(f(apply_mask(x, M)), target) + l1_weight * sum(M)

with entries clamped back into [0,1] after every step. Essential frequency
(EF) masks target the true label of a correctly classified clean image;
adversarial frequency (AF) masks target the adversarial label of a
successfully attacked image. Since entries are nonnegative the l1 penalty
is just the entry sum, so its gradient is a constant l1_weight per entry.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .attacks import AdversarialBatch, AttackConfig, min_norm_linf, pgd_linf
from .model import AdamState, Classifier, adam_step, backward, cross_entropy, forward, predict

__all__ = [
    "MaskTrainConfig",
    "MaskResult",
    "MaskSet",
    "InitialPredictionError",
    "mask_objective",
    "train_mask",
    "train_mask_set",
    "sparsity",
]


class InitialPredictionError(ValueError):
    """The unfiltered image does not already yield the requested label."""


@dataclass(frozen=True)
class MaskTrainConfig:
    l1_weight: float = 0.01
    learning_rate: float = 0.01
    min_steps: int = 500
    max_steps: int = 3000
    window: int = 50
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be nonnegative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (1 <= self.min_steps <= self.max_steps):
            raise ValueError("need 1 <= min_steps <= max_steps")
        if self.window < 1 or self.tol <= 0:
            raise ValueError("window must be >= 1 and tol positive")

    def to_dict(self) -> dict:
        return {
            "l1_weight": self.l1_weight,
            "learning_rate": self.learning_rate,
            "min_steps": self.min_steps,
            "max_steps": self.max_steps,
            "window": self.window,
            "tol": self.tol,
            "seed": self.seed,
        }


@dataclass
class MaskResult:
    """One trained mask plus convergence diagnostics."""

    mask: np.ndarray
    final_loss: float
    steps: int
    preserved: bool


@dataclass
class MaskSet:
    """A family of flattened masks with their provenance.

    masks is an N x (C*H*W) float32 matrix, one row per source image, every
    entry in [0,1]. labels holds the per-mask target label (true label for
    EF, adversarial label for AF). image_ids are indices into the source
    dataset; EF and AF sets trained on the same ids line up row by row.
    """

    kind: str
    masks: np.ndarray
    shape: tuple[int, int, int]
    labels: np.ndarray
    image_ids: np.ndarray
    final_losses: np.ndarray
    densities: np.ndarray
    preserved: np.ndarray
    attack: dict | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("EF", "AF"):
            raise ValueError(f"kind must be 'EF' or 'AF', got {self.kind!r}")
        if self.masks.ndim != 2 or len(self.masks) < 1:
            raise ValueError("masks must be a nonempty N x D matrix")
        c, h, w = self.shape
        if self.masks.shape[1] != c * h * w:
            raise ValueError("mask width inconsistent with recorded image shape")
        n = len(self.masks)
        for name in ("labels", "image_ids", "final_losses", "densities", "preserved"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per mask")
        if self.masks.min() < 0.0 or self.masks.max() > 1.0:
            raise ValueError("mask entries must lie in [0, 1]")
        if self.kind == "AF" and self.attack is None:
            raise ValueError("AF mask sets must carry their attack metadata")

    def __len__(self) -> int:
        return len(self.masks)

    def grids(self) -> np.ndarray:
        """Masks reshaped back to (N, C, H, W)."""
        return self.masks.reshape(len(self.masks), *self.shape)


def sparsity(mask: np.ndarray) -> tuple[float, float]:
    """(l1 norm, density), density being the fraction of entries above 0.5."""
    m = np.asarray(mask)
    return float(m.sum()), float((m > 0.5).mean())


def mask_objective(model: Classifier, image: np.ndarray, mask: np.ndarray,
                   target_label: int, l1_weight: float) -> tuple[float, np.ndarray]:
    """Loss and exact mask gradient of the filtered-image objective."""
    filtered = spectral.apply_mask(image, mask)
    batch = filtered[None]
    target = np.array([target_label])
    loss = cross_entropy(forward(model, batch), target) + l1_weight * float(mask.sum())
    _, input_grad = backward(model, batch, target)
    grad = spectral.mask_gradient(image, input_grad[0]) + l1_weight
    return loss, grad


def train_mask(model: Classifier, image: np.ndarray, target_label: int,
               config: MaskTrainConfig) -> MaskResult:
    """Optimize one mask for one image; see the module docstring.

    The image must already be classified as target_label when unfiltered
    (all-ones init makes step 0 reproduce that prediction). Runs at least
    min_steps and stops once the best loss has not improved by tol over the
    last window steps, or at max_steps.
    """
    if not model.frozen:
        raise ValueError("mask training requires a frozen classifier")
    image = np.asarray(image, dtype=np.float64)
    if image.shape != model.input_shape:
        raise ValueError(f"image shape {image.shape} does not match model input")
    initial = int(predict(model, image[None])[0])
    if initial != int(target_label):
        raise InitialPredictionError(
            f"unfiltered image is classified {initial}, not the target {target_label}"
        )

    mask = np.ones(model.input_shape)
    state = AdamState.for_params([mask], learning_rate=config.learning_rate)
    best = np.inf
    last_improvement = 0
    step = 0
    for step in range(1, config.max_steps + 1):
        loss, grad = mask_objective(model, image, mask, target_label, config.l1_weight)
        if best - loss > config.tol:
            best = loss
            last_improvement = step
        (mask,), state = adam_step(state, [mask], [grad])
        np.clip(mask, 0.0, 1.0, out=mask)
        if step >= config.min_steps and step - last_improvement >= config.window:
            break

    final_loss, _ = mask_objective(model, image, mask, target_label, config.l1_weight)
    final_pred = int(predict(model, spectral.apply_mask(image, mask)[None])[0])
    return MaskResult(mask=mask, final_loss=final_loss, steps=step,
                      preserved=final_pred == int(target_label))


def _train_one(job):
    model, image, target, config = job
    return train_mask(model, image, target, config)


def train_mask_set(model: Classifier, images: np.ndarray, labels: np.ndarray,
                   kind: str, mask_config: MaskTrainConfig,
                   attack_config: AttackConfig | None = None,
                   attack_method: str = "pgd",
                   restrict_ids: np.ndarray | None = None,
                   adversarial: AdversarialBatch | None = None,
                   workers: int = 1) -> MaskSet:
    """Train a whole family of masks over a dataset.

    EF: keep the correctly classified images, train against true labels on
    the clean images. AF: run the configured attack, keep the correctly
    classified images the attack flipped, train against the adversarial
    labels on the adversarial images. A precomputed attack over the same
    images can be passed as `adversarial` to skip rerunning it.
    restrict_ids additionally intersects the eligible set with the given
    source indices, which is how EF and AF sets are aligned onto the same
    images.
    """
    if kind not in ("EF", "AF"):
        raise ValueError(f"kind must be 'EF' or 'AF', got {kind!r}")
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    correct = predict(model, images) == labels

    attack_meta = None
    if kind == "EF":
        eligible = correct
        train_images = images
        targets = labels
    else:
        if attack_config is None:
            raise ValueError("AF mask training needs an attack_config")
        if adversarial is not None:
            if len(adversarial) != len(images):
                raise ValueError("precomputed attack does not cover the dataset")
            batch = adversarial
        elif attack_method == "pgd":
            batch = pgd_linf(model, images, labels, attack_config)
        elif attack_method == "min-norm":
            batch = min_norm_linf(model, images, labels, attack_config)
        else:
            raise ValueError(f"unknown attack method {attack_method!r}")
        eligible = correct & batch.success
        train_images = batch.images
        targets = batch.adversarial_labels
        attack_meta = {
            "method": attack_method,
            "epsilon": attack_config.epsilon,
            "steps": attack_config.steps,
            "eps_max": attack_config.eps_max,
            "norms": batch.norms[eligible].tolist() if eligible.any() else [],
        }

    ids = np.flatnonzero(eligible)
    if restrict_ids is not None:
        wanted = np.asarray(restrict_ids)
        ids = ids[np.isin(ids, wanted)]
    if ids.size == 0:
        raise ValueError(f"no eligible images to train {kind} masks on")
    if attack_meta is not None:
        attack_meta["norms"] = np.asarray(
            attack_meta["norms"])[np.isin(np.flatnonzero(eligible), ids)].tolist()

    jobs = [(model, train_images[i], int(targets[i]), mask_config) for i in ids]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_one, jobs))
    else:
        results = [_train_one(job) for job in jobs]

    n = len(results)
    flat = np.empty((n, images.shape[1] * images.shape[2] * images.shape[3]),
                    dtype=np.float32)
    losses = np.empty(n)
    densities = np.empty(n)
    preserved = np.empty(n, dtype=bool)
    for row, res in enumerate(results):
        flat[row] = res.mask.ravel().astype(np.float32)
        losses[row] = res.final_loss
        _, densities[row] = sparsity(flat[row])
        preserved[row] = res.preserved

    return MaskSet(kind=kind, masks=flat, shape=tuple(images.shape[1:]),
                   labels=targets[ids].astype(np.int64),
                   image_ids=ids.astype(np.int64),
                   final_losses=losses, densities=densities, preserved=preserved,
                   attack=attack_meta, config=mask_config.to_dict())
