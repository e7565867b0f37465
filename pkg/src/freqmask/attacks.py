"""L-infinity adversarial attacks against a frozen classifier.

pgd_linf runs fixed-budget projected gradient ascent on the cross-entropy.
min_norm_linf wraps it in a per-sample bisection on epsilon, returning the
smallest budget (to a tolerance) at which the attack still flips the
prediction. Both operate on whole batches at once; per-sample results are
independent of each other and of batch composition order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Classifier, backward, predict

__all__ = ["AttackConfig", "AdversarialBatch", "pgd_linf", "min_norm_linf"]


@dataclass(frozen=True)
class AttackConfig:
    """Shared knobs for both attacks.

    epsilon is the fixed PGD budget. step_size of None means epsilon / 8.
    eps_max and bisect_tol only matter for the minimum-norm search.
    """

    epsilon: float = 0.01
    steps: int = 40
    step_size: float | None = None
    bisect_tol: float = 1e-4
    eps_max: float = 0.5
    random_start: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive when given")
        if self.bisect_tol <= 0:
            raise ValueError("bisect_tol must be positive")
        if self.eps_max <= 0:
            raise ValueError("eps_max must be positive")


@dataclass
class AdversarialBatch:
    """Attack output aligned with the input batch.

    norms holds the per-sample perturbation size: the measured l-inf
    deviation for pgd_linf, and the bisected epsilon for successful
    min_norm_linf samples (0 for samples that were already misclassified).
    """

    images: np.ndarray
    original_labels: np.ndarray
    adversarial_labels: np.ndarray
    success: np.ndarray
    norms: np.ndarray

    def __len__(self) -> int:
        return len(self.images)

    def summary(self) -> dict:
        """JSON-friendly record for sidecar files (images excluded)."""
        return {
            "n": int(len(self.images)),
            "success_rate": float(self.success.mean()) if len(self.images) else 0.0,
            "original_labels": self.original_labels.tolist(),
            "adversarial_labels": self.adversarial_labels.tolist(),
            "success": self.success.tolist(),
            "norms": self.norms.tolist(),
        }


def _check_inputs(model: Classifier, images: np.ndarray, labels: np.ndarray):
    if not model.frozen:
        raise ValueError("attacks require a frozen classifier")
    x = np.asarray(images, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 4 or x.shape[1:] != model.input_shape:
        raise ValueError(f"batch shape {x.shape} does not match model input")
    if y.shape != (len(x),):
        raise ValueError("labels must be one integer per image")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    return x, y


def _pgd_core(model, x0, labels, eps, step, steps, random_start, seed):
    """Sign-gradient ascent with projection onto the eps ball and [0,1].

    eps and step are per-sample arrays. Samples whose gradient goes
    non-finite at any point are reverted to the clean image and reported
    through the second return value.
    """
    n = len(x0)
    e = eps.reshape(n, 1, 1, 1)
    a = step.reshape(n, 1, 1, 1)
    x = x0.copy()
    ok = np.ones(n, dtype=bool)
    if random_start:
        rng = np.random.default_rng(seed)
        x = x0 + rng.uniform(-1.0, 1.0, size=x0.shape) * e
        x = np.clip(np.minimum(np.maximum(x, x0 - e), x0 + e), 0.0, 1.0)
    for _ in range(steps):
        _, g = backward(model, x, labels)
        finite = np.isfinite(g).all(axis=(1, 2, 3))
        ok &= finite
        g = np.where(ok[:, None, None, None], g, 0.0)
        x = x + a * np.sign(g)
        x = np.minimum(np.maximum(x, x0 - e), x0 + e)
        x = np.clip(x, 0.0, 1.0)
    if not ok.all():
        x[~ok] = x0[~ok]
    return x, ok


def pgd_linf(model: Classifier, images: np.ndarray, labels: np.ndarray,
             config: AttackConfig) -> AdversarialBatch:
    """Untargeted PGD under an l-inf budget of config.epsilon.

    Success means the prediction moved away from the supplied label, so a
    sample the model already gets wrong counts as an immediate success.
    """
    x0, y = _check_inputs(model, images, labels)
    n = len(x0)
    eps = np.full(n, float(config.epsilon))
    step = np.full(n, config.step_size) if config.step_size is not None else eps / 8.0
    x_adv, ok = _pgd_core(model, x0, y, eps, step, config.steps,
                          config.random_start, config.seed)
    adv_labels = predict(model, x_adv)
    success = (adv_labels != y) & ok
    norms = np.abs(x_adv - x0).reshape(n, -1).max(axis=1) if n else np.zeros(0)
    return AdversarialBatch(images=x_adv, original_labels=y.copy(),
                            adversarial_labels=adv_labels, success=success,
                            norms=norms)


def min_norm_linf(model: Classifier, images: np.ndarray, labels: np.ndarray,
                  config: AttackConfig) -> AdversarialBatch:
    """Smallest-epsilon PGD found by bisection on [0, eps_max].

    Assumes attack success is monotone in the budget, which holds for the
    sign-step ascent used here. Samples that resist the attack even at
    eps_max come back flagged unsuccessful, carrying that last attempt.
    """
    x0, y = _check_inputs(model, images, labels)
    n = len(x0)
    adv = x0.copy()
    adv_labels = predict(model, x0)
    success = adv_labels != y
    norms = np.zeros(n)

    todo = np.flatnonzero(~success)
    if todo.size:
        eps = np.full(todo.size, float(config.eps_max))
        step = (np.full(todo.size, config.step_size)
                if config.step_size is not None else eps / 8.0)
        probe, ok = _pgd_core(model, x0[todo], y[todo], eps, step, config.steps,
                              config.random_start, config.seed)
        flipped = (predict(model, probe) != y[todo]) & ok
        adv[todo] = probe
        norms[todo] = np.abs(probe - x0[todo]).reshape(todo.size, -1).max(axis=1)

        cand = todo[flipped]
        if cand.size:
            lo = np.zeros(cand.size)
            hi = np.full(cand.size, float(config.eps_max))
            best = probe[flipped].copy()
            rounds = max(1, math.ceil(math.log2(config.eps_max / config.bisect_tol)))
            for _ in range(rounds):
                mid = 0.5 * (lo + hi)
                step = (np.full(cand.size, config.step_size)
                        if config.step_size is not None else mid / 8.0)
                trial, ok = _pgd_core(model, x0[cand], y[cand], mid, step,
                                      config.steps, config.random_start, config.seed)
                hit = (predict(model, trial) != y[cand]) & ok
                hi[hit] = mid[hit]
                best[hit] = trial[hit]
                lo[~hit] = mid[~hit]
            adv[cand] = best
            norms[cand] = hi
            success[cand] = True

    adv_labels = predict(model, adv)
    # a failed search leaves the eps_max attempt in place; success stays False
    success &= adv_labels != y
    return AdversarialBatch(images=adv, original_labels=y.copy(),
                            adversarial_labels=adv_labels, success=success,
                            norms=norms)
