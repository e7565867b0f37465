"""Sparse Fourier-domain modulatory masks and an intrinsic-dimension
shuffle test for non-linear dependence between mask families.

The package splits into: spectral (2D DFT and the mask operator), model
(a small dense classifier with manual gradients), attacks (l-inf PGD and
a bisection minimum-norm variant), masks (training of essential- and
adversarial-frequency mask sets), idcorr (TwoNN estimation, shuffle
nulls, Z-test, linear baselines), data (generators, CIFAR-10 ingestion,
file formats), and cli (the `freqmask` command).
"""

__version__ = "0.1.0"

from .attacks import AdversarialBatch, AttackConfig, min_norm_linf, pgd_linf
from .data import (
    ImageBatch,
    SpectralDatasetConfig,
    SpiralConfig,
    gen_hypercube,
    gen_spectral_dataset,
    gen_spiral,
    load_cifar10,
    load_mask_set,
    save_mask_set,
)
from .idcorr import (
    CorrelationReport,
    correlate,
    cosine_similarity_stats,
    knn2,
    pearson_r2,
    shuffle_concat,
    twonn,
    z_test_one_sided,
)
from .masks import MaskSet, MaskTrainConfig, sparsity, train_mask, train_mask_set
from .model import Classifier, TrainConfig, accuracy, forward, init_classifier, train_classifier
from .spectral import apply_mask, fft2, ifft2, mask_gradient

__all__ = [
    "__version__",
    "AdversarialBatch",
    "AttackConfig",
    "Classifier",
    "CorrelationReport",
    "ImageBatch",
    "MaskSet",
    "MaskTrainConfig",
    "SpectralDatasetConfig",
    "SpiralConfig",
    "TrainConfig",
    "accuracy",
    "apply_mask",
    "correlate",
    "cosine_similarity_stats",
    "fft2",
    "forward",
    "gen_hypercube",
    "gen_spectral_dataset",
    "gen_spiral",
    "ifft2",
    "init_classifier",
    "knn2",
    "load_cifar10",
    "load_mask_set",
    "mask_gradient",
    "min_norm_linf",
    "pearson_r2",
    "pgd_linf",
    "save_mask_set",
    "shuffle_concat",
    "sparsity",
    "train_classifier",
    "train_mask",
    "train_mask_set",
    "twonn",
    "z_test_one_sided",
]
