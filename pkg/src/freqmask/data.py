"""Synthetic data generators, dataset ingestion, and artifact file formats.

Generators: an Archimedean spiral (the 1-D manifold benchmark), uniform
hypercubes (known-dimension oracles for the estimator), and a
frequency-structured image dataset where each class is defined by which
FFT bins carry its energy. The image classes are what the mask pipeline
trains on: a classifier that must rely on specific frequencies gives the
essential-frequency story a ground truth to check against.

File formats: CIFAR-10 binary batches (read only) and the mask-set
container, a small binary format with a JSON trailer that roundtrips
bit-exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagicError, FileFormatError, FormatVersionError, PayloadLengthError
from .masks import MaskSet

__all__ = [
    "ImageBatch",
    "SpiralConfig",
    "SpectralDatasetConfig",
    "spiral_coords",
    "gen_spiral",
    "gen_hypercube",
    "gen_spectral_dataset",
    "signature_bins",
    "load_cifar10",
    "save_mask_set",
    "load_mask_set",
]

MASKSET_MAGIC = b"FMSK"
MASKSET_VERSION = 1
_KIND_CODES = {"EF": 1, "AF": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

CIFAR_RECORD = 3073  # 1 label byte + 3 * 1024 pixel bytes


@dataclass
class ImageBatch:
    """N images of shape (C, H, W) with pixel values in [0,1] plus labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise ValueError("images must be an (N, C, H, W) array")
        if self.labels.shape != (len(self.images),):
            raise ValueError("need exactly one label per image")
        if len(self.images) and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])


@dataclass(frozen=True)
class SpiralConfig:
    """Archimedean spiral r = rate * theta sampled over full turns.

    noise is the std of the added Gaussian jitter as a fraction of the
    maximum radius. The default is deliberately tiny: near the spiral's
    center the gap between consecutive points shrinks toward zero, and any
    jitter comparable to that gap makes the cloud locally two-dimensional
    there, dragging the dimension estimate up.
    """

    n_points: int = 5000
    turns: float = 2.0
    radial_rate: float = 1.0
    noise: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError("need at least 3 points")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        if self.turns <= 0 or self.radial_rate <= 0:
            raise ValueError("turns and radial_rate must be positive")


def spiral_coords(theta, radial_rate: float = 1.0) -> np.ndarray:
    """Exact noise-free spiral coordinates (r cos theta, r sin theta)."""
    theta = np.asarray(theta, dtype=np.float64)
    r = radial_rate * theta
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def gen_spiral(config: SpiralConfig) -> np.ndarray:
    """N x 2 spiral points with angles drawn uniformly at random.

    Random (rather than evenly spaced) angles matter: the nearest-neighbor
    ratio estimator assumes locally Poisson sampling, and a regular grid
    along the curve drives every ratio to 1.
    """
    rng = np.random.default_rng(config.seed)
    theta = rng.uniform(0.0, 2.0 * np.pi * config.turns, config.n_points)
    pts = spiral_coords(theta, config.radial_rate)
    if config.noise > 0:
        r_max = config.radial_rate * 2.0 * np.pi * config.turns
        pts = pts + rng.normal(0.0, config.noise * r_max, size=pts.shape)
    return pts


def gen_hypercube(n: int, d: int, seed: int = 0) -> np.ndarray:
    """n i.i.d. uniform points in the unit d-cube."""
    if n < 3 or d < 1:
        raise ValueError("need n >= 3 points and d >= 1 dimensions")
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(n, d))


@dataclass(frozen=True)
class SpectralDatasetConfig:
    """Image classes keyed by which FFT bins carry their energy.

    signatures[k] lists the (channel, u, v) bins of class k. Each image of
    the class is the sum of one cosine plane wave per bin, plus broadband
    pixel noise, min-max scaled into [0,1]. Every bin gets a random phase,
    drawn once per dataset from the seed, so a class is a fixed template and
    only the noise varies between its images. The bins must be distinct
    across classes, also after reflecting through the conjugate bin
    (H-u, W-v), since a real image puts equal energy there.
    """

    n_train: int = 500
    n_test: int = 200
    n_classes: int = 4
    shape: tuple[int, int, int] = (1, 16, 16)
    signatures: tuple = (((0, 2, 3),), ((0, 5, 1),), ((0, 1, 6),), ((0, 7, 4),))
    amplitude: float = 1.0
    noise: float = 2.8
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("both splits must be nonempty")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if len(self.signatures) != self.n_classes:
            raise ValueError("one signature tuple per class required")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        c_max, h, w = self.shape
        seen = {}
        for k, sig in enumerate(self.signatures):
            if not sig:
                raise ValueError(f"class {k} has an empty signature")
            for c, u, v in sig:
                if not (0 <= c < c_max and 0 <= u < h and 0 <= v < w):
                    raise ValueError(f"bin ({c},{u},{v}) outside the {self.shape} grid")
                for key in ((c, u, v), (c, (h - u) % h, (w - v) % w)):
                    if key in seen and seen[key] != k:
                        raise ValueError(
                            f"bin {key} collides between classes {seen[key]} and {k} "
                            "(conjugate bins included)"
                        )
                    seen[key] = k


def signature_bins(config: SpectralDatasetConfig, label: int) -> set:
    """The class's bins plus their conjugates, as (channel, u, v) tuples."""
    _, h, w = config.shape
    bins = set()
    for c, u, v in config.signatures[label]:
        bins.add((c, u, v))
        bins.add((c, (h - u) % h, (w - v) % w))
    return bins


def _class_templates(config: SpectralDatasetConfig,
                     rng: np.random.Generator) -> np.ndarray:
    """One noiseless image per class, phases drawn here in class order."""
    c_dim, h, w = config.shape
    rows = np.arange(h).reshape(h, 1)
    cols = np.arange(w).reshape(1, w)
    templates = np.zeros((config.n_classes, c_dim, h, w))
    for k, sig in enumerate(config.signatures):
        for c, u, v in sig:
            angle = 2.0 * np.pi * (u * rows / h + v * cols / w)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            templates[k, c] += config.amplitude * np.cos(angle + phase)
    return templates


def _spectral_images(config: SpectralDatasetConfig, labels: np.ndarray,
                     templates: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    images = np.empty((len(labels), *config.shape))
    for i, label in enumerate(labels):
        img = templates[label].copy()
        if config.noise > 0:
            img += rng.normal(0.0, config.noise, size=img.shape)
        lo, hi = img.min(), img.max()
        images[i] = (img - lo) / (hi - lo) if hi > lo else 0.0
    return images


def gen_spectral_dataset(config: SpectralDatasetConfig) -> tuple[ImageBatch, ImageBatch]:
    """(train, test) batches with labels balanced to within one per class."""
    rng = np.random.default_rng(config.seed)
    templates = _class_templates(config, rng)
    train_labels = np.arange(config.n_train) % config.n_classes
    test_labels = np.arange(config.n_test) % config.n_classes
    train = ImageBatch(_spectral_images(config, train_labels, templates, rng),
                       train_labels)
    test = ImageBatch(_spectral_images(config, test_labels, templates, rng),
                      test_labels)
    return train, test


def load_cifar10(path) -> ImageBatch:
    """Parse a CIFAR-10 binary batch file into an ImageBatch.

    Records are 3073 bytes: one label then 1024 bytes per channel (R, G, B)
    row-major. Pixels are scaled to [0,1] as value / 255.
    """
    with open(path, "rb") as f:
        raw = f.read()
    n, leftover = divmod(len(raw), CIFAR_RECORD)
    if leftover:
        raise PayloadLengthError(
            f"truncated record at byte {n * CIFAR_RECORD}: "
            f"{leftover} trailing bytes, records are {CIFAR_RECORD} bytes"
        )
    if n == 0:
        raise PayloadLengthError("file holds no records")
    data = np.frombuffer(raw, dtype=np.uint8).reshape(n, CIFAR_RECORD)
    labels = data[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise FileFormatError(
            f"label {labels[bad[0]]} at record {bad[0]} outside [0, 10)"
        )
    images = data[:, 1:].reshape(n, 3, 32, 32).astype(np.float64) / 255.0
    return ImageBatch(images, labels)


def save_mask_set(mask_set: MaskSet, path) -> None:
    """Write the binary mask-set container; see load_mask_set."""
    n = len(mask_set)
    c, h, w = mask_set.shape
    trailer = json.dumps({
        "labels": mask_set.labels.tolist(),
        "image_ids": mask_set.image_ids.tolist(),
        "final_losses": mask_set.final_losses.tolist(),
        "densities": mask_set.densities.tolist(),
        "preserved": mask_set.preserved.tolist(),
        "attack": mask_set.attack,
        "config": mask_set.config,
    }).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MASKSET_MAGIC)
        f.write(struct.pack("<H", MASKSET_VERSION))
        f.write(struct.pack("<B", _KIND_CODES[mask_set.kind]))
        f.write(struct.pack("<IIII", n, c, h, w))
        f.write(np.ascontiguousarray(mask_set.masks, dtype="<f4").tobytes())
        f.write(trailer)


def load_mask_set(path) -> MaskSet:
    """Inverse of save_mask_set; the roundtrip is bit-exact.

    Layout: magic "FMSK", version u16, kind byte, N/C/H/W u32 (all
    little-endian), N*C*H*W float32 mask entries row-major, then a JSON
    trailer holding labels, image ids, diagnostics, attack metadata, and
    the config echo.
    """
    with open(path, "rb") as f:
        raw = f.read()
    header = 4 + 2 + 1 + 16
    if len(raw) < header:
        raise PayloadLengthError(f"file too short for a header: {len(raw)} bytes")
    if raw[:4] != MASKSET_MAGIC:
        raise BadMagicError(f"not a mask-set file (magic {raw[:4]!r})")
    version = struct.unpack("<H", raw[4:6])[0]
    if version != MASKSET_VERSION:
        raise FormatVersionError(f"unsupported mask-set version {version}")
    kind_code = raw[6]
    if kind_code not in _KIND_NAMES:
        raise FileFormatError(f"unknown mask kind code {kind_code}")
    n, c, h, w = struct.unpack("<IIII", raw[7:header])
    need = n * c * h * w * 4
    if len(raw) < header + need:
        raise PayloadLengthError(
            f"mask payload truncated: need {need} bytes, file holds {len(raw) - header}"
        )
    masks = np.frombuffer(raw, dtype="<f4", count=n * c * h * w,
                          offset=header).reshape(n, c * h * w).copy()
    trailer_bytes = raw[header + need:]
    if not trailer_bytes:
        raise PayloadLengthError("metadata trailer missing")
    try:
        meta = json.loads(trailer_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"metadata trailer is not valid JSON: {exc}") from exc
    return MaskSet(
        kind=_KIND_NAMES[kind_code],
        masks=masks,
        shape=(c, h, w),
        labels=np.asarray(meta["labels"], dtype=np.int64),
        image_ids=np.asarray(meta["image_ids"], dtype=np.int64),
        final_losses=np.asarray(meta["final_losses"], dtype=np.float64),
        densities=np.asarray(meta["densities"], dtype=np.float64),
        preserved=np.asarray(meta["preserved"], dtype=bool),
        attack=meta["attack"],
        config=meta["config"],
    )
