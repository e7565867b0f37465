import numpy as np
import pytest

from freqmask.attacks import AttackConfig
from freqmask.data import SpectralDatasetConfig, signature_bins
from freqmask.masks import (
    InitialPredictionError,
    MaskSet,
    MaskTrainConfig,
    mask_objective,
    sparsity,
    train_mask,
    train_mask_set,
)
from freqmask.model import cross_entropy, forward, init_classifier, predict
from freqmask.spectral import apply_mask
from oracles import central_diff, rel_err


def test_config_validation():
    MaskTrainConfig(l1_weight=0.0)
    with pytest.raises(ValueError):
        MaskTrainConfig(l1_weight=-0.01)
    with pytest.raises(ValueError):
        MaskTrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        MaskTrainConfig(min_steps=100, max_steps=50)
    with pytest.raises(ValueError):
        MaskTrainConfig(window=0)
    with pytest.raises(ValueError):
        MaskTrainConfig(tol=0.0)


def test_sparsity_endpoints():
    assert sparsity(np.ones((1, 4, 4))) == (16.0, 1.0)
    assert sparsity(np.zeros((1, 4, 4))) == (0.0, 0.0)
    half = np.zeros(8)
    half[:2] = 1.0
    l1, density = sparsity(half)
    assert l1 == 2.0 and density == 0.25


def test_objective_without_penalty_is_cross_entropy(tiny_model):
    rng = np.random.default_rng(5)
    image = rng.uniform(0.0, 1.0, (1, 4, 4))
    mask = rng.uniform(0.05, 0.95, (1, 4, 4))
    loss, _ = mask_objective(tiny_model, image, mask, 2, l1_weight=0.0)
    direct = cross_entropy(forward(tiny_model, apply_mask(image, mask)[None]),
                           np.array([2]))
    assert loss == direct


def test_penalty_adds_constant_gradient(tiny_model):
    rng = np.random.default_rng(6)
    image = rng.uniform(0.0, 1.0, (1, 4, 4))
    mask = rng.uniform(0.05, 0.95, (1, 4, 4))
    loss0, grad0 = mask_objective(tiny_model, image, mask, 1, l1_weight=0.0)
    loss1, grad1 = mask_objective(tiny_model, image, mask, 1, l1_weight=0.01)
    assert np.array_equal(grad1, grad0 + 0.01)
    assert loss1 == loss0 + 0.01 * float(mask.sum())


def test_objective_gradient_matches_central_differences(tiny_model):
    rng = np.random.default_rng(7)
    image = rng.uniform(0.0, 1.0, (1, 4, 4))
    mask = rng.uniform(0.05, 0.95, (1, 4, 4))

    def loss_of(m):
        return mask_objective(tiny_model, image, m, 0, l1_weight=0.01)[0]

    _, grad = mask_objective(tiny_model, image, mask, 0, l1_weight=0.01)
    numeric = central_diff(loss_of, mask, h=1e-5)
    assert rel_err(grad, numeric) < 1e-4


def test_train_requires_frozen_model():
    model = init_classifier((1, 4, 4), 3, hidden_dim=5, seed=0)
    image = np.random.default_rng(0).uniform(0, 1, (1, 4, 4))
    with pytest.raises(ValueError):
        train_mask(model, image, 0, MaskTrainConfig())


def test_train_rejects_shape_mismatch(tiny_model):
    with pytest.raises(ValueError):
        train_mask(tiny_model, np.zeros((1, 3, 3)), 0, MaskTrainConfig())


def test_train_rejects_wrong_initial_prediction(trained_model, spectral_data):
    _, test = spectral_data
    i = int(np.flatnonzero(predict(trained_model, test.images) == test.labels)[0])
    wrong = (int(test.labels[i]) + 1) % 4
    with pytest.raises(InitialPredictionError):
        train_mask(trained_model, test.images[i], wrong, MaskTrainConfig())


def test_train_mask_easy_case(trained_model, spectral_data):
    _, test = spectral_data
    i = int(np.flatnonzero(predict(trained_model, test.images) == test.labels)[0])
    config = MaskTrainConfig(min_steps=60, max_steps=200, window=20)
    result = train_mask(trained_model, test.images[i], int(test.labels[i]), config)
    assert result.preserved
    assert 60 <= result.steps <= 200
    assert result.mask.min() >= 0.0 and result.mask.max() <= 1.0
    assert np.isfinite(result.final_loss)


@pytest.fixture(scope="module")
def aligned_sets(trained_model, spectral_data, adv_batch):
    """EF and AF families on the first dozen test images, AF aligned to EF."""
    _, test = spectral_data
    config = MaskTrainConfig()
    ef = train_mask_set(trained_model, test.images, test.labels, "EF", config,
                        restrict_ids=np.arange(12))
    af = train_mask_set(trained_model, test.images, test.labels, "AF", config,
                        attack_config=AttackConfig(epsilon=0.05),
                        adversarial=adv_batch, restrict_ids=ef.image_ids)
    return ef, af


def test_set_sizes_nest(aligned_sets):
    ef, af = aligned_sets
    assert len(ef) <= 12
    assert len(af) <= len(ef)
    assert np.isin(af.image_ids, ef.image_ids).all()


def test_ef_targets_true_labels(aligned_sets, spectral_data):
    ef, _ = aligned_sets
    _, test = spectral_data
    assert np.array_equal(ef.labels, test.labels[ef.image_ids])
    assert ef.attack is None
    assert ef.preserved.all()


def test_af_targets_adversarial_labels(aligned_sets, spectral_data, adv_batch):
    _, af = aligned_sets
    _, test = spectral_data
    assert np.array_equal(af.labels, adv_batch.adversarial_labels[af.image_ids])
    assert not np.any(af.labels == test.labels[af.image_ids])
    assert af.preserved.all()


def test_af_attack_metadata(aligned_sets):
    _, af = aligned_sets
    assert af.attack["method"] == "pgd"
    assert af.attack["epsilon"] == 0.05
    norms = np.asarray(af.attack["norms"])
    assert len(norms) == len(af)
    assert norms.max() <= 0.05 + 1e-12


def test_trained_masks_are_sparse(aligned_sets):
    ef, af = aligned_sets
    assert ef.densities.mean() < 0.2
    assert af.densities.mean() < 0.2
    for set_ in (ef, af):
        assert set_.masks.min() >= 0.0 and set_.masks.max() <= 1.0


def test_grids_shape(aligned_sets):
    ef, _ = aligned_sets
    grids = ef.grids()
    assert grids.shape == (len(ef), 1, 16, 16)
    assert np.array_equal(grids.reshape(len(ef), -1), ef.masks)


def test_ef_masks_keep_signature_bins(aligned_sets):
    """Trained EF masks concentrate on the class's generating frequencies."""
    ef, _ = aligned_sets
    config = SpectralDatasetConfig()
    on_signature = []
    elsewhere = []
    for grid, label in zip(ef.grids(), ef.labels):
        marked = np.zeros(grid.shape, dtype=bool)
        for c, u, v in signature_bins(config, int(label)):
            marked[c, u, v] = True
        on_signature.append(grid[marked].mean())
        elsewhere.append(grid[~marked].mean())
    assert np.mean(on_signature) >= 2.0 * np.mean(elsewhere)


def test_l1_weight_controls_density(trained_model, spectral_data, aligned_sets):
    ef, _ = aligned_sets
    _, test = spectral_data
    ids = ef.image_ids[:6]
    loose = train_mask_set(trained_model, test.images, test.labels, "EF",
                           MaskTrainConfig(l1_weight=0.0), restrict_ids=ids)
    assert np.array_equal(loose.image_ids, ids)
    assert np.all(ef.densities[:6] < loose.densities)


def test_set_requires_eligible_images(trained_model, spectral_data):
    _, test = spectral_data
    correct = np.flatnonzero(predict(trained_model, test.images) == test.labels)
    images = test.images[correct[:8]]
    labels = test.labels[correct[:8]]
    config = MaskTrainConfig(min_steps=1, max_steps=2, window=1)
    # a zero-budget attack flips nothing, so no AF mask can be trained
    with pytest.raises(ValueError, match="no eligible"):
        train_mask_set(trained_model, images, labels, "AF", config,
                       attack_config=AttackConfig(epsilon=0.0, steps=2))
    # and EF needs at least one correctly classified image
    with pytest.raises(ValueError, match="no eligible"):
        train_mask_set(trained_model, images, (labels + 1) % 4, "EF", config)


def test_set_argument_validation(trained_model, spectral_data, adv_batch):
    _, test = spectral_data
    config = MaskTrainConfig(min_steps=1, max_steps=2, window=1)
    with pytest.raises(ValueError):
        train_mask_set(trained_model, test.images, test.labels, "XX", config)
    with pytest.raises(ValueError):
        train_mask_set(trained_model, test.images, test.labels, "AF", config)
    with pytest.raises(ValueError):
        train_mask_set(trained_model, test.images, test.labels, "AF", config,
                       attack_config=AttackConfig(), attack_method="fgsm")
    with pytest.raises(ValueError, match="does not cover"):
        train_mask_set(trained_model, test.images[:10], test.labels[:10], "AF",
                       config, attack_config=AttackConfig(), adversarial=adv_batch)


def _valid_set_fields():
    return dict(kind="EF",
                masks=np.full((2, 4), 0.5, dtype=np.float32),
                shape=(1, 2, 2),
                labels=np.array([0, 1]),
                image_ids=np.array([3, 7]),
                final_losses=np.array([0.1, 0.2]),
                densities=np.array([0.0, 0.0]),
                preserved=np.array([True, True]))


def test_mask_set_validation():
    MaskSet(**_valid_set_fields())
    bad = _valid_set_fields()
    bad["kind"] = "Q"
    with pytest.raises(ValueError):
        MaskSet(**bad)
    bad = _valid_set_fields()
    bad["masks"] = np.zeros((0, 4), dtype=np.float32)
    with pytest.raises(ValueError):
        MaskSet(**bad)
    bad = _valid_set_fields()
    bad["masks"] = np.full((2, 5), 0.5, dtype=np.float32)
    with pytest.raises(ValueError):
        MaskSet(**bad)
    bad = _valid_set_fields()
    bad["labels"] = np.array([0])
    with pytest.raises(ValueError):
        MaskSet(**bad)
    bad = _valid_set_fields()
    bad["masks"] = np.full((2, 4), 1.5, dtype=np.float32)
    with pytest.raises(ValueError):
        MaskSet(**bad)
    bad = _valid_set_fields()
    bad["kind"] = "AF"  # no attack metadata supplied
    with pytest.raises(ValueError):
        MaskSet(**bad)
