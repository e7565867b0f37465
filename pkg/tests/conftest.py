import numpy as np
import pytest

from freqmask.attacks import AttackConfig, pgd_linf
from freqmask.data import SpectralDatasetConfig, gen_spectral_dataset
from freqmask.model import TrainConfig, init_classifier, train_classifier


@pytest.fixture(scope="session")
def spectral_data():
    """(train, test) at the library defaults; shared by everything."""
    return gen_spectral_dataset(SpectralDatasetConfig())


@pytest.fixture(scope="session")
def trained_model(spectral_data):
    train, _ = spectral_data
    return train_classifier(train.images, train.labels, TrainConfig())


@pytest.fixture(scope="session")
def adv_batch(trained_model, spectral_data):
    _, test = spectral_data
    config = AttackConfig(epsilon=0.05)
    return pgd_linf(trained_model, test.images, test.labels, config)


@pytest.fixture
def tiny_model():
    """Small random frozen net for gradient and attack plumbing tests."""
    model = init_classifier((1, 4, 4), 3, hidden_dim=5, seed=11)
    model.frozen = True
    return model
