import numpy as np
import pytest

from bandcorrect import ann, correction
from bandcorrect.acquisition import NoiseConfig
from bandcorrect.cli import RunConfig
from bandcorrect.essc import ConditioningConfig
from bandcorrect.spectral import FilterBank
from bandcorrect.waveform import sinc_pulse

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def bank():
    return FilterBank(7.5, 4)


@pytest.fixture(scope="session")
def sinc():
    return sinc_pulse(10000, 0.5, 3.75)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def trained_pipeline():
    """Full-size train/test datasets and a swept classifier for every band.

    Built once per session with the default run configuration; takes a couple
    of minutes on one core.
    """
    config = RunConfig()
    bank, original = config.bank, config.original()
    models, trains, tests, sweeps = [], [], [], []
    for n in range(bank.n_bands):
        kw = dict(samples_per_class=config.samples_per_class, noise=config.noise,
                  conditioning=config.conditioning, levels=config.attenuation_levels)
        train = correction.build_training_dataset(original, bank, n, seed=config.dataset_seed("train"), **kw)
        test = correction.build_training_dataset(original, bank, n, seed=config.dataset_seed("test"), **kw)
        best, losses, fitted = ann.select_hidden_size(train.features, train.labels, config.hidden_sizes,
                                                      config.train, band_index=n)
        models.append(fitted[best])
        trains.append(train)
        tests.append(test)
        sweeps.append((best, losses))
    return {"config": config, "bank": bank, "original": original, "models": models,
            "trains": trains, "tests": tests, "sweeps": sweeps}


@pytest.fixture(scope="session")
def noiseless():
    return NoiseConfig.noiseless()


@pytest.fixture(scope="session")
def conditioning():
    return ConditioningConfig()
