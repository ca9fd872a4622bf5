import time

import numpy as np
import pytest

from dysarthria_tts.acoustic_model import ModelConfig, TrainConfig, build_model, train
from dysarthria_tts.text_frontend import load_lexicon
from dysarthria_tts.toy_corpus import load_toy_corpus, speaker_index, training_example

TOY_STEPS = 1500

_acceptance_lines = []


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture(scope="session")
def toy_records():
    return load_toy_corpus()


@pytest.fixture(scope="session")
def toy_speakers(toy_records):
    return speaker_index(toy_records)


@pytest.fixture(scope="session")
def toy_examples(toy_records, lexicon, toy_speakers):
    return [training_example(r, lexicon, toy_speakers) for r in toy_records]


@pytest.fixture(scope="session")
def trained_toy_model(toy_examples, lexicon, toy_speakers):
    """(model, loss curve, seconds) for the toy model trained on the bundled corpus."""
    start = time.perf_counter()
    cfg = ModelConfig(n_phones=len(lexicon.phone_inventory), n_speakers=len(toy_speakers))
    model = build_model(cfg, seed=0)
    curve = train(model, toy_examples, TrainConfig(steps=TOY_STEPS, seed=0))
    return model, curve, time.perf_counter() - start


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _acceptance_lines:
        terminalreporter.write_line(line)
