import pytest

from suffixbeam.encoding import build_vocabulary
from suffixbeam.eventlog import build_prefix_log
from suffixbeam.predictor import train_ngram
from suffixbeam.synthgen import SynthConfig, generate


@pytest.fixture(scope="session")
def synth():
    """The default synthetic benchmark (1000 train / 200 exceptional test)."""
    return generate(SynthConfig())


@pytest.fixture(scope="session")
def synth_ngram(synth):
    vocab = build_vocabulary(synth.train_log)
    return train_ngram(build_prefix_log(synth.train_log), vocab, order=3, alpha=0.01)
