import json

import pytest
from hypothesis import settings

from botscope import corpus, ensemble, features, forest

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

FAST_PARAMS = forest.ForestParams(n_trees=20, max_depth=8)


@pytest.fixture(scope="session")
def registry():
    return features.default_registry()


@pytest.fixture(scope="session")
def micro_payload():
    return features.load_micro_payload()


@pytest.fixture(scope="session")
def small_corpus():
    """Two-archetype corpus for fast unit tests."""
    spec = corpus.CorpusSpec(humans=40, spammers=40, name="small")
    return corpus.synthesize_corpus(spec, seed=11)


@pytest.fixture(scope="session")
def mixed_corpus():
    """Corpus with two bot classes for ensemble structure tests."""
    spec = corpus.CorpusSpec(humans=50, spammers=20, fake_followers=20, name="mixed")
    return corpus.synthesize_corpus(spec, seed=12)


@pytest.fixture(scope="session")
def small_esc(mixed_corpus, registry):
    return ensemble.train_esc([mixed_corpus], registry, FAST_PARAMS, seed=12)


@pytest.fixture(scope="session")
def fixture_corpus():
    """The shipped acceptance corpus: four bot archetypes plus cyborgs."""
    return corpus.synthesize_corpus(corpus.DEFAULT_FIXTURE_SPEC, seed=42)


@pytest.fixture(scope="session")
def calibration_tables(small_esc, mixed_corpus):
    english = [(ensemble.score_account(small_esc, r.payload).raw_overall, r.label)
               for r in mixed_corpus.records]
    universal = [(ensemble.score_account(small_esc, r.payload).raw_universal, r.label)
                 for r in mixed_corpus.records]
    return {
        "english": ensemble.calibrate(small_esc, english, prior=0.15),
        "universal": ensemble.calibrate(small_esc, universal, prior=0.15),
    }


def write_payload_lines(path, payloads):
    with open(path, "w", encoding="utf-8") as fh:
        for payload in payloads:
            fh.write(json.dumps(corpus.payload_to_dict(payload), sort_keys=True))
            fh.write("\n")
