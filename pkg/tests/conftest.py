import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from textensemble.engine import partition  # noqa: E402
from textensemble.ensemble import TrainConfig, train  # noqa: E402
from textensemble.synth import GeneratorSpec, generate  # noqa: E402
from textensemble.text_pipeline import LabeledPhrase, LabelSet, build_vocabulary, encode_corpus  # noqa: E402


def encoded(pairs, p=1):
    """(label, text) pairs -> (partitioned ordinals+vectors, LabelSet, Vocabulary)."""
    corpus = [LabeledPhrase(lab, text) for lab, text in pairs]
    vocab = build_vocabulary(corpus)
    labels = LabelSet.from_labels(lab for lab, _ in pairs)
    return partition(encode_corpus(corpus, vocab, labels), p), labels, vocab


@pytest.fixture(scope="session")
def synth_corpus():
    return generate(GeneratorSpec())


@pytest.fixture(scope="session")
def small_synth():
    return generate(GeneratorSpec(phrases_per_class=20, seed=7))


@pytest.fixture(scope="session")
def small_ensemble(small_synth):
    return train("ensemble", small_synth, TrainConfig(n_trees=15, iterations=60, units=16))


@pytest.fixture(scope="session")
def synth_ensemble(synth_corpus):
    # full corpus so the one-epoch MLP is past its warm-up
    return train("ensemble", synth_corpus, TrainConfig(n_trees=30))


# filled by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
