from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from textensemble.errors import InvalidSpec
from textensemble.synth import CLASSES, GeneratorSpec, generate, keyword_pool
from textensemble.text_pipeline import tokenize


def test_default_cardinality_and_balance(synth_corpus):
    assert len(synth_corpus) == 2000
    assert Counter(p.label for p in synth_corpus) == {c: 200 for c in CLASSES}


def test_same_seed_same_corpus():
    spec = GeneratorSpec(phrases_per_class=15, seed=11)
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(GeneratorSpec(phrases_per_class=15, seed=12))


def test_ric_pool_is_readable():
    assert {"ricarica", "credito"} <= set(keyword_pool("RIC", 12))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.integers(1, 30), st.integers(0, 10_000))
def test_noise_free_classes_are_disjoint(per_class, keywords, seed):
    corpus = generate(GeneratorSpec(phrases_per_class=per_class, keywords_per_class=keywords,
                                    noise_rate=0.0, seed=seed))
    vocab = {}
    for p in corpus:
        toks = tokenize(p.text)
        assert 4 <= len(toks) <= 12
        vocab.setdefault(p.label, set()).update(toks)
    labels = sorted(vocab)
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            assert not vocab[a] & vocab[b]
    assert Counter(p.label for p in corpus) == {c: per_class for c in CLASSES}


@pytest.mark.parametrize("kwargs", [
    {"phrases_per_class": 0},
    {"noise_rate": 1.0},
    {"noise_rate": -0.1},
    {"keywords_per_class": 0},
    {"classes": ("A", "A")},
    {"min_tokens": 5, "max_tokens": 4},
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec(**kwargs))
