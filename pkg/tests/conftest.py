import random

import pytest

from corpusforge.text_pipeline import ParallelCorpus, Sentence


def make_sentence(text: str) -> Sentence:
    return Sentence.from_raw(text)


def make_corpus(lines) -> list[Sentence]:
    return [Sentence.from_raw(line) for line in lines]


def make_parallel(pairs) -> ParallelCorpus:
    return ParallelCorpus(
        pairs=[(Sentence.from_raw(s), Sentence.from_raw(t)) for s, t in pairs]
    )


def random_corpus(rng: random.Random, n_sentences, vocab, max_len=6) -> list[Sentence]:
    lines = [
        " ".join(rng.choice(vocab) for _ in range(rng.randint(1, max_len)))
        for _ in range(n_sentences)
    ]
    return make_corpus(lines)


@pytest.fixture
def kn_corpus():
    """The hand-checked bigram Kneser-Ney fixture corpus."""
    return make_corpus(["a b", "a b", "a c"])


@pytest.fixture
def classic_m1_corpus():
    """The classic two-pair Model 1 instance."""
    return make_parallel([("a b", "x y"), ("a", "x")])
