"""Aspect-preserving augmentation."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from absakit.augment import AugmentError, AugmentPolicy, augment, load_lexicon, write_aug_files
from absakit.config import TaskKind
from absakit.corpus import parse_atesc
from absakit.datasets import load
from genutil import random_example_corpus
from test_datasets import write_dataset


def aspect_multiset(examples):
    return Counter(
        (example.aspect_tokens(span), span.polarity)
        for example in examples
        for span in example.spans
    )


class TestPolicy:
    def test_bounds(self):
        with pytest.raises(AugmentError):
            AugmentPolicy(multiplier=17)
        with pytest.raises(AugmentError):
            AugmentPolicy(rate=0.6)
        with pytest.raises(AugmentError):
            AugmentPolicy(ops=("backtranslate",))


class TestAugment:
    def test_multiplier_zero_empty(self):
        corpus = random_example_corpus(random.Random(0), max_sentences=5)
        assert augment(corpus, AugmentPolicy(multiplier=0)) == []

    def test_multiplier_two_counts_and_spans_intact(self):
        rng = random.Random(1)
        corpus = [ex for _ in range(5) for ex in random_example_corpus(rng, max_sentences=3)][:10]
        while len(corpus) < 10:
            corpus.extend(random_example_corpus(rng, max_sentences=3))
        corpus = corpus[:10]
        out = augment(corpus, AugmentPolicy(multiplier=2, rate=0.3))
        assert len(out) == 20
        expected = Counter()
        for example in corpus:
            for _ in range(2):
                expected.update(aspect_multiset([example]))
        assert aspect_multiset(out) == expected

    def test_deterministic_under_seed(self):
        corpus = random_example_corpus(random.Random(2), max_sentences=6)
        policy = AugmentPolicy(multiplier=3, rate=0.4, seed=99)
        assert augment(corpus, policy) == augment(corpus, policy)

    def test_different_seed_differs(self):
        rng = random.Random(3)
        corpus = [ex for ex in random_example_corpus(rng, max_sentences=6) if len(ex.tokens) > 3]
        while not corpus:
            corpus = [ex for ex in random_example_corpus(rng, max_sentences=6) if len(ex.tokens) > 3]
        a = augment(corpus, AugmentPolicy(multiplier=4, rate=0.5, seed=1, ops=("random_swap",)))
        b = augment(corpus, AugmentPolicy(multiplier=4, rate=0.5, seed=2, ops=("random_swap",)))
        assert a != b or all(len(e.tokens) <= 2 for e in corpus)

    def test_synonym_swap_respects_lexicon_and_spans(self, tmp_path):
        lexicon_path = tmp_path / "syn.tsv"
        lexicon_path.write_text("good\tgreat\tfine\nbad\tawful\n")
        lexicon = load_lexicon(lexicon_path)
        corpus = parse_atesc("the O -\nfood B-ASP Positive\nwas O -\ngood O -\n")
        out = augment(
            corpus, AugmentPolicy(multiplier=8, rate=0.5, ops=("synonym_swap",)), lexicon
        )
        assert all(e.tokens[e.spans[0].start] == "food" for e in out)
        replaced = {e.tokens[-1] for e in out}
        assert replaced <= {"good", "great", "fine"}
        assert len(replaced) > 1  # at a 0.5 rate over 8 copies some swap happens

    def test_deletion_never_touches_spans(self):
        corpus = parse_atesc(
            "a O -\nb O -\nfried B-ASP Negative\nrice I-ASP -\nc O -\nd O -\n"
        )
        out = augment(
            corpus, AugmentPolicy(multiplier=16, rate=0.5, ops=("random_deletion",), seed=5)
        )
        for example in out:
            span = example.spans[0]
            assert example.aspect_tokens(span) == ("fried", "rice")
        assert any(len(e.tokens) < 6 for e in out)

    def test_label_distribution_scales_by_multiplier(self):
        corpus = parse_atesc(
            "x B-ASP Positive\ny O -\n\nz B-ASP Negative\nw O -\n\nq B-ASP Positive\n"
        )
        out = augment(corpus, AugmentPolicy(multiplier=4, rate=0.2))
        labels = Counter(s.polarity.value for e in out for s in e.spans)
        assert labels == {"Positive": 8, "Negative": 4}


class TestWriteAugFiles:
    def test_write_then_load_with_aug(self, tmp_path):
        handle = write_dataset(tmp_path, "aug", TaskKind.ATESC, train_n=5, test_n=2)
        base = load(handle)["train"]
        augmented = augment(base, AugmentPolicy(multiplier=3, rate=0.2))
        write_aug_files(handle, augmented)
        grown = load(handle, with_aug=True)
        assert len(grown["train"]) == 5 + 15
        assert len(grown["test"]) == 2

    def test_atesc_files_parse_under_atesc(self, tmp_path):
        handle = write_dataset(tmp_path, "aug2", TaskKind.ATESC, train_n=4)
        augmented = augment(load(handle)["train"], AugmentPolicy(multiplier=2))
        paths = write_aug_files(handle, augmented)
        parsed = parse_atesc(paths[0].read_text(encoding="utf-8"))
        assert len(parsed) == 8

    def test_asc_files_parse_under_asc(self, tmp_path):
        handle = write_dataset(tmp_path, "aug3", TaskKind.ASC, train_n=4)
        augmented = augment(load(handle)["train"], AugmentPolicy(multiplier=2))
        write_aug_files(handle, augmented)
        assert len(load(handle, with_aug=True)["train"]) == 4 + 8
