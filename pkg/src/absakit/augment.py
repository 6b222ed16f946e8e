"""Aspect-preserving data augmentation.

The default transform applies EDA-style surface edits (synonym swap, random
deletion, random swap) to non-aspect tokens only; aspect spans and their
polarities survive every edit, and output is deterministic under the policy
seed.  Synonyms come from a user-supplied lexicon file of tab-separated
synonym sets; without one, synonym_swap is a no-op.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from absakit.config import TaskKind
from absakit.corpus import (
    AbsaExample,
    AscTriple,
    AspectSpan,
    Corpus,
    serialize_asc_triples,
    serialize_atesc,
    example_to_triples,
    triple_to_example,
)
from absakit.datasets import AUG_INFIX, DatasetHandle

OPS = ("synonym_swap", "random_deletion", "random_swap")


class AugmentError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentPolicy:
    multiplier: int = 2
    ops: tuple[str, ...] = ("synonym_swap", "random_swap")
    rate: float = 0.1
    seed: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        if not 0 <= self.multiplier <= 16:
            raise AugmentError("multiplier must be in [0, 16]")
        if not 0.0 <= self.rate <= 0.5:
            raise AugmentError("rate must be in [0, 0.5]")
        unknown = [op for op in self.ops if op not in OPS]
        if unknown:
            raise AugmentError(f"unknown ops: {unknown}")


def load_lexicon(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Lexicon file: one tab-separated synonym set per line."""
    lexicon: dict[str, tuple[str, ...]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        words = tuple(w for w in line.strip().split("\t") if w)
        if len(words) < 2:
            continue
        for word in words:
            lexicon[word] = words
    return lexicon


def _segments(example: AbsaExample) -> list[list[int]]:
    """Maximal runs of token positions outside every span."""
    in_span = set()
    for span in example.spans:
        in_span.update(range(span.start, span.end + 1))
    segments: list[list[int]] = []
    current: list[int] = []
    for position in range(len(example.tokens)):
        if position in in_span:
            if current:
                segments.append(current)
                current = []
        else:
            current.append(position)
    if current:
        segments.append(current)
    return segments


def _augment_one(
    example: AbsaExample,
    policy: AugmentPolicy,
    lexicon: dict[str, tuple[str, ...]],
    rng: random.Random,
) -> AbsaExample:
    tokens = list(example.tokens)
    segments = _segments(example)
    free = [p for segment in segments for p in segment]

    if "synonym_swap" in policy.ops and lexicon:
        for position in free:
            synonyms = lexicon.get(tokens[position])
            if synonyms and rng.random() < policy.rate:
                choices = [w for w in synonyms if w != tokens[position]]
                if choices:
                    tokens[position] = rng.choice(choices)

    if "random_swap" in policy.ops:
        swappable = [segment for segment in segments if len(segment) >= 2]
        if swappable:
            for _ in range(max(1, math.floor(policy.rate * len(free)))):
                segment = rng.choice(swappable)
                a, b = rng.sample(segment, 2)
                tokens[a], tokens[b] = tokens[b], tokens[a]

    deleted: set[int] = set()
    if "random_deletion" in policy.ops:
        for position in free:
            if len(free) - len(deleted) <= 1:
                break  # keep at least one context token
            if rng.random() < policy.rate:
                deleted.add(position)

    kept = [p for p in range(len(tokens)) if p not in deleted]
    remap = {old: new for new, old in enumerate(kept)}
    new_tokens = tuple(tokens[p] for p in kept)
    new_spans = tuple(
        AspectSpan(remap[span.start], remap[span.end], span.polarity) for span in example.spans
    )
    return AbsaExample(new_tokens, new_spans, source_id=example.source_id)


def augment(
    corpus: Corpus,
    policy: AugmentPolicy,
    lexicon: dict[str, tuple[str, ...]] | None = None,
) -> list[AbsaExample]:
    """Produce ``len(corpus) * multiplier`` augmented examples.

    Aspect tokens and their polarities are never modified, deleted, or
    reordered across a span boundary; the same seed always yields the same
    output.
    """
    lexicon = lexicon or {}
    out: list[AbsaExample] = []
    for index, item in enumerate(corpus):
        example = triple_to_example(item) if isinstance(item, AscTriple) else item
        for copy in range(policy.multiplier):
            rng = random.Random(f"{policy.seed}:{index}:{copy}")
            out.append(_augment_one(example, policy, lexicon, rng))
    return out


def write_aug_files(
    handle: DatasetHandle, augmented: Sequence[AbsaExample], chunk: int | None = None
) -> list[Path]:
    """Serialize augmented examples next to the handle's train files with the
    ``.augment`` infix so ``load(with_aug=True)`` discovers them."""
    directory = handle.data_dir()
    if directory is None:
        raise AugmentError(f"dataset {handle.name!r} has no local files")
    if handle.task is TaskKind.ASC:
        triples = [t for example in augmented for t in example_to_triples(example)]
        text = serialize_asc_triples(triples)
    else:
        text = serialize_atesc(list(augmented))
    path = directory / f"train{AUG_INFIX}.dat"
    path.write_text(text, encoding="utf-8")
    if path not in handle.aug_files:
        handle.aug_files.append(path)
    return [path]
