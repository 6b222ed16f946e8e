"""In-memory model of ABSA examples plus parsers, serializers, validators and
lossless converters for the three on-disk corpus encodings.

Encodings:
  * ``atesc``   — token-per-line columns ``<token> <tag> <polarity-or-dash>``
                  with ``O``/``B-ASP``/``I-ASP`` tags and blank-line sentence
                  separators.  The polarity column is set on ``B-ASP`` lines
                  only; every other line carries the ``-`` sentinel.
  * ``asc``     — three-line groups: a sentence template containing the
                  placeholder ``$T$`` exactly once, the aspect string, and the
                  polarity.
  * ``spantag`` — one sentence per line with aspects wrapped in
                  ``[B-ASP]...[E-ASP]`` and an optional inline
                  ``$LABEL$<polarity>`` annotation before the closing tag.

All parsing accepts CRLF input; all serialization emits LF and is
byte-deterministic.  Diagnostics use 1-based line numbers.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence, Union


class Polarity(str, Enum):
    """Sentiment label of an aspect.  Order (Negative < Neutral < Positive)
    is the fixed tie-break order used throughout the toolkit."""

    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"
    POSITIVE = "Positive"

    @classmethod
    def parse(cls, text: str) -> "Polarity":
        """Case-insensitive parse; raises ValueError for anything else."""
        label = text.strip().lower()
        for member in cls:
            if member.value.lower() == label:
                return member
        raise ValueError(f"unknown polarity {text!r}")

    @property
    def order(self) -> int:
        return _POLARITY_ORDER[self]


_POLARITY_ORDER = {Polarity.NEGATIVE: 0, Polarity.NEUTRAL: 1, Polarity.POSITIVE: 2}

POLARITIES: tuple[Polarity, ...] = (Polarity.NEGATIVE, Polarity.NEUTRAL, Polarity.POSITIVE)


class EncodingKind(str, Enum):
    """The three on-disk corpus encodings."""

    ASC_TRIPLES = "asc"
    ATESC_COLUMNS = "atesc"
    SPAN_TAG_INLINE = "spantag"

    @classmethod
    def parse(cls, text: str) -> "EncodingKind":
        label = text.strip().lower()
        for member in cls:
            if member.value == label:
                return member
        raise ValueError(f"unknown encoding kind {text!r}")


class CorpusParseError(ValueError):
    """Base class for all corpus parsing/validation failures.

    ``line`` is the 1-based line (or three-line group, for the asc encoding)
    the diagnostic refers to; ``code`` is a stable machine-readable tag.
    """

    code = "parse"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"line {self.line}: {self.message}"


class SequenceError(CorpusParseError):
    """I-ASP tag not preceded by B-ASP/I-ASP."""

    code = "sequence"


class ColumnError(CorpusParseError):
    """Malformed atesc column: wrong arity, polarity on a non-B line,
    dash or bad polarity on a B line."""

    code = "column"


class TagError(CorpusParseError):
    """Unknown IOB tag."""

    code = "tag"


class FramingError(CorpusParseError):
    """asc document not made of well-formed three-line groups."""

    code = "framing"


class PlaceholderError(CorpusParseError):
    """Template does not contain the ``$T$`` placeholder exactly once."""

    code = "placeholder"


class PolarityError(CorpusParseError):
    """Unparsable polarity label."""

    code = "polarity"


class TagBalanceError(CorpusParseError):
    """Unbalanced, nested, or overlapping span tags."""

    code = "tag_balance"


@dataclass(frozen=True)
class AspectSpan:
    """Inclusive token range [start, end] carrying one polarity."""

    start: int
    end: int
    polarity: Polarity

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid span [{self.start}, {self.end}]")

    def overlaps(self, other: "AspectSpan") -> bool:
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True)
class AbsaExample:
    """One sentence with whitespace tokens and non-overlapping aspect spans.

    Spans are normalized to start-token order on construction; bounds and
    pairwise non-overlap are enforced, so every constructed instance is valid.
    """

    tokens: tuple[str, ...]
    spans: tuple[AspectSpan, ...] = ()
    source_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        spans = tuple(sorted(self.spans, key=lambda s: (s.start, s.end)))
        object.__setattr__(self, "spans", spans)
        if spans and not self.tokens:
            raise ValueError("spans require a nonempty token list")
        for span in spans:
            if span.end >= len(self.tokens):
                raise ValueError(
                    f"span [{span.start}, {span.end}] exceeds {len(self.tokens)} tokens"
                )
        for left, right in zip(spans, spans[1:]):
            if left.overlaps(right):
                raise ValueError(f"overlapping spans {left} and {right}")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def aspect_tokens(self, span: AspectSpan) -> tuple[str, ...]:
        return self.tokens[span.start : span.end + 1]

    def aspect_text(self, span: AspectSpan) -> str:
        return " ".join(self.aspect_tokens(span))


@dataclass(frozen=True)
class AscTriple:
    """Single-aspect classification record: a template with one ``$T$``
    placeholder, the aspect string, and its polarity."""

    template: str
    aspect: str
    polarity: Polarity

    def __post_init__(self) -> None:
        if self.template.count(PLACEHOLDER) != 1:
            raise ValueError("template must contain $T$ exactly once")
        if not self.aspect.strip():
            raise ValueError("aspect must be nonempty")
        if "\n" in self.aspect or "\r" in self.aspect:
            raise ValueError("aspect must not contain newlines")

    @property
    def text(self) -> str:
        return self.template.replace(PLACEHOLDER, self.aspect)


Corpus = Union[list[AbsaExample], list[AscTriple]]

PLACEHOLDER = "$T$"
_B_TAG = "[B-ASP]"
_E_TAG = "[E-ASP]"
_LABEL_MARK = "$LABEL$"
_ATESC_TAGS = ("O", "B-ASP", "I-ASP")
_NO_POLARITY = "-"
_TOKEN_RE = re.compile(r"\S+")


def _split_lines(text: str) -> list[str]:
    """Split a document into lines; accepts CRLF, drops one trailing newline."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


# ---------------------------------------------------------------------------
# atesc column encoding


def _iter_atesc_blocks(text: str) -> Iterator[tuple[int, list[str]]]:
    """Yield (1-based start line, nonblank lines) per sentence block."""
    block: list[str] = []
    start = 1
    for number, line in enumerate(_split_lines(text), start=1):
        if line.strip():
            if not block:
                start = number
            block.append(line)
        elif block:
            yield start, block
            block = []
    if block:
        yield start, block


def _parse_atesc_block(lines: list[str], start_line: int) -> AbsaExample:
    tokens: list[str] = []
    tags: list[str] = []
    polarities: list[Polarity | None] = []
    previous = "O"
    for offset, line in enumerate(lines):
        number = start_line + offset
        columns = line.split()
        if len(columns) != 3:
            raise ColumnError(f"expected 3 columns, got {len(columns)}", line=number)
        token, tag, polarity_column = columns
        if tag not in _ATESC_TAGS:
            raise TagError(f"unknown tag {tag!r}", line=number)
        if tag == "I-ASP" and previous not in ("B-ASP", "I-ASP"):
            raise SequenceError("I-ASP not preceded by B-ASP or I-ASP", line=number)
        if tag == "B-ASP":
            if polarity_column == _NO_POLARITY:
                raise ColumnError("B-ASP line requires a polarity", line=number)
            try:
                polarities.append(Polarity.parse(polarity_column))
            except ValueError:
                raise ColumnError(f"bad polarity {polarity_column!r}", line=number) from None
        else:
            if polarity_column != _NO_POLARITY:
                raise ColumnError(f"polarity on an {tag} line", line=number)
            polarities.append(None)
        tokens.append(token)
        tags.append(tag)
        previous = tag
    spans: list[AspectSpan] = []
    index = 0
    while index < len(tags):
        if tags[index] == "B-ASP":
            end = index
            while end + 1 < len(tags) and tags[end + 1] == "I-ASP":
                end += 1
            polarity = polarities[index]
            assert polarity is not None
            spans.append(AspectSpan(index, end, polarity))
            index = end + 1
        else:
            index += 1
    return AbsaExample(tuple(tokens), tuple(spans))


def parse_atesc(text: str) -> list[AbsaExample]:
    """Parse an atesc column document into examples, one per sentence."""
    return [_parse_atesc_block(lines, start) for start, lines in _iter_atesc_blocks(text)]


def serialize_atesc(examples: Sequence[AbsaExample]) -> str:
    """Serialize examples to the atesc column encoding (byte-deterministic)."""
    blocks: list[str] = []
    for example in examples:
        tags = ["O"] * len(example.tokens)
        polarity_column = [_NO_POLARITY] * len(example.tokens)
        for span in example.spans:
            tags[span.start] = "B-ASP"
            polarity_column[span.start] = span.polarity.value
            for position in range(span.start + 1, span.end + 1):
                tags[position] = "I-ASP"
        lines = [
            f"{token} {tag} {polarity}"
            for token, tag, polarity in zip(example.tokens, tags, polarity_column)
        ]
        blocks.append("\n".join(lines))
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


# ---------------------------------------------------------------------------
# asc triple encoding


def _parse_asc_group(lines: list[str], group: int) -> AscTriple:
    template, aspect, polarity_line = lines
    if template.count(PLACEHOLDER) != 1:
        raise PlaceholderError(
            f"template must contain {PLACEHOLDER} exactly once", line=group
        )
    if not aspect.strip():
        raise FramingError("empty aspect line", line=group)
    try:
        polarity = Polarity.parse(polarity_line)
    except ValueError:
        raise PolarityError(f"bad polarity {polarity_line!r}", line=group) from None
    return AscTriple(template, aspect, polarity)


def parse_asc_triples(text: str) -> list[AscTriple]:
    """Parse an asc document (three-line groups) into triples.

    Diagnostics carry the 1-based group number, not the raw line number.
    """
    lines = _split_lines(text)
    if not lines:
        return []
    if len(lines) % 3 != 0:
        raise FramingError(f"line count {len(lines)} not divisible by 3")
    return [
        _parse_asc_group(lines[index : index + 3], index // 3 + 1)
        for index in range(0, len(lines), 3)
    ]


def serialize_asc_triples(triples: Sequence[AscTriple]) -> str:
    """Serialize triples to the asc three-line encoding."""
    lines: list[str] = []
    for triple in triples:
        lines.extend((triple.template, triple.aspect, triple.polarity.value))
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# spantag inline encoding


def _token_ranges(text: str) -> list[tuple[int, int]]:
    return [match.span() for match in _TOKEN_RE.finditer(text)]


def _overlapping_token_span(
    ranges: list[tuple[int, int]], start: int, end: int
) -> tuple[int, int] | None:
    """Token index range of tokens overlapping character range [start, end)."""
    hit = [i for i, (a, b) in enumerate(ranges) if a < end and start < b]
    if not hit:
        return None
    return hit[0], hit[-1]


def parse_spantag(line: str, source_id: str | None = None) -> AbsaExample:
    """Parse one spantag line into an example.

    The example's text equals the line with all tags and ``$LABEL$``
    annotations removed; a tagged region without an annotation defaults to
    Neutral.  Whitespace-only regions are dropped.  Tokens that themselves
    contain tag markers are not representable in this encoding.
    """
    out: list[str] = []
    regions: list[tuple[int, int, Polarity]] = []
    open_start: int | None = None
    position = 0
    while position < len(line):
        if line.startswith(_B_TAG, position):
            if open_start is not None:
                raise TagBalanceError("nested [B-ASP]", line=1)
            open_start = len(out)
            position += len(_B_TAG)
        elif line.startswith(_E_TAG, position):
            if open_start is None:
                raise TagBalanceError("[E-ASP] without matching [B-ASP]", line=1)
            region_text = "".join(out[open_start:])
            polarity = Polarity.NEUTRAL
            if _LABEL_MARK in region_text:
                region_text, _, label = region_text.rpartition(_LABEL_MARK)
                try:
                    polarity = Polarity.parse(label)
                except ValueError:
                    raise PolarityError(f"bad $LABEL$ polarity {label!r}", line=1) from None
                del out[open_start + len(region_text) :]
            regions.append((open_start, len(out), polarity))
            open_start = None
            position += len(_E_TAG)
        else:
            out.append(line[position])
            position += 1
    if open_start is not None:
        raise TagBalanceError("[B-ASP] without matching [E-ASP]", line=1)
    text = "".join(out)
    ranges = _token_ranges(text)
    tokens = tuple(text.split())
    spans: list[AspectSpan] = []
    for start, end, polarity in regions:
        token_span = _overlapping_token_span(ranges, start, end)
        if token_span is None:
            continue  # whitespace-only region
        spans.append(AspectSpan(token_span[0], token_span[1], polarity))
    try:
        return AbsaExample(tokens, tuple(spans), source_id=source_id)
    except ValueError as err:
        raise TagBalanceError(f"regions overlap after tokenization: {err}", line=1) from None


def serialize_spantag(example: AbsaExample) -> str:
    """Serialize one example to a spantag line (labels always written)."""
    parts: list[str] = []
    opens = {span.start: span for span in example.spans}
    closes = {span.end: span for span in example.spans}
    for index, token in enumerate(example.tokens):
        piece = token
        if index in opens:
            piece = _B_TAG + piece
        if index in closes:
            piece = piece + _LABEL_MARK + closes[index].polarity.value + _E_TAG
        parts.append(piece)
    return " ".join(parts)


def parse_spantag_document(text: str) -> list[AbsaExample]:
    """Parse a spantag document, one example per nonblank line."""
    examples: list[AbsaExample] = []
    for number, line in enumerate(_split_lines(text), start=1):
        if not line.strip():
            continue
        try:
            examples.append(parse_spantag(line))
        except CorpusParseError as err:
            raise type(err)(err.message, line=number) from None
    return examples


def serialize_spantag_document(examples: Sequence[AbsaExample]) -> str:
    if not examples:
        return ""
    return "\n".join(serialize_spantag(example) for example in examples) + "\n"


# ---------------------------------------------------------------------------
# conversion


def triple_to_example(triple: AscTriple, source_id: str | None = None) -> AbsaExample:
    """Rebuild the tokenized sentence with one span at the ``$T$`` position.

    The placeholder position is authoritative: other occurrences of the
    aspect string in the template are ignored.
    """
    placeholder_at = triple.template.index(PLACEHOLDER)
    prefix = triple.template[:placeholder_at]
    suffix = triple.template[placeholder_at + len(PLACEHOLDER) :]
    full = prefix + triple.aspect + suffix
    ranges = _token_ranges(full)
    token_span = _overlapping_token_span(ranges, len(prefix), len(prefix) + len(triple.aspect))
    if token_span is None:  # unreachable: aspect is non-blank
        raise PlaceholderError("aspect produced no tokens")
    span = AspectSpan(token_span[0], token_span[1], triple.polarity)
    return AbsaExample(tuple(full.split()), (span,), source_id=source_id)


def example_to_triples(example: AbsaExample) -> list[AscTriple]:
    """One triple per span, the aspect tokens replaced by ``$T$``."""
    triples: list[AscTriple] = []
    for span in example.spans:
        template_tokens = (
            list(example.tokens[: span.start])
            + [PLACEHOLDER]
            + list(example.tokens[span.end + 1 :])
        )
        template = " ".join(template_tokens)
        try:
            triples.append(AscTriple(template, example.aspect_text(span), span.polarity))
        except ValueError as err:
            raise PlaceholderError(f"example not expressible as asc triple: {err}") from None
    return triples


def parse_document(text: str, kind: EncodingKind) -> Corpus:
    """Parse a document under the given encoding."""
    if kind is EncodingKind.ATESC_COLUMNS:
        return parse_atesc(text)
    if kind is EncodingKind.ASC_TRIPLES:
        return parse_asc_triples(text)
    return parse_spantag_document(text)


def serialize_document(items: Corpus, kind: EncodingKind) -> str:
    """Serialize an in-memory corpus under the given encoding."""
    if kind is EncodingKind.ASC_TRIPLES:
        triples: list[AscTriple] = []
        for item in items:
            if isinstance(item, AbsaExample):
                triples.extend(example_to_triples(item))
            else:
                triples.append(item)
        return serialize_asc_triples(triples)
    examples = [
        item if isinstance(item, AbsaExample) else triple_to_example(item) for item in items
    ]
    if kind is EncodingKind.ATESC_COLUMNS:
        return serialize_atesc(examples)
    return serialize_spantag_document(examples)


def convert_document(text: str, from_kind: EncodingKind, to_kind: EncodingKind) -> str:
    """Convert a document between encodings.

    Conversions preserve the multiset of (aspect string, polarity) pairs in
    both directions; asc targets emit one triple per span, asc sources yield
    one single-span example per triple.
    """
    return serialize_document(parse_document(text, from_kind), to_kind)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    line: int | None
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"line": self.line, "code": self.code, "message": self.message}


@dataclass
class ValidationReport:
    """Diagnostics plus example/span counts and polarity distribution."""

    diagnostics: list[Diagnostic] = field(default_factory=list)
    example_count: int = 0
    span_count: int = 0
    polarity_counts: Counter = field(default_factory=Counter)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def to_dict(self) -> dict:
        return {
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "examples": self.example_count,
            "spans": self.span_count,
            "polarities": {k: v for k, v in sorted(self.polarity_counts.items())},
        }


def _report_add(report: ValidationReport, spans: Sequence[AspectSpan]) -> None:
    report.example_count += 1
    report.span_count += len(spans)
    for span in spans:
        report.polarity_counts[span.polarity.value] += 1


def validate(text: str, kind: EncodingKind) -> ValidationReport:
    """Validate a document, collecting diagnostics instead of raising.

    Each malformed sentence block / group / line yields one diagnostic;
    well-formed parts still contribute to the counts.
    """
    report = ValidationReport()
    if kind is EncodingKind.ATESC_COLUMNS:
        for start, lines in _iter_atesc_blocks(text):
            try:
                example = _parse_atesc_block(lines, start)
            except CorpusParseError as err:
                report.diagnostics.append(Diagnostic(err.line, err.code, err.message))
            else:
                _report_add(report, example.spans)
    elif kind is EncodingKind.ASC_TRIPLES:
        lines = _split_lines(text)
        whole_groups = len(lines) // 3
        for group in range(whole_groups):
            try:
                triple = _parse_asc_group(lines[group * 3 : group * 3 + 3], group + 1)
            except CorpusParseError as err:
                report.diagnostics.append(Diagnostic(err.line, err.code, err.message))
            else:
                report.example_count += 1
                report.span_count += 1
                report.polarity_counts[triple.polarity.value] += 1
        if len(lines) % 3 != 0:
            report.diagnostics.append(
                Diagnostic(None, FramingError.code, f"line count {len(lines)} not divisible by 3")
            )
    else:
        for number, line in enumerate(_split_lines(text), start=1):
            if not line.strip():
                continue
            try:
                example = parse_spantag(line)
            except CorpusParseError as err:
                report.diagnostics.append(Diagnostic(number, err.code, err.message))
            else:
                _report_add(report, example.spans)
    return report
