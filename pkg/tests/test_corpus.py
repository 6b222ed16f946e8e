"""Corpus encodings: parsing, serialization, conversion, validation."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from absakit.corpus import (
    AbsaExample,
    AscTriple,
    AspectSpan,
    ColumnError,
    EncodingKind,
    FramingError,
    PlaceholderError,
    Polarity,
    PolarityError,
    SequenceError,
    TagBalanceError,
    TagError,
    convert_document,
    example_to_triples,
    parse_asc_triples,
    parse_atesc,
    parse_spantag,
    parse_spantag_document,
    serialize_asc_triples,
    serialize_atesc,
    serialize_spantag_document,
    triple_to_example,
    validate,
)
from genutil import random_example_corpus, random_triple_corpus

FOOD_DOC = "The O -\nfood B-ASP Positive\nwas O -\ngood O -\n! O -\n"
PIZZA_SENTENCE = "I love the $T$ at this restaurant , but the service is terrible ."


class TestPolarity:
    def test_parse_case_insensitive(self):
        assert Polarity.parse("positive") is Polarity.POSITIVE
        assert Polarity.parse("NEGATIVE") is Polarity.NEGATIVE
        assert Polarity.parse(" Neutral ") is Polarity.NEUTRAL

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            Polarity.parse("conflicted")


class TestExampleInvariants:
    def test_spans_sorted_on_construction(self):
        example = AbsaExample(
            ("a", "b", "c"),
            (AspectSpan(2, 2, Polarity.NEGATIVE), AspectSpan(0, 0, Polarity.POSITIVE)),
        )
        assert [s.start for s in example.spans] == [0, 2]

    def test_out_of_bounds_span_rejected(self):
        with pytest.raises(ValueError):
            AbsaExample(("a",), (AspectSpan(0, 1, Polarity.NEUTRAL),))

    def test_overlapping_spans_rejected(self):
        with pytest.raises(ValueError):
            AbsaExample(
                ("a", "b", "c"),
                (AspectSpan(0, 1, Polarity.NEUTRAL), AspectSpan(1, 2, Polarity.NEUTRAL)),
            )

    def test_spans_require_tokens(self):
        with pytest.raises(ValueError):
            AbsaExample((), (AspectSpan(0, 0, Polarity.NEUTRAL),))


class TestParseAtesc:
    def test_food_sentence(self):
        examples = parse_atesc(FOOD_DOC)
        assert len(examples) == 1
        assert examples[0].tokens == ("The", "food", "was", "good", "!")
        assert examples[0].spans == (AspectSpan(1, 1, Polarity.POSITIVE),)

    def test_empty_document(self):
        assert parse_atesc("") == []

    def test_all_o_sentence(self):
        examples = parse_atesc("But O -\nnice O -\n")
        assert examples[0].spans == ()

    def test_orphan_i_tag(self):
        with pytest.raises(SequenceError) as err:
            parse_atesc("food I-ASP Positive\n")
        assert err.value.line == 1

    def test_polarity_on_o_line(self):
        with pytest.raises(ColumnError) as err:
            parse_atesc("The O Positive\n")
        assert err.value.line == 1

    def test_dash_on_b_line(self):
        with pytest.raises(ColumnError):
            parse_atesc("food B-ASP -\n")

    def test_unknown_tag(self):
        with pytest.raises(TagError) as err:
            parse_atesc("x O -\nfood B-PER Positive\n")
        assert err.value.line == 2

    def test_crlf_accepted(self):
        assert parse_atesc(FOOD_DOC.replace("\n", "\r\n")) == parse_atesc(FOOD_DOC)

    def test_multi_token_span(self):
        doc = "the O -\nfried B-ASP Negative\nrice I-ASP -\n. O -\n"
        examples = parse_atesc(doc)
        assert examples[0].spans == (AspectSpan(1, 2, Polarity.NEGATIVE),)


class TestSerializeAtesc:
    def test_round_trip_food(self):
        examples = parse_atesc(FOOD_DOC)
        assert serialize_atesc(examples) == FOOD_DOC

    def test_empty_list(self):
        assert serialize_atesc([]) == ""

    def test_random_round_trip(self):
        rng = random.Random(7)
        for _ in range(200):
            corpus = random_example_corpus(rng)
            assert parse_atesc(serialize_atesc(corpus)) == corpus


class TestParseAscTriples:
    def test_pizza_triple(self):
        doc = f"{PIZZA_SENTENCE}\npizza\nPositive\n"
        triples = parse_asc_triples(doc)
        assert triples == [AscTriple(PIZZA_SENTENCE, "pizza", Polarity.POSITIVE)]

    def test_empty_document(self):
        assert parse_asc_triples("") == []

    def test_bad_group_size(self):
        with pytest.raises(FramingError):
            parse_asc_triples("a $T$ b\naspect\n")

    def test_duplicate_placeholder(self):
        with pytest.raises(PlaceholderError) as err:
            parse_asc_triples("a $T$ b $T$\naspect\nPositive\n")
        assert err.value.line == 1

    def test_missing_placeholder(self):
        with pytest.raises(PlaceholderError):
            parse_asc_triples("no placeholder here\naspect\nPositive\n")

    def test_bad_polarity(self):
        with pytest.raises(PolarityError):
            parse_asc_triples("a $T$ b\naspect\nGrumpy\n")

    def test_round_trip(self):
        rng = random.Random(11)
        for _ in range(200):
            corpus = random_triple_corpus(rng)
            assert parse_asc_triples(serialize_asc_triples(corpus)) == corpus


class TestParseSpantag:
    def test_food_sentence(self):
        example = parse_spantag("The [B-ASP]food[E-ASP] was good!")
        assert example.tokens == ("The", "food", "was", "good!")
        assert example.spans == (AspectSpan(1, 1, Polarity.NEUTRAL),)

    def test_untagged_sentence(self):
        example = parse_spantag("But the staff was so nice to us .")
        assert example.spans == ()
        assert example.text == "But the staff was so nice to us ."

    def test_nested_tags_rejected(self):
        with pytest.raises(TagBalanceError):
            parse_spantag("[B-ASP]a [B-ASP]b[E-ASP][E-ASP]")

    def test_unclosed_tag_rejected(self):
        with pytest.raises(TagBalanceError):
            parse_spantag("[B-ASP]food was good")

    def test_orphan_close_rejected(self):
        with pytest.raises(TagBalanceError):
            parse_spantag("food[E-ASP] was good")

    def test_inline_label(self):
        example = parse_spantag("The [B-ASP]food$LABEL$Positive[E-ASP] was good!")
        assert example.spans == (AspectSpan(1, 1, Polarity.POSITIVE),)
        assert example.text == "The food was good!"

    def test_bad_inline_label(self):
        with pytest.raises(PolarityError):
            parse_spantag("The [B-ASP]food$LABEL$meh[E-ASP] !")

    def test_multi_token_region(self):
        example = parse_spantag("the [B-ASP]fried rice[E-ASP] was bland")
        assert example.spans == (AspectSpan(1, 2, Polarity.NEUTRAL),)

    def test_whitespace_only_region_dropped(self):
        example = parse_spantag("a [B-ASP] [E-ASP] b")
        assert example.spans == ()

    def test_document_round_trip(self):
        rng = random.Random(13)
        for _ in range(200):
            corpus = random_example_corpus(rng)
            doc = serialize_spantag_document(corpus)
            assert parse_spantag_document(doc) == corpus


class TestConvert:
    def test_pizza_sentence_to_two_triples(self):
        tokens = PIZZA_SENTENCE.replace("$T$", "pizza").split()
        example = AbsaExample(
            tuple(tokens),
            (
                AspectSpan(3, 3, Polarity.POSITIVE),
                AspectSpan(10, 10, Polarity.NEGATIVE),
            ),
        )
        triples = example_to_triples(example)
        assert [(t.aspect, t.polarity) for t in triples] == [
            ("pizza", Polarity.POSITIVE),
            ("service", Polarity.NEGATIVE),
        ]
        assert all(t.template.count("$T$") == 1 for t in triples)

    def test_zero_span_example_yields_no_triples(self):
        assert example_to_triples(AbsaExample(("no", "aspects"))) == []

    def test_triple_round_trip_through_example(self):
        triple = AscTriple(PIZZA_SENTENCE, "pizza", Polarity.POSITIVE)
        example = triple_to_example(triple)
        assert example.aspect_text(example.spans[0]) == "pizza"
        assert example_to_triples(example) == [triple]

    def test_placeholder_position_authoritative(self):
        # the aspect string also occurs away from $T$
        triple = AscTriple("pizza is $T$ pizza", "pizza", Polarity.NEUTRAL)
        example = triple_to_example(triple)
        assert example.spans == (AspectSpan(2, 2, Polarity.NEUTRAL),)

    def test_atesc_asc_atesc_preserves_aspect_polarity_multiset(self):
        rng = random.Random(17)
        for _ in range(100):
            corpus = random_example_corpus(rng)
            source = serialize_atesc(corpus)
            asc = convert_document(source, EncodingKind.ATESC_COLUMNS, EncodingKind.ASC_TRIPLES)
            back = convert_document(asc, EncodingKind.ASC_TRIPLES, EncodingKind.ATESC_COLUMNS)

            def multiset(examples):
                return Counter(
                    (example.aspect_text(span), span.polarity)
                    for example in examples
                    for span in example.spans
                )

            assert multiset(parse_atesc(back)) == multiset(corpus)


class TestValidate:
    def test_valid_fixture(self):
        report = validate(FOOD_DOC, EncodingKind.ATESC_COLUMNS)
        assert report.ok
        assert report.example_count == 1
        assert report.span_count == 1
        assert report.polarity_counts["Positive"] == 1

    def test_single_bad_iob_transition(self):
        doc = FOOD_DOC + "\nbad I-ASP -\nx O -\n"
        report = validate(doc, EncodingKind.ATESC_COLUMNS)
        assert len(report.diagnostics) == 1
        assert report.diagnostics[0].code == "sequence"
        assert report.example_count == 1  # the good sentence still counted

    def test_asc_framing_diagnostic(self):
        report = validate("a $T$ b\naspect\nPositive\nleftover\n", EncodingKind.ASC_TRIPLES)
        assert report.example_count == 1
        assert [d.code for d in report.diagnostics] == ["framing"]

    def test_spantag_line_numbers(self):
        report = validate("fine line\n[B-ASP]broken\n", EncodingKind.SPAN_TAG_INLINE)
        assert report.diagnostics[0].line == 2
