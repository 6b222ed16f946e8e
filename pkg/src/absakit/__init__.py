"""absakit: modular toolkit for aspect-based sentiment analysis experiments."""

from absakit.corpus import (
    AbsaExample,
    AscTriple,
    AspectSpan,
    EncodingKind,
    Polarity,
    convert_document,
    parse_document,
    serialize_document,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AbsaExample",
    "AscTriple",
    "AspectSpan",
    "EncodingKind",
    "Polarity",
    "convert_document",
    "parse_document",
    "serialize_document",
    "validate",
    "__version__",
]
