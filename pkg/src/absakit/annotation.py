"""Annotation sessions: per-sentence spans with optimistic versioning,
predictor proposals, and an append-only journal.

The journal is the source of truth: replaying it from an empty session
reproduces the exact state, including versions.  Human-confirmed spans and
predictor proposals are kept apart so automatic annotation is never
destructive; exports contain confirmed spans only unless asked otherwise.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from absakit.corpus import (
    AbsaExample,
    AspectSpan,
    CorpusParseError,
    EncodingKind,
    Polarity,
    parse_spantag,
    serialize_document,
    _split_lines,
)


class AnnotationError(Exception):
    pass


class UnknownSessionError(AnnotationError):
    pass


class VersionConflictError(AnnotationError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"version conflict: sent {expected}, current {actual}")
        self.expected = expected
        self.actual = actual


class InvalidSpanError(AnnotationError):
    pass


class EmptyCorpusError(AnnotationError):
    pass


@dataclass(frozen=True)
class Proposal:
    span: AspectSpan
    predictor_digest: str
    confidence: float = 0.0


@dataclass
class SentenceState:
    tokens: tuple[str, ...]
    confirmed: list[AspectSpan] = field(default_factory=list)
    proposals: list[Proposal] = field(default_factory=list)
    version: int = 0

    def example(self, include_proposals: bool = False) -> AbsaExample:
        spans = list(self.confirmed)
        if include_proposals:
            occupied = list(spans)
            for proposal in self.proposals:
                if not any(proposal.span.overlaps(s) for s in occupied):
                    spans.append(proposal.span)
                    occupied.append(proposal.span)
        return AbsaExample(self.tokens, tuple(spans))

    def to_dict(self, index: int) -> dict:
        return {
            "index": index,
            "tokens": list(self.tokens),
            "confirmed": [
                {"start": s.start, "end": s.end, "polarity": s.polarity.value}
                for s in self.confirmed
            ],
            "proposals": [
                {
                    "start": p.span.start,
                    "end": p.span.end,
                    "polarity": p.span.polarity.value,
                    "confidence": p.confidence,
                    "predictor": p.predictor_digest,
                }
                for p in self.proposals
            ],
            "version": self.version,
        }


def _check_span(sentence: SentenceState, start: int, end: int) -> None:
    if not (0 <= start <= end < len(sentence.tokens)):
        raise InvalidSpanError(
            f"span [{start}, {end}] out of bounds for {len(sentence.tokens)} tokens"
        )


class AnnotationSession:
    """One corpus under annotation; every accepted edit appends a journal
    event and bumps the touched sentence's version by one."""

    def __init__(self, session_id: str, sentences: list[SentenceState]):
        self.session_id = session_id
        self.sentences = sentences
        self.journal: list[dict] = []
        self.autolabel_digests: set[str] = set()

    # -- construction ------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, session_id: str | None = None) -> "AnnotationSession":
        """Create a session from plain text (one sentence per line) or
        spantag-encoded text; pre-existing tags become initial annotations."""
        sentences: list[SentenceState] = []
        for number, line in enumerate(_split_lines(text), start=1):
            if not line.strip():
                continue
            try:
                example = parse_spantag(line)
            except CorpusParseError as err:
                raise type(err)(err.message, line=number) from None
            sentences.append(
                SentenceState(tokens=example.tokens, confirmed=list(example.spans))
            )
        if not sentences:
            raise EmptyCorpusError("corpus contains no sentences")
        session = cls(session_id or uuid.uuid4().hex[:12], sentences)
        session.journal.append(
            {
                "type": "created",
                "tokens": [list(s.tokens) for s in sentences],
                "spans": [
                    [
                        {"start": sp.start, "end": sp.end, "polarity": sp.polarity.value}
                        for sp in s.confirmed
                    ]
                    for s in sentences
                ],
            }
        )
        return session

    @classmethod
    def replay(cls, events: Iterable[dict], session_id: str = "replayed") -> "AnnotationSession":
        """Rebuild a session from its journal; versions are recomputed and
        match the live session exactly."""
        events = list(events)
        if not events or events[0].get("type") != "created":
            raise AnnotationError("journal must start with a created event")
        created = events[0]
        sentences = [
            SentenceState(
                tokens=tuple(tokens),
                confirmed=[
                    AspectSpan(sp["start"], sp["end"], Polarity.parse(sp["polarity"]))
                    for sp in spans
                ],
            )
            for tokens, spans in zip(created["tokens"], created["spans"])
        ]
        session = cls(session_id, sentences)
        session.journal.append(created)
        for event in events[1:]:
            kind = event.get("type")
            if kind == "put":
                session.put_span(
                    event["n"],
                    event["start"],
                    event["end"],
                    Polarity.parse(event["polarity"]),
                    expected_version=None,
                )
            elif kind == "autolabel":
                session._apply_autolabel(
                    event["digest"],
                    [
                        (p["n"], AspectSpan(p["start"], p["end"], Polarity.parse(p["polarity"])),
                         p.get("confidence", 0.0))
                        for p in event["proposals"]
                    ],
                )
            elif kind == "accept":
                session.resolve_proposal(
                    event["n"], event["start"], event["end"], accept=True, expected_version=None
                )
            elif kind == "reject":
                session.resolve_proposal(
                    event["n"], event["start"], event["end"], accept=False, expected_version=None
                )
            else:
                raise AnnotationError(f"unknown journal event {kind!r}")
        return session

    # -- edits -------------------------------------------------------------

    def _sentence(self, index: int) -> SentenceState:
        if not 0 <= index < len(self.sentences):
            raise InvalidSpanError(f"no sentence {index}")
        return self.sentences[index]

    def _check_version(self, sentence: SentenceState, expected: int | None) -> None:
        if expected is not None and expected != sentence.version:
            raise VersionConflictError(expected, sentence.version)

    def put_span(
        self,
        index: int,
        start: int,
        end: int,
        polarity: Polarity,
        expected_version: int | None,
    ) -> int:
        """Add a span, or replace the polarity of the span at exactly
        (start, end); overlap with a different confirmed span is rejected."""
        sentence = self._sentence(index)
        self._check_version(sentence, expected_version)
        _check_span(sentence, start, end)
        incoming = AspectSpan(start, end, polarity)
        replaced = False
        for i, existing in enumerate(sentence.confirmed):
            if (existing.start, existing.end) == (start, end):
                sentence.confirmed[i] = incoming
                replaced = True
                break
            if existing.overlaps(incoming):
                raise InvalidSpanError(
                    f"span [{start}, {end}] overlaps confirmed [{existing.start}, {existing.end}]"
                )
        if not replaced:
            sentence.confirmed.append(incoming)
            sentence.confirmed.sort(key=lambda s: s.start)
        sentence.version += 1
        self.journal.append(
            {
                "type": "put",
                "n": index,
                "start": start,
                "end": end,
                "polarity": polarity.value,
            }
        )
        return sentence.version

    def autolabel(self, predictor) -> int:
        """Store predictor spans as proposals on sentences without confirmed
        spans; idempotent per predictor digest."""
        if predictor.digest in self.autolabel_digests:
            return 0
        proposals: list[tuple[int, AspectSpan, float]] = []
        for index, sentence in enumerate(self.sentences):
            if sentence.confirmed:
                continue
            prediction = predictor.predict_tokens(sentence.tokens)
            for span in prediction.spans:
                proposals.append(
                    (
                        index,
                        AspectSpan(span.start, span.end, Polarity.parse(span.polarity)),
                        span.confidence,
                    )
                )
        return self._apply_autolabel(predictor.digest, proposals)

    def _apply_autolabel(
        self, digest: str, proposals: Sequence[tuple[int, AspectSpan, float]]
    ) -> int:
        if digest in self.autolabel_digests:
            return 0
        added = 0
        event_rows = []
        for index, span, confidence in proposals:
            sentence = self._sentence(index)
            if sentence.confirmed:
                continue
            if any((p.span.start, p.span.end) == (span.start, span.end) for p in sentence.proposals):
                continue
            sentence.proposals.append(Proposal(span, digest, confidence))
            event_rows.append(
                {
                    "n": index,
                    "start": span.start,
                    "end": span.end,
                    "polarity": span.polarity.value,
                    "confidence": confidence,
                }
            )
            added += 1
        self.autolabel_digests.add(digest)
        self.journal.append({"type": "autolabel", "digest": digest, "proposals": event_rows})
        return added

    def resolve_proposal(
        self,
        index: int,
        start: int,
        end: int,
        accept: bool,
        expected_version: int | None,
    ) -> int:
        """Accept (confirm) or reject (drop) the proposal at (start, end)."""
        sentence = self._sentence(index)
        self._check_version(sentence, expected_version)
        position = next(
            (
                i
                for i, p in enumerate(sentence.proposals)
                if (p.span.start, p.span.end) == (start, end)
            ),
            None,
        )
        if position is None:
            raise InvalidSpanError(f"no proposal at [{start}, {end}]")
        proposal = sentence.proposals.pop(position)
        if accept:
            for existing in sentence.confirmed:
                if existing.overlaps(proposal.span):
                    sentence.proposals.insert(position, proposal)
                    raise InvalidSpanError(
                        f"proposal [{start}, {end}] overlaps a confirmed span"
                    )
            sentence.confirmed.append(proposal.span)
            sentence.confirmed.sort(key=lambda s: s.start)
        sentence.version += 1
        self.journal.append(
            {
                "type": "accept" if accept else "reject",
                "n": index,
                "start": start,
                "end": end,
            }
        )
        return sentence.version

    # -- export ------------------------------------------------------------

    def export(self, kind: EncodingKind, include_proposals: bool = False) -> str:
        examples = [s.example(include_proposals) for s in self.sentences]
        return serialize_document(examples, kind)

    def counts(self) -> dict:
        return {
            "session_id": self.session_id,
            "sentences": len(self.sentences),
            "confirmed": sum(len(s.confirmed) for s in self.sentences),
            "proposals": sum(len(s.proposals) for s in self.sentences),
        }


class SessionStore:
    """Journal-backed session persistence: one JSONL file per session,
    appended on every accepted edit; snapshots written on close."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, AnnotationSession] = {}
        self._lock = threading.Lock()

    def _journal_path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.jsonl"

    def create(self, text: str) -> AnnotationSession:
        session = AnnotationSession.from_text(text)
        with self._lock:
            self._sessions[session.session_id] = session
            with open(self._journal_path(session.session_id), "w", encoding="utf-8") as handle:
                for event in session.journal:
                    handle.write(json.dumps(event) + "\n")
        return session

    def get(self, session_id: str) -> AnnotationSession:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        path = self._journal_path(session_id)
        if not path.exists():
            raise UnknownSessionError(f"no session {session_id!r}")
        events = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]
        session = AnnotationSession.replay(events, session_id=session_id)
        with self._lock:
            self._sessions[session_id] = session
        return session

    def append_events(self, session: AnnotationSession, since: int) -> None:
        """Persist journal entries added after index ``since``."""
        with self._lock:
            with open(self._journal_path(session.session_id), "a", encoding="utf-8") as handle:
                for event in session.journal[since:]:
                    handle.write(json.dumps(event) + "\n")

    def snapshot_all(self) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            snapshot = {
                "session_id": session.session_id,
                "sentences": [s.to_dict(i) for i, s in enumerate(session.sentences)],
            }
            path = self.directory / f"{session.session_id}.snapshot.json"
            path.write_text(json.dumps(snapshot, indent=2) + "\n", encoding="utf-8")
