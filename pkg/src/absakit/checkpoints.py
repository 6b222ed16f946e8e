"""Save/load trained models with metadata, query available checkpoints,
and build inference predictors from any of the three acquisition paths:
a hub checkpoint name, a local path or keyword, or an in-memory model.

Checkpoint layout: ``<store>/<task>/<name>/{meta.json, weights.bin}``.
The weights payload is a portable little-endian binary of IEEE-754 doubles
with a counted (name, shape) header per tensor; loading never executes
code, it only reads numeric arrays and JSON.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import struct
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

import absakit
from absakit.config import RunConfig, TaskKind
from absakit.datasets import NetworkError, read_url, resolve_relative
from absakit.training import (
    AscBaselineModel,
    AtescBaselineModel,
    EvalResult,
    model_class,
)

logger = logging.getLogger(__name__)

META_FILE = "meta.json"
WEIGHTS_FILE = "weights.bin"
_MAGIC = b"ABKW"
_VERSION = 1

TASK_CODES = ("ASC", "ATE", "ATESC")


class CheckpointError(Exception):
    pass


class NameCollisionError(CheckpointError):
    """Same checkpoint name already exists with different weights."""


class DigestMismatchError(CheckpointError):
    pass


class NotFoundError(CheckpointError):
    pass


class TaskMismatchError(CheckpointError):
    pass


# ---------------------------------------------------------------------------
# tensor payload codec


def encode_tensors(tensors: Mapping[str, np.ndarray]) -> bytes:
    """Little-endian float64 payload with a counted (name, shape) header per
    tensor; key order is sorted for byte determinism."""
    chunks = [_MAGIC, struct.pack("<HH", _VERSION, 0), struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        array = np.ascontiguousarray(tensors[name], dtype="<f8")
        encoded_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack("<I", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        chunks.append(array.tobytes())
    return b"".join(chunks)


def decode_tensors(payload: bytes) -> dict[str, np.ndarray]:
    view = memoryview(payload)
    if bytes(view[:4]) != _MAGIC:
        raise CheckpointError("bad weights payload magic")
    version, _ = struct.unpack("<HH", view[4:8])
    if version != _VERSION:
        raise CheckpointError(f"unsupported weights payload version {version}")
    (count,) = struct.unpack("<I", view[8:12])
    offset = 12
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", view, offset)
        offset += 4
        name = bytes(view[offset : offset + name_len]).decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<I", view, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}Q", view, offset)
        offset += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        array = np.frombuffer(view, dtype="<f8", count=size, offset=offset).reshape(shape)
        offset += 8 * size
        tensors[name] = array.astype(np.float64)
    return tensors


def payload_digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def model_payload(model) -> tuple[bytes, dict]:
    tensors, aux = model.to_payload()
    return encode_tensors(tensors), aux


def model_digest(model) -> str:
    """Content digest of a model's weights payload (identity for ensembles
    and idempotent auto-annotation)."""
    payload, _ = model_payload(model)
    return payload_digest(payload)


# ---------------------------------------------------------------------------
# metadata


@dataclass
class CheckpointMeta:
    name: str
    task_code: str
    model_id: str
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    digest: str = ""
    created_at: str = ""
    toolkit_version: str = absakit.__version__
    remote: bool = False

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data.pop("remote")
        return data

    @classmethod
    def from_dict(cls, data: dict, remote: bool = False) -> "CheckpointMeta":
        return cls(
            name=data["name"],
            task_code=data["task_code"],
            model_id=data["model_id"],
            config=data.get("config", {}),
            metrics=data.get("metrics", {}),
            digest=data.get("digest", ""),
            created_at=data.get("created_at", ""),
            toolkit_version=data.get("toolkit_version", ""),
            remote=remote,
        )


def meta_for(
    model, name: str, config: RunConfig, metrics: EvalResult | None = None
) -> CheckpointMeta:
    task_code = TaskKind.ASC.value if isinstance(model, AscBaselineModel) else TaskKind.ATESC.value
    return CheckpointMeta(
        name=name,
        task_code=task_code,
        model_id=config.model_id,
        config=config.to_dict(),
        metrics=metrics.to_dict() if metrics else {},
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


class _DirLock:
    """Exclusive lock file guarding writes to one checkpoint directory."""

    def __init__(self, directory: Path, timeout: float = 10.0):
        self.path = directory / ".lock"
        self.timeout = timeout

    def __enter__(self):
        deadline = time.monotonic() + self.timeout
        while True:
            try:
                fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                os.close(fd)
                return self
            except FileExistsError:
                if time.monotonic() > deadline:
                    raise CheckpointError(f"checkpoint directory locked: {self.path}")
                time.sleep(0.05)

    def __exit__(self, *exc):
        try:
            os.unlink(self.path)
        except FileNotFoundError:
            pass


def save(model, meta: CheckpointMeta, store_dir: str | Path) -> Path:
    """Write ``meta.json`` + ``weights.bin``; saving identical content twice
    is a no-op, a different payload under an existing name is a collision."""
    payload, aux = model_payload(model)
    meta.digest = payload_digest(payload)
    directory = Path(store_dir) / meta.task_code.lower() / meta.name
    directory.mkdir(parents=True, exist_ok=True)
    with _DirLock(directory):
        weights_path = directory / WEIGHTS_FILE
        if weights_path.exists():
            existing = payload_digest(weights_path.read_bytes())
            if existing == meta.digest:
                return directory
            raise NameCollisionError(
                f"checkpoint {meta.name!r} already exists with different weights"
            )
        document = meta.to_dict()
        document["model_aux"] = aux
        weights_path.write_bytes(payload)
        (directory / META_FILE).write_text(
            json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return directory


def load(path: str | Path) -> tuple[object, CheckpointMeta]:
    """Load a checkpoint directory; the payload digest is always verified."""
    directory = Path(path)
    meta_path = directory / META_FILE
    weights_path = directory / WEIGHTS_FILE
    if not meta_path.exists() or not weights_path.exists():
        raise NotFoundError(f"no checkpoint at {directory}")
    document = json.loads(meta_path.read_text(encoding="utf-8"))
    meta = CheckpointMeta.from_dict(document)
    payload = weights_path.read_bytes()
    if payload_digest(payload) != meta.digest:
        raise DigestMismatchError(f"weights digest mismatch in {directory}")
    tensors = decode_tensors(payload)
    model = model_class(meta.model_id).from_payload(tensors, document["model_aux"])
    return model, meta


def _iter_local(store_dirs: Iterable[str | Path]) -> Iterable[Path]:
    for store in store_dirs:
        store = Path(store)
        if not store.is_dir():
            continue
        for task_dir in sorted(store.iterdir()):
            if not task_dir.is_dir():
                continue
            for directory in sorted(task_dir.iterdir()):
                if (directory / META_FILE).exists():
                    yield directory


def available_checkpoints(
    task_code: str | None,
    sources: Sequence[str | Path],
    hub_url: str | None = None,
) -> dict[str, CheckpointMeta]:
    """Union of matching checkpoints across local stores and an optional hub
    manifest; hub entries are marked remote.  Network failures degrade to
    local-only with a warning."""
    if task_code is not None and task_code.upper() not in TASK_CODES:
        raise CheckpointError(f"unknown task code {task_code!r}")
    found: dict[str, CheckpointMeta] = {}
    for directory in _iter_local(sources):
        try:
            document = json.loads((directory / META_FILE).read_text(encoding="utf-8"))
            meta = CheckpointMeta.from_dict(document)
        except (OSError, ValueError, KeyError):
            continue
        if task_code is None or meta.task_code.upper() == task_code.upper():
            found[meta.name] = meta
    if hub_url:
        try:
            for meta in _hub_entries(hub_url):
                if task_code is None or meta.task_code.upper() == task_code.upper():
                    found.setdefault(meta.name, meta)
        except NetworkError as err:
            logger.warning("checkpoint hub unreachable, listing local only: %s", err)
    return found


def _hub_entries(hub_url: str) -> list[CheckpointMeta]:
    document = json.loads(read_url(str(hub_url)))
    entries = []
    for raw in document.get("checkpoints", []):
        entries.append(CheckpointMeta.from_dict(raw, remote=True))
    return entries


def find_local(
    keywords: Sequence[str], store_dirs: Sequence[str | Path]
) -> list[Path]:
    """Checkpoint directories whose name contains ANY keyword
    (case-insensitive); an empty keyword list matches everything."""
    lowered = [k.lower() for k in keywords]
    matches = []
    for directory in _iter_local(store_dirs):
        name = directory.name.lower()
        if not lowered or any(keyword in name for keyword in lowered):
            matches.append(directory)
    return matches


def fetch_checkpoint(name: str, hub_url: str, store_dir: str | Path) -> Path:
    """Download one hub checkpoint (meta + weights) with digest verification."""
    document = json.loads(read_url(str(hub_url)))
    for raw in document.get("checkpoints", []):
        if raw.get("name") != name:
            continue
        files = raw.get("files", {})
        target = Path(store_dir) / str(raw["task_code"]).lower() / name
        target.mkdir(parents=True, exist_ok=True)
        for filename in (META_FILE, WEIGHTS_FILE):
            entry = files.get(filename)
            if entry is None:
                raise NotFoundError(f"hub entry {name!r} lacks {filename}")
            payload = read_url(resolve_relative(str(hub_url), entry["path"]))
            if "sha256" in entry and payload_digest(payload) != entry["sha256"]:
                raise DigestMismatchError(f"{name}/{filename} digest mismatch")
            (target / filename).write_bytes(payload)
        return target
    raise NotFoundError(f"no hub checkpoint named {name!r}")


# ---------------------------------------------------------------------------
# predictors


@dataclass(frozen=True)
class PredictedSpan:
    start: int
    end: int
    polarity: str
    confidence: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Prediction:
    tokens: tuple[str, ...]
    spans: tuple[PredictedSpan, ...]

    def to_dict(self) -> dict:
        return {"tokens": list(self.tokens), "spans": [s.to_dict() for s in self.spans]}


class PredictorInputError(CheckpointError):
    """The input line cannot be predicted on (unparsable, or no aspect
    designated for an ASC predictor)."""


class Predictor:
    """Uniform inference wrapper over a trained model.

    ASC predictors take spantag-annotated text (each tagged region is
    classified); ATESC predictors take raw text (tags, if any, are stripped
    and ignored).
    """

    def __init__(self, model, name: str = "in-memory"):
        self.model = model
        self.name = name
        self.task: TaskKind = model.task

    @property
    def digest(self) -> str:
        return model_digest(self.model)

    def predict_text(self, text: str) -> Prediction:
        from absakit.corpus import parse_spantag  # local import avoids cycles

        example = parse_spantag(text)
        if self.task is TaskKind.ASC:
            if not example.spans:
                raise PredictorInputError(
                    "ASC input must designate at least one [B-ASP]...[E-ASP] region"
                )
            spans = []
            for span in example.spans:
                polarity, confidence = self.model.predict(example, span)
                spans.append(PredictedSpan(span.start, span.end, polarity.value, confidence))
            return Prediction(example.tokens, tuple(spans))
        predicted, confidences = self.model.predict_with_confidence(example.tokens)
        spans = tuple(
            PredictedSpan(s.start, s.end, s.polarity.value, c)
            for s, c in zip(predicted.spans, confidences)
        )
        return Prediction(predicted.tokens, spans)

    def predict_tokens(self, tokens: Sequence[str]) -> Prediction:
        if self.task is not TaskKind.ATESC:
            raise TaskMismatchError("token-level prediction requires an ATESC predictor")
        predicted, confidences = self.model.predict_with_confidence(tuple(tokens))
        return Prediction(
            predicted.tokens,
            tuple(
                PredictedSpan(s.start, s.end, s.polarity.value, c)
                for s, c in zip(predicted.spans, confidences)
            ),
        )


def load_predictor(
    source,
    store_dirs: Sequence[str | Path] = (),
    hub_url: str | None = None,
    expected_task: TaskKind | None = None,
) -> Predictor:
    """Build a predictor from an in-memory model, a checkpoint path, a local
    keyword, or a hub checkpoint name; all paths yield behaviorally identical
    predictors for identical weights."""
    if isinstance(source, (AscBaselineModel, AtescBaselineModel)):
        predictor = Predictor(source)
    else:
        source = str(source)
        path = Path(source)
        if (path / META_FILE).exists():
            model, meta = load(path)
            predictor = Predictor(model, name=meta.name)
        else:
            matches = find_local([source], store_dirs) if source else []
            if matches:
                model, meta = load(sorted(matches)[0])
                predictor = Predictor(model, name=meta.name)
            elif hub_url:
                try:
                    store = Path(store_dirs[0]) if store_dirs else Path(".")
                    target = fetch_checkpoint(source, hub_url, store)
                except NetworkError as err:
                    raise NotFoundError(f"checkpoint {source!r} not found: {err}") from err
                model, meta = load(target)
                predictor = Predictor(model, name=meta.name)
            else:
                raise NotFoundError(f"no checkpoint matching {source!r}")
    if expected_task is not None and predictor.task is not expected_task:
        raise TaskMismatchError(
            f"expected a {expected_task.value} predictor, got {predictor.task.value}"
        )
    return predictor
