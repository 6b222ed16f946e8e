"""Dataset registry with unique ids/names, manifest-driven fetching,
dataset combination, and augmentation-file loading.

A manifest is a single JSON document that any static file host (or local
directory) can serve; file integrity is checked against SHA-256 digests.
Downloaded datasets land under ``<root>/<task>/<name>/``.  Augmentation
files are distinguished by a ``.augment`` filename infix and are appended
to the train split only when loading with ``with_aug=True``.
"""

from __future__ import annotations

import hashlib
import json
import threading
import urllib.error
import urllib.parse
import urllib.request
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from absakit.config import TaskKind
from absakit.corpus import Corpus, CorpusParseError, parse_asc_triples, parse_atesc

SPLITS = ("train", "valid", "test")
AUG_INFIX = ".augment"


class DatasetError(Exception):
    pass


class DuplicateIdError(DatasetError):
    pass


class DuplicateNameError(DatasetError):
    pass


class UnknownDatasetError(DatasetError):
    pass


class MixedTaskError(DatasetError):
    pass


class DatasetLoadError(DatasetError):
    """Corpus diagnostic (or missing file) with file attribution."""


class ManifestParseError(DatasetError):
    pass


class DigestMismatchError(DatasetError):
    def __init__(self, file: str):
        super().__init__(f"digest mismatch for {file}")
        self.file = file


class NetworkError(DatasetError):
    pass


@dataclass
class DatasetHandle:
    """A registered dataset: unique id and name, split files, optional
    augmentation files."""

    id: int
    name: str
    language: str
    task: TaskKind
    splits: dict[str, list[Path]] = field(default_factory=dict)
    aug_files: list[Path] = field(default_factory=list)
    origin: str = "local"
    adversarial: bool = False

    def split_files(self, split: str) -> list[Path]:
        return list(self.splits.get(split, []))

    def data_dir(self) -> Path | None:
        for split in SPLITS:
            for path in self.splits.get(split, []):
                return Path(path).parent
        return None


# Builtin catalog: (name, language, train, valid, test, augmented, adversarial).
BUILTIN_DATASETS: tuple[tuple[str, str, int, int, int, int, bool], ...] = (
    ("Laptop14", "English", 2328, 0, 638, 13325, False),
    ("Restaurant14", "English", 3604, 0, 1120, 19832, False),
    ("Restaurant15", "English", 1200, 0, 539, 7311, False),
    ("Restaurant16", "English", 1744, 0, 614, 10372, False),
    ("Twitter", "English", 5880, 0, 654, 35227, False),
    ("MAMS", "English", 11181, 1332, 1336, 62665, False),
    ("Television", "English", 3647, 0, 915, 25676, False),
    ("T-shirt", "English", 1834, 0, 465, 15086, False),
    ("Yelp", "English", 808, 0, 245, 2547, False),
    ("Phone", "Chinese", 1740, 0, 647, 0, False),
    ("Car", "Chinese", 862, 0, 284, 0, False),
    ("Notebook", "Chinese", 464, 0, 154, 0, False),
    ("Camera", "Chinese", 1500, 0, 571, 0, False),
    ("MOOC", "Chinese", 1583, 0, 396, 0, False),
    ("Shampoo", "Chinese", 6810, 0, 915, 0, False),
    ("MOOC-En", "English", 1492, 0, 459, 10562, False),
    ("Arabic", "Arabic", 9620, 0, 2372, 0, False),
    ("Dutch", "Dutch", 1283, 0, 394, 0, False),
    ("Spanish", "Spanish", 1928, 0, 731, 0, False),
    ("Turkish", "Turkish", 1385, 0, 146, 0, False),
    ("Russian", "Russian", 3157, 0, 969, 0, False),
    ("French", "French", 1769, 0, 718, 0, False),
    ("ARTS-Laptop14", "English", 2328, 638, 1877, 13325, True),
    ("ARTS-Restaurant14", "English", 3604, 1120, 3448, 19832, True),
    ("Kaggle", "English", 3376, 0, 866, 0, True),
    ("Chinese-Restaurant", "Chinese", 26119, 3638, 7508, 0, True),
)


def builtin_catalog() -> list[dict]:
    """Catalog rows for the builtin datasets (counts are expectations, the
    copyrighted files themselves are never bundled)."""
    rows = []
    for number, (name, language, train, valid, test, augmented, adversarial) in enumerate(
        BUILTIN_DATASETS, start=1
    ):
        rows.append(
            {
                "id": number,
                "name": name,
                "language": language,
                "train": train,
                "valid": valid,
                "test": test,
                "augmented": augmented,
                "adversarial": adversarial,
            }
        )
    return rows


class DatasetRegistry:
    """Id- and name-addressable dataset registry.

    Reads are lock-free on immutable snapshots; registration takes the lock.
    """

    def __init__(self) -> None:
        self._by_id: dict[int, DatasetHandle] = {}
        self._by_name: dict[str, DatasetHandle] = {}
        self._lock = threading.RLock()

    def register(self, handle: DatasetHandle) -> DatasetHandle:
        with self._lock:
            if handle.id in self._by_id:
                raise DuplicateIdError(f"dataset id {handle.id} already registered")
            if handle.name.lower() in self._by_name:
                raise DuplicateNameError(f"dataset name {handle.name!r} already registered")
            self._by_id[handle.id] = handle
            self._by_name[handle.name.lower()] = handle
        return handle

    def lookup(self, key: int | str) -> DatasetHandle:
        with self._lock:
            if isinstance(key, int):
                if key in self._by_id:
                    return self._by_id[key]
            else:
                handle = self._by_name.get(str(key).lower())
                if handle is not None:
                    return handle
        raise UnknownDatasetError(f"no dataset registered under {key!r}")

    def __contains__(self, key: int | str) -> bool:
        try:
            self.lookup(key)
            return True
        except UnknownDatasetError:
            return False

    def __len__(self) -> int:
        return len(self._by_id)

    def handles(self) -> list[DatasetHandle]:
        with self._lock:
            return sorted(self._by_id.values(), key=lambda h: h.id)

    def next_id(self) -> int:
        with self._lock:
            return max(self._by_id, default=0) + 1


def seed_builtin(registry: DatasetRegistry) -> DatasetRegistry:
    """Register the builtin catalog (handles without files; supply your own
    copies of the source datasets or fetch from a manifest)."""
    for row in builtin_catalog():
        registry.register(
            DatasetHandle(
                id=row["id"],
                name=row["name"],
                language=row["language"],
                task=TaskKind.ASC,
                origin="builtin",
                adversarial=row["adversarial"],
            )
        )
    return registry


def combine(handles: Sequence[DatasetHandle], name: str | None = None) -> DatasetHandle:
    """Concatenate datasets of one task kind into a synthetic handle.

    The synthetic id is a negative CRC of the joined name, so combined
    handles never collide with catalog ids.
    """
    if not handles:
        raise DatasetError("combine requires at least one handle")
    tasks = {handle.task for handle in handles}
    if len(tasks) != 1:
        raise MixedTaskError(f"cannot combine tasks {sorted(t.value for t in tasks)}")
    joined = name or "+".join(handle.name for handle in handles)
    languages = {handle.language for handle in handles}
    splits: dict[str, list[Path]] = {}
    aug_files: list[Path] = []
    for handle in handles:
        for split, files in handle.splits.items():
            splits.setdefault(split, []).extend(files)
        aug_files.extend(handle.aug_files)
    return DatasetHandle(
        id=-(zlib.crc32(joined.encode("utf-8")) or 1),
        name=joined,
        language=languages.pop() if len(languages) == 1 else "Multilingual",
        task=tasks.pop(),
        splits=splits,
        aug_files=aug_files,
        origin="combined",
        adversarial=any(handle.adversarial for handle in handles),
    )


def _parse_file(path: Path, task: TaskKind) -> Corpus:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise DatasetLoadError(f"{path}: {err}") from err
    try:
        if task is TaskKind.ASC:
            return parse_asc_triples(text)
        return parse_atesc(text)
    except CorpusParseError as err:
        raise DatasetLoadError(f"{path}: {err}") from err


def load(handle: DatasetHandle, with_aug: bool = False) -> dict[str, Corpus]:
    """Parse a handle's split files; ``with_aug`` appends augmentation
    examples to the train split only.  Ordering is file order, so loading
    is deterministic."""
    corpora: dict[str, Corpus] = {}
    for split in SPLITS:
        items: list = []
        for path in handle.splits.get(split, []):
            items.extend(_parse_file(Path(path), handle.task))
        corpora[split] = items
    if with_aug:
        aug_files = list(handle.aug_files) or _discover_aug_files(handle)
        for path in aug_files:
            corpora["train"].extend(_parse_file(Path(path), handle.task))
    return corpora


def _discover_aug_files(handle: DatasetHandle) -> list[Path]:
    directory = handle.data_dir()
    if directory is None:
        return []
    return sorted(p for p in directory.iterdir() if AUG_INFIX in p.name)


def discover_dataset_dir(
    path: str | Path, task: TaskKind, dataset_id: int | None = None
) -> DatasetHandle:
    """Build an ad-hoc handle from a directory by filename convention:
    ``train``/``valid`` (or ``dev``)/``test`` substrings pick the split,
    the ``.augment`` infix marks augmentation files."""
    directory = Path(path)
    if not directory.is_dir():
        raise UnknownDatasetError(f"not a dataset directory: {directory}")
    splits: dict[str, list[Path]] = {split: [] for split in SPLITS}
    aug_files: list[Path] = []
    for entry in sorted(directory.iterdir()):
        if not entry.is_file():
            continue
        name = entry.name.lower()
        if AUG_INFIX in name:
            aug_files.append(entry)
        elif "train" in name:
            splits["train"].append(entry)
        elif "valid" in name or "dev" in name:
            splits["valid"].append(entry)
        elif "test" in name:
            splits["test"].append(entry)
    if dataset_id is None:
        dataset_id = -(zlib.crc32(str(directory.resolve()).encode("utf-8")) or 1)
    return DatasetHandle(
        id=dataset_id,
        name=directory.name,
        language="unknown",
        task=task,
        splits=splits,
        aug_files=aug_files,
        origin=str(directory),
    )


# ---------------------------------------------------------------------------
# manifests


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_url(url: str) -> bytes:
    parsed = urllib.parse.urlparse(str(url))
    if parsed.scheme in ("", "file"):
        path = Path(parsed.path if parsed.scheme == "file" else url)
        try:
            return path.read_bytes()
        except OSError as err:
            raise NetworkError(f"cannot read {url}: {err}") from err
    try:
        with urllib.request.urlopen(url) as response:  # HTTP GET only
            return response.read()
    except (urllib.error.URLError, OSError) as err:
        raise NetworkError(f"cannot fetch {url}: {err}") from err


def resolve_relative(manifest_url: str, relative: str) -> str:
    parsed = urllib.parse.urlparse(str(manifest_url))
    if parsed.scheme in ("", "file"):
        base = Path(parsed.path if parsed.scheme == "file" else manifest_url).parent
        return str(base / relative)
    return urllib.parse.urljoin(str(manifest_url), relative)


@dataclass(frozen=True)
class ManifestFile:
    split: str
    path: str
    sha256: str
    examples: int = 0


@dataclass(frozen=True)
class ManifestEntry:
    id: int
    name: str
    language: str
    task: TaskKind
    files: tuple[ManifestFile, ...]
    aug_files: tuple[ManifestFile, ...] = ()
    adversarial: bool = False


def parse_manifest(data: bytes | str) -> list[ManifestEntry]:
    try:
        document = json.loads(data)
        entries = []
        for raw in document["datasets"]:
            entries.append(
                ManifestEntry(
                    id=int(raw["id"]),
                    name=str(raw["name"]),
                    language=str(raw.get("language", "unknown")),
                    task=TaskKind.parse(raw["task"]),
                    files=tuple(
                        ManifestFile(
                            split=f["split"],
                            path=f["path"],
                            sha256=f["sha256"],
                            examples=int(f.get("examples", 0)),
                        )
                        for f in raw.get("files", [])
                    ),
                    aug_files=tuple(
                        ManifestFile(
                            split="train",
                            path=f["path"],
                            sha256=f["sha256"],
                            examples=int(f.get("examples", 0)),
                        )
                        for f in raw.get("aug_files", [])
                    ),
                    adversarial=bool(raw.get("adversarial", False)),
                )
            )
        return entries
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as err:
        raise ManifestParseError(f"bad manifest: {err}") from err


@dataclass
class FetchResult:
    registered: list[DatasetHandle]
    downloads: int


def fetch(manifest_url: str, dest_dir: str | Path, registry: DatasetRegistry) -> FetchResult:
    """Fetch a dataset manifest, download and digest-check its files, and
    register the resulting handles.  Re-fetching with matching digests is a
    no-op (zero downloads)."""
    entries = parse_manifest(read_url(str(manifest_url)))
    dest = Path(dest_dir)
    registered: list[DatasetHandle] = []
    downloads = 0

    def materialize(entry: ManifestEntry, file: ManifestFile) -> Path:
        nonlocal downloads
        target = dest / entry.task.value.lower() / entry.name / Path(file.path).name
        if target.exists() and sha256_file(target) == file.sha256:
            return target
        payload = read_url(resolve_relative(str(manifest_url), file.path))
        downloads += 1
        if hashlib.sha256(payload).hexdigest() != file.sha256:
            raise DigestMismatchError(file.path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(payload)
        return target

    for entry in entries:
        splits: dict[str, list[Path]] = {}
        for file in entry.files:
            splits.setdefault(file.split, []).append(materialize(entry, file))
        aug_files = [materialize(entry, file) for file in entry.aug_files]
        if entry.name in registry:
            existing = registry.lookup(entry.name)
            if existing.id == entry.id:  # idempotent re-fetch
                continue
        handle = DatasetHandle(
            id=entry.id,
            name=entry.name,
            language=entry.language,
            task=entry.task,
            splits=splits,
            aug_files=aug_files,
            origin=str(manifest_url),
            adversarial=entry.adversarial,
        )
        registry.register(handle)
        registered.append(handle)
    return FetchResult(registered=registered, downloads=downloads)


def write_manifest(entries: Iterable[ManifestEntry], path: Path) -> None:
    """Serialize manifest entries to JSON (used to publish a dataset dir)."""
    document = {
        "version": 1,
        "datasets": [
            {
                "id": entry.id,
                "name": entry.name,
                "language": entry.language,
                "task": entry.task.value,
                "adversarial": entry.adversarial,
                "files": [
                    {
                        "split": f.split,
                        "path": f.path,
                        "sha256": f.sha256,
                        "examples": f.examples,
                    }
                    for f in entry.files
                ],
                "aug_files": [
                    {"path": f.path, "sha256": f.sha256, "examples": f.examples}
                    for f in entry.aug_files
                ],
            }
            for entry in entries
        ],
    }
    path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
