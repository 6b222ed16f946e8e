"""Dataset registry, combination, loading, and manifest fetching."""

from __future__ import annotations

import json

import pytest

from absakit.config import TaskKind
from absakit.corpus import (
    AbsaExample,
    AspectSpan,
    Polarity,
    serialize_asc_triples,
    serialize_atesc,
    example_to_triples,
)
from absakit.datasets import (
    DatasetHandle,
    DatasetLoadError,
    DatasetRegistry,
    DigestMismatchError,
    DuplicateIdError,
    DuplicateNameError,
    ManifestEntry,
    ManifestFile,
    MixedTaskError,
    combine,
    discover_dataset_dir,
    fetch,
    load,
    seed_builtin,
    sha256_file,
    write_manifest,
)


def make_examples(n, token="food"):
    return [
        AbsaExample(("the", f"{token}{i}", "was", "fine"), (AspectSpan(1, 1, Polarity.POSITIVE),))
        for i in range(n)
    ]


def write_dataset(tmp_path, name, task, train_n=4, test_n=2, aug_n=0):
    directory = tmp_path / name
    directory.mkdir(parents=True, exist_ok=True)
    def render(examples):
        if task is TaskKind.ASC:
            triples = [t for e in examples for t in example_to_triples(e)]
            return serialize_asc_triples(triples)
        return serialize_atesc(examples)
    (directory / "train.dat").write_text(render(make_examples(train_n)), encoding="utf-8")
    (directory / "test.dat").write_text(render(make_examples(test_n)), encoding="utf-8")
    if aug_n:
        (directory / "train.augment.dat").write_text(
            render(make_examples(aug_n, token="aug")), encoding="utf-8"
        )
    return discover_dataset_dir(directory, task)


class TestRegistry:
    def test_register_and_case_insensitive_lookup(self):
        registry = DatasetRegistry()
        handle = DatasetHandle(id=1, name="Laptop14", language="English", task=TaskKind.ASC)
        registry.register(handle)
        assert registry.lookup("laptop14") is handle
        assert registry.lookup(1) is handle

    def test_duplicate_id_rejected(self):
        registry = DatasetRegistry()
        registry.register(DatasetHandle(id=1, name="a", language="x", task=TaskKind.ASC))
        with pytest.raises(DuplicateIdError):
            registry.register(DatasetHandle(id=1, name="b", language="x", task=TaskKind.ASC))

    def test_duplicate_name_rejected(self):
        registry = DatasetRegistry()
        registry.register(DatasetHandle(id=1, name="A", language="x", task=TaskKind.ASC))
        with pytest.raises(DuplicateNameError):
            registry.register(DatasetHandle(id=2, name="a", language="x", task=TaskKind.ASC))

    def test_builtin_catalog_has_26_entries(self):
        registry = seed_builtin(DatasetRegistry())
        assert len(registry) == 26
        assert registry.lookup("laptop14").language == "English"
        assert registry.lookup("ARTS-Laptop14").adversarial is True


class TestCombine:
    def test_sizes_add(self, tmp_path):
        a = write_dataset(tmp_path, "a", TaskKind.ATESC, train_n=2)
        b = write_dataset(tmp_path, "b", TaskKind.ATESC, train_n=3)
        combined = combine([a, b])
        assert len(load(combined)["train"]) == 5
        assert combined.name == "a+b"

    def test_mixed_task_rejected(self, tmp_path):
        a = write_dataset(tmp_path, "a", TaskKind.ATESC)
        b = write_dataset(tmp_path, "b", TaskKind.ASC)
        with pytest.raises(MixedTaskError):
            combine([a, b])

    def test_multilingual_pile_over_all_handles(self, tmp_path):
        handles = [
            write_dataset(tmp_path, name, TaskKind.ASC, train_n=2) for name in ("en", "zh", "fr")
        ]
        for language, handle in zip(("English", "Chinese", "French"), handles):
            handle.language = language
        pile = combine(handles, name="Multilingual")
        assert pile.language == "Multilingual"
        assert len(load(pile)["train"]) == 6

    def test_combine_associative_on_example_multiset(self, tmp_path):
        a = write_dataset(tmp_path, "a", TaskKind.ATESC, train_n=1)
        b = write_dataset(tmp_path, "b", TaskKind.ATESC, train_n=2)
        c = write_dataset(tmp_path, "c", TaskKind.ATESC, train_n=3)
        left = load(combine([combine([a, b]), c]))["train"]
        right = load(combine([a, combine([b, c])]))["train"]
        assert sorted(e.tokens for e in left) == sorted(e.tokens for e in right)


class TestLoad:
    def test_with_aug_appends_to_train_only(self, tmp_path):
        handle = write_dataset(tmp_path, "d", TaskKind.ATESC, train_n=4, test_n=2, aug_n=3)
        plain = load(handle, with_aug=False)
        augmented = load(handle, with_aug=True)
        assert len(plain["train"]) == 4
        assert len(augmented["train"]) == 7
        assert len(augmented["test"]) == len(plain["test"]) == 2

    def test_with_aug_noop_without_aug_files(self, tmp_path):
        handle = write_dataset(tmp_path, "d", TaskKind.ATESC)
        assert load(handle, with_aug=True) == load(handle, with_aug=False)

    def test_deterministic_ordering(self, tmp_path):
        handle = write_dataset(tmp_path, "d", TaskKind.ASC, train_n=5)
        assert load(handle)["train"] == load(handle)["train"]

    def test_parse_error_names_file(self, tmp_path):
        directory = tmp_path / "bad"
        directory.mkdir()
        (directory / "train.dat").write_text("tok BAD-TAG -\n", encoding="utf-8")
        handle = discover_dataset_dir(directory, TaskKind.ATESC)
        with pytest.raises(DatasetLoadError) as err:
            load(handle)
        assert "train.dat" in str(err.value)


def build_manifest_dir(tmp_path):
    source = tmp_path / "hub"
    source.mkdir()
    entries = []
    for number, name in enumerate(("alpha", "beta"), start=1):
        handle = write_dataset(source, name, TaskKind.ATESC, train_n=2, test_n=1)
        files = []
        for split in ("train", "test"):
            path = handle.splits[split][0]
            files.append(
                ManifestFile(
                    split=split,
                    path=f"{name}/{path.name}",
                    sha256=sha256_file(path),
                    examples=2 if split == "train" else 1,
                )
            )
        entries.append(
            ManifestEntry(
                id=number, name=name, language="English", task=TaskKind.ATESC, files=tuple(files)
            )
        )
    manifest_path = source / "manifest.json"
    write_manifest(entries, manifest_path)
    return manifest_path


class TestFetch:
    def test_fetch_registers_handles(self, tmp_path):
        manifest = build_manifest_dir(tmp_path)
        registry = DatasetRegistry()
        result = fetch(str(manifest), tmp_path / "cache", registry)
        assert len(result.registered) == 2
        assert result.downloads == 4
        assert len(load(registry.lookup("alpha"))["train"]) == 2

    def test_refetch_is_noop(self, tmp_path):
        manifest = build_manifest_dir(tmp_path)
        registry = DatasetRegistry()
        fetch(str(manifest), tmp_path / "cache", registry)
        again = fetch(str(manifest), tmp_path / "cache", registry)
        assert again.downloads == 0
        assert again.registered == []

    def test_tampered_file_digest_mismatch(self, tmp_path):
        manifest = build_manifest_dir(tmp_path)
        victim = manifest.parent / "alpha" / "train.dat"
        victim.write_text(victim.read_text() + "tampered O -\n", encoding="utf-8")
        with pytest.raises(DigestMismatchError):
            fetch(str(manifest), tmp_path / "cache", DatasetRegistry())
