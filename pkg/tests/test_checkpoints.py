"""Checkpoint persistence, discovery, and the three predictor paths."""

from __future__ import annotations

import json
import random

import numpy as np
import pytest

from absakit.config import TaskKind, defaults
from absakit.corpus import AbsaExample, AspectSpan, Polarity
from absakit.checkpoints import (
    DigestMismatchError,
    NameCollisionError,
    NotFoundError,
    Predictor,
    TaskMismatchError,
    available_checkpoints,
    decode_tensors,
    encode_tensors,
    fetch_checkpoint,
    find_local,
    load,
    load_predictor,
    meta_for,
    model_digest,
    payload_digest,
    save,
)
from absakit.training import train
from test_training import atesc_staff_corpus, separable_corpus


@pytest.fixture(scope="module")
def asc_model():
    return train(defaults(TaskKind.ASC), {"train": separable_corpus(80)}).model


@pytest.fixture(scope="module")
def atesc_model():
    return train(defaults(TaskKind.ATESC), {"train": atesc_staff_corpus(16)}).model


def random_inputs(n, seed=0):
    rng = random.Random(seed)
    vocabulary = ["the", "good", "bad", "thing0", "thing1", "it", "was", "really"]
    inputs = []
    for _ in range(n):
        tokens = [rng.choice(vocabulary) for _ in range(rng.randint(2, 7))]
        at = rng.randrange(len(tokens))
        inputs.append(
            AbsaExample(tuple(tokens), (AspectSpan(at, at, Polarity.NEUTRAL),))
        )
    return inputs


class TestTensorCodec:
    def test_round_trip(self):
        tensors = {
            "weights": np.arange(12, dtype=float).reshape(3, 4),
            "bias": np.array([0.5, -1.5, 2.0]),
        }
        decoded = decode_tensors(encode_tensors(tensors))
        assert set(decoded) == set(tensors)
        for name in tensors:
            assert np.array_equal(decoded[name], tensors[name])

    def test_deterministic_bytes(self):
        tensors = {"a": np.ones((2, 2)), "b": np.zeros(3)}
        assert encode_tensors(tensors) == encode_tensors(dict(reversed(tensors.items())))


class TestSaveLoad:
    def test_round_trip_preserves_predictions(self, asc_model, tmp_path):
        meta = meta_for(asc_model, "asc-sep-1", defaults(TaskKind.ASC))
        path = save(asc_model, meta, tmp_path)
        loaded, loaded_meta = load(path)
        assert loaded_meta.digest == meta.digest
        for example in random_inputs(100):
            span = example.spans[0]
            assert loaded.predict(example, span) == asc_model.predict(example, span)

    def test_save_twice_identical_is_noop(self, asc_model, tmp_path):
        meta = meta_for(asc_model, "asc-sep-1", defaults(TaskKind.ASC))
        first = save(asc_model, meta, tmp_path)
        second = save(asc_model, meta_for(asc_model, "asc-sep-1", defaults(TaskKind.ASC)), tmp_path)
        assert first == second

    def test_name_collision_on_different_weights(self, asc_model, atesc_model, tmp_path):
        save(asc_model, meta_for(asc_model, "clash", defaults(TaskKind.ASC)), tmp_path)
        other = train(defaults(TaskKind.ASC), {"train": separable_corpus(20, seed=3)}).model
        with pytest.raises(NameCollisionError):
            save(other, meta_for(other, "clash", defaults(TaskKind.ASC)), tmp_path)

    def test_corrupted_payload_digest_mismatch(self, asc_model, tmp_path):
        path = save(asc_model, meta_for(asc_model, "asc-x", defaults(TaskKind.ASC)), tmp_path)
        weights = path / "weights.bin"
        weights.write_bytes(weights.read_bytes()[:-8] + b"\x00" * 8)
        with pytest.raises(DigestMismatchError):
            load(path)

    def test_atesc_round_trip(self, atesc_model, tmp_path):
        path = save(atesc_model, meta_for(atesc_model, "atesc-x", defaults(TaskKind.ATESC)), tmp_path)
        loaded, _ = load(path)
        tokens = ("But", "the", "staff", "was", "so", "nice", "to", "us", ".")
        assert loaded.predict(tokens) == atesc_model.predict(tokens)


class TestQueries:
    def test_empty_store(self, tmp_path):
        assert available_checkpoints("ASC", [tmp_path]) == {}

    def test_task_filtering(self, asc_model, tmp_path):
        save(asc_model, meta_for(asc_model, "asc-a", defaults(TaskKind.ASC)), tmp_path)
        assert "asc-a" in available_checkpoints("ASC", [tmp_path])
        assert available_checkpoints("ATESC", [tmp_path]) == {}

    def test_keyword_search(self, asc_model, atesc_model, tmp_path):
        save(asc_model, meta_for(asc_model, "asc-laptop14-1", defaults(TaskKind.ASC)), tmp_path)
        save(atesc_model, meta_for(atesc_model, "atesc-rest14", defaults(TaskKind.ATESC)), tmp_path)
        matches = find_local(["laptop14"], [tmp_path])
        assert [p.name for p in matches] == ["asc-laptop14-1"]
        assert len(find_local([], [tmp_path])) == 2
        assert find_local(["laptop14"], [tmp_path / "nowhere"]) == []


def build_hub(tmp_path, model, n_entries=3):
    store = tmp_path / "hubsrc"
    entries = []
    for i in range(n_entries):
        name = f"hub-ckpt-{i}"
        path = save(model, meta_for(model, name, defaults(TaskKind.ASC)), store)
        entries.append(
            {
                "name": name,
                "task_code": "ASC",
                "model_id": "bow-logreg",
                "digest": json.loads((path / "meta.json").read_text())["digest"],
                "metrics": {},
                "files": {
                    "meta.json": {"path": f"asc/{name}/meta.json"},
                    "weights.bin": {
                        "path": f"asc/{name}/weights.bin",
                        "sha256": payload_digest((path / "weights.bin").read_bytes()),
                    },
                },
            }
        )
    hub_path = store / "hub.json"
    hub_path.write_text(json.dumps({"checkpoints": entries}))
    return hub_path


class TestHub:
    def test_hub_listing_marked_remote(self, asc_model, tmp_path):
        hub = build_hub(tmp_path, asc_model)
        listing = available_checkpoints("ASC", [], hub_url=str(hub))
        assert len(listing) == 3
        assert all(meta.remote for meta in listing.values())

    def test_network_failure_degrades_to_local(self, asc_model, tmp_path):
        save(asc_model, meta_for(asc_model, "local-one", defaults(TaskKind.ASC)), tmp_path)
        listing = available_checkpoints("ASC", [tmp_path], hub_url="file:///nope/missing.json")
        assert list(listing) == ["local-one"]

    def test_fetch_checkpoint_and_load(self, asc_model, tmp_path):
        hub = build_hub(tmp_path, asc_model)
        target = fetch_checkpoint("hub-ckpt-1", str(hub), tmp_path / "cache")
        loaded, meta = load(target)
        assert meta.name == "hub-ckpt-1"
        assert model_digest(loaded) == model_digest(asc_model)


class TestLoadPredictor:
    def test_from_memory_equals_saved(self, asc_model, tmp_path):
        direct = load_predictor(asc_model)
        path = save(asc_model, meta_for(asc_model, "asc-mem", defaults(TaskKind.ASC)), tmp_path)
        via_disk = load_predictor(str(path))
        text = "the [B-ASP]thing0[E-ASP] was good"
        assert direct.predict_text(text) == via_disk.predict_text(text)

    def test_from_keyword(self, asc_model, tmp_path):
        save(asc_model, meta_for(asc_model, "asc-laptop14-0", defaults(TaskKind.ASC)), tmp_path)
        predictor = load_predictor("laptop14", store_dirs=[tmp_path])
        assert predictor.name == "asc-laptop14-0"

    def test_from_hub_name(self, asc_model, tmp_path):
        hub = build_hub(tmp_path, asc_model)
        predictor = load_predictor(
            "hub-ckpt-2", store_dirs=[tmp_path / "cache"], hub_url=str(hub)
        )
        assert predictor.digest == model_digest(asc_model)

    def test_unknown_name(self, tmp_path):
        with pytest.raises(NotFoundError):
            load_predictor("missing", store_dirs=[tmp_path])

    def test_task_mismatch(self, asc_model):
        with pytest.raises(TaskMismatchError):
            load_predictor(asc_model, expected_task=TaskKind.ATESC)

    def test_atesc_predictor_on_raw_text(self, atesc_model):
        predictor = Predictor(atesc_model)
        prediction = predictor.predict_text("But the staff was so nice to us .")
        assert [(s.start, s.end) for s in prediction.spans] == [(2, 2)]
