"""CLI behavior: exit codes, JSON-lines output, flag plumbing."""

from __future__ import annotations

import json

import pytest

from absakit.cli import main
from absakit.config import TaskKind
from absakit.corpus import parse_asc_triples
from test_datasets import write_dataset

STAFF = "But the staff was so nice to us ."
HORRIBLE = "But the staff was so horrible to us ."


@pytest.fixture()
def cache(tmp_path, monkeypatch):
    root = tmp_path / "cache"
    monkeypatch.setenv("ABSAKIT_CACHE", str(root))
    monkeypatch.delenv("ABSAKIT_SERVER", raising=False)
    monkeypatch.delenv("ABSAKIT_HUB_URL", raising=False)
    return root


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def train_fixture(tmp_path, capsys, cache, task="atesc", name="fix", seeds="1"):
    corpus_kind = TaskKind.ATESC if task == "atesc" else TaskKind.ASC
    write_dataset(tmp_path, name, corpus_kind, train_n=8, test_n=2)
    code, out, err = run(
        capsys,
        "train",
        "--task",
        task,
        "--dataset",
        str(tmp_path / name),
        "--seeds",
        seeds,
        "--set",
        "epochs=2",
        "--report-dir",
        str(tmp_path / "reports"),
    )
    assert code == 0, err
    return out


class TestUsageErrors:
    def test_unknown_verb_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_unknown_flag_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--task", "asc", "--dataset", "x", "--bogus"])
        assert exc.value.code == 2


class TestTrain:
    def test_train_produces_checkpoint_and_report(self, tmp_path, capsys, cache):
        out = train_fixture(tmp_path, capsys, cache)
        lines = [json.loads(line) for line in out.strip().splitlines()]
        trials = [line for line in lines if "seed" in line]
        assert len(trials) == 1
        assert trials[0]["error"] is None
        assert (tmp_path / "reports" / "summary.csv").exists()
        assert (cache / "checkpoints" / "atesc").is_dir()

    def test_three_seeds_three_trials(self, tmp_path, capsys, cache):
        out = train_fixture(tmp_path, capsys, cache, name="fix3", seeds="1,2,3")
        lines = [json.loads(line) for line in out.strip().splitlines()]
        trials = [line for line in lines if "seed" in line]
        assert len(trials) == 3

    def test_bad_set_value_exit_1(self, tmp_path, capsys, cache):
        write_dataset(tmp_path, "cfg", TaskKind.ASC, train_n=4)
        code, out, err = run(
            capsys,
            "train", "--task", "asc", "--dataset", str(tmp_path / "cfg"),
            "--set", "epochs=0",
        )
        assert code == 1
        assert "epochs" in err


class TestInfer:
    def test_two_sentences_two_lines(self, tmp_path, capsys, cache):
        train_fixture(tmp_path, capsys, cache)
        code, out, err = run(
            capsys,
            "infer", "--checkpoint", "fix", "--text", STAFF, "--text", HORRIBLE,
        )
        assert code == 0
        lines = [json.loads(line) for line in out.strip().splitlines()]
        assert len(lines) == 2
        assert all("spans" in line for line in lines)

    def test_empty_file_zero_lines(self, tmp_path, capsys, cache):
        train_fixture(tmp_path, capsys, cache)
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        code, out, err = run(capsys, "infer", "--checkpoint", "fix", "--file", str(empty))
        assert code == 0
        assert out == ""

    def test_invalid_line_without_ignore(self, tmp_path, capsys, cache):
        train_fixture(tmp_path, capsys, cache, task="asc", name="ascfix")
        bad = tmp_path / "bad.txt"
        bad.write_text("no aspect designated here\n")
        code, out, err = run(capsys, "infer", "--checkpoint", "ascfix", "--file", str(bad))
        assert code == 1
        assert "no aspect designated here" in err

    def test_ignore_error_skips_with_warning(self, tmp_path, capsys, cache):
        train_fixture(tmp_path, capsys, cache, task="asc", name="ascfix2")
        mixed = tmp_path / "mixed.txt"
        mixed.write_text("bad line no aspect\nthe [B-ASP]food[E-ASP] was good\n")
        code, out, err = run(
            capsys,
            "infer", "--checkpoint", "ascfix2", "--file", str(mixed), "--ignore-error",
        )
        assert code == 0
        assert len(out.strip().splitlines()) == 1
        assert "skipped" in err

    def test_missing_checkpoint_exit_1(self, capsys, cache):
        code, out, err = run(capsys, "infer", "--checkpoint", "ghost", "--text", "x")
        assert code == 1


class TestConvertValidate:
    def test_convert_atesc_to_asc(self, tmp_path, capsys, cache):
        source = tmp_path / "c.atesc"
        source.write_text("The O -\nfood B-ASP Positive\nwas O -\ngood O -\n")
        out_path = tmp_path / "c.asc"
        code, _, _ = run(
            capsys,
            "convert", "--from", "atesc", "--to", "asc",
            "--in", str(source), "--out", str(out_path),
        )
        assert code == 0
        triples = parse_asc_triples(out_path.read_text())
        assert [t.aspect for t in triples] == ["food"]

    def test_validate_reports_counts(self, tmp_path, capsys, cache):
        source = tmp_path / "v.atesc"
        source.write_text("The O -\nfood B-ASP Positive\n\nx I-ASP -\n")
        code, out, _ = run(capsys, "validate", "--kind", "atesc", "--in", str(source))
        assert code == 0
        report = json.loads(out)
        assert report["examples"] == 1
        assert len(report["diagnostics"]) == 1

    def test_missing_file_exit_1(self, capsys, cache):
        code, _, err = run(capsys, "validate", "--kind", "atesc", "--in", "/nope/missing")
        assert code == 1


class TestAugmentReport:
    def test_augment_then_load_aug_train(self, tmp_path, capsys, cache):
        write_dataset(tmp_path, "aug", TaskKind.ATESC, train_n=5, test_n=2)
        code, out, _ = run(
            capsys,
            "augment", "--dataset", str(tmp_path / "aug"), "--task", "atesc",
            "--multiplier", "3",
        )
        assert code == 0
        assert json.loads(out)["examples"] == 15
        code, out, err = run(
            capsys,
            "train", "--task", "atesc", "--dataset", str(tmp_path / "aug"),
            "--load-aug", "--set", "epochs=1", "--no-save",
            "--report-dir", str(tmp_path / "r"),
        )
        assert code == 0

    def test_report_from_values_csv(self, tmp_path, capsys, cache):
        train_fixture(tmp_path, capsys, cache, name="rep")
        values = tmp_path / "reports" / "values.csv"
        code, out, _ = run(
            capsys,
            "report", "--values", str(values), "--out", str(tmp_path / "fresh"),
            "--kinds", "box,a12",
        )
        assert code == 0
        assert (tmp_path / "fresh" / "box.svg").exists()


class TestCheckpoints:
    def test_fresh_store_empty(self, capsys, cache):
        code, out, _ = run(capsys, "checkpoints")
        assert code == 0
        assert out.strip() == ""

    def test_listing_after_train(self, tmp_path, capsys, cache):
        train_fixture(tmp_path, capsys, cache)
        code, out, _ = run(capsys, "checkpoints", "--task", "atesc")
        rows = [json.loads(line) for line in out.strip().splitlines()]
        assert len(rows) == 1
        code, out, _ = run(capsys, "checkpoints", "--task", "ate")
        assert out.strip() == ""
