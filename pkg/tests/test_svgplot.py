"""SVG report emission: well-formed files, stable bytes, CSV round-trip."""

from __future__ import annotations

import random
import xml.etree.ElementTree as ET

import pytest

from absakit.metrics import MetricRecorder, import_table
from absakit.svgplot import PLOT_KINDS, PlotError, render


def sample_recorder(seed=0, trials=3, per_trial=6):
    recorder = MetricRecorder()
    rng = random.Random(seed)
    for trial in range(trials):
        recorder.begin_trial(f"setting-{trial}")
        for _ in range(per_trial):
            recorder.record("Acc", 80 + trial + rng.random())
            recorder.record("F1", 70 + trial + rng.random())
    return recorder


class TestRender:
    def test_all_kinds_well_formed_xml(self, tmp_path):
        files = render(sample_recorder(), tmp_path)
        svgs = [p for p in files if p.suffix == ".svg"]
        assert sorted(p.stem for p in svgs) == sorted(PLOT_KINDS)
        for path in svgs:
            root = ET.fromstring(path.read_text(encoding="utf-8"))
            assert root.tag.endswith("svg")

    def test_report_layout(self, tmp_path):
        render(sample_recorder(), tmp_path)
        expected = {"summary.csv", "values.csv"} | {f"{k}.svg" for k in PLOT_KINDS}
        assert expected <= {p.name for p in tmp_path.iterdir()}

    def test_two_series_box(self, tmp_path):
        recorder = MetricRecorder()
        recorder.begin_trial("a")
        for value in (1.0, 2.0, 3.0):
            recorder.record("Acc", value)
        recorder.next_trial("b")
        for value in (2.0, 2.5, 4.0):
            recorder.record("Acc", value)
        files = render(recorder, tmp_path, kinds=["box"])
        box = [p for p in files if p.name == "box.svg"][0]
        ET.fromstring(box.read_text(encoding="utf-8"))

    def test_deterministic_bytes(self, tmp_path):
        first = render(sample_recorder(), tmp_path / "one")
        second = render(sample_recorder(), tmp_path / "two")
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()

    def test_values_csv_round_trips(self, tmp_path):
        recorder = sample_recorder()
        render(recorder, tmp_path)
        assert import_table(tmp_path / "values.csv").series() == recorder.series()

    def test_summary_contains_mean_std_cells(self, tmp_path):
        recorder = MetricRecorder()
        recorder.record("Acc", 84.31)
        recorder.record("Acc", 84.89)
        render(recorder, tmp_path, kinds=["box"])
        text = (tmp_path / "summary.csv").read_text()
        assert "84.60(0.29)" in text

    def test_empty_recorder_rejected(self, tmp_path):
        with pytest.raises(PlotError):
            render(MetricRecorder(), tmp_path)

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(PlotError):
            render(sample_recorder(), tmp_path, kinds=["pie"])

    def test_single_trial_single_value(self, tmp_path):
        recorder = MetricRecorder()
        recorder.record("Acc", 1.0)
        for path in render(recorder, tmp_path):
            if path.suffix == ".svg":
                ET.fromstring(path.read_text(encoding="utf-8"))
