"""Metric recording across trials plus summary statistics and statistical
comparisons: A12 effect size, Wilcoxon rank-sum, and Scott-Knott rank
clustering.

The recorder groups values into trial buckets; each (trial, metric) pair is
one append-only series.  Statistics are pure functions over sequences so
they can be checked against brute-force oracles.
"""

from __future__ import annotations

import csv
import itertools
import math
import statistics
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class MetricsError(ValueError):
    pass


class NonFiniteValueError(MetricsError):
    pass


class EmptySeriesError(MetricsError):
    pass


class EmptySampleError(MetricsError):
    pass


class EmptyGroupError(MetricsError):
    pass


class TooFewSamplesError(MetricsError):
    pass


@dataclass(frozen=True)
class TrialSeries:
    """Ordered metric values recorded for one trial."""

    trial_name: str
    metric_name: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    std: float  # population
    median: float
    iqr: float
    min: float
    max: float

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "median": self.median,
            "iqr": self.iqr,
            "min": self.min,
            "max": self.max,
        }


def format_mean_std(mean: float, std: float) -> str:
    """Render one report cell the way results tables do: ``84.60(0.29)``."""
    return f"{mean:.2f}({std:.2f})"


def summarize(values: Sequence[float]) -> SummaryStats:
    """Count/mean/population-std/median/iqr/min/max; quartiles use linear
    (type-7) interpolation."""
    if len(values) == 0:
        raise EmptySeriesError("cannot summarize an empty series")
    data = np.asarray(values, dtype=float)
    q1, q3 = np.percentile(data, [25, 75])
    return SummaryStats(
        count=int(data.size),
        mean=float(data.mean()),
        std=float(data.std()),
        median=float(np.median(data)),
        iqr=float(q3 - q1),
        min=float(data.min()),
        max=float(data.max()),
    )


@dataclass
class _Trial:
    name: str
    series: dict[str, list[float]] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.series


class MetricRecorder:
    """Append-only metric store; concurrent ``record`` calls are serialized."""

    def __init__(self) -> None:
        self._trials: list[_Trial] = [_Trial(name="trial-1")]
        self._lock = threading.Lock()

    def record(self, metric_name: str, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise NonFiniteValueError(f"non-finite value for {metric_name}: {value}")
        with self._lock:
            self._trials[-1].series.setdefault(metric_name, []).append(value)

    def next_trial(self, name: str | None = None) -> None:
        with self._lock:
            number = len(self._trials) + 1
            self._trials.append(_Trial(name=name or f"trial-{number}"))

    def begin_trial(self, name: str) -> None:
        """Like next_trial, but renames the current bucket if it is empty."""
        with self._lock:
            if self._trials[-1].empty:
                self._trials[-1].name = name
            else:
                self._trials.append(_Trial(name=name))

    def series(self) -> list[TrialSeries]:
        with self._lock:
            out = []
            for trial in self._trials:
                for metric_name, values in trial.series.items():
                    out.append(TrialSeries(trial.name, metric_name, tuple(values)))
            return out

    def metric_names(self) -> list[str]:
        names: list[str] = []
        for series in self.series():
            if series.metric_name not in names:
                names.append(series.metric_name)
        return names

    def values(self, trial_name: str, metric_name: str) -> tuple[float, ...]:
        for series in self.series():
            if series.trial_name == trial_name and series.metric_name == metric_name:
                return series.values
        return ()

    @property
    def empty(self) -> bool:
        return all(trial.empty for trial in self._trials)


# ---------------------------------------------------------------------------
# statistics


def _midranks(values: Sequence[float]) -> list[float]:
    """Fractional ranks, ties averaged."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def a12(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Vargha-Delaney effect size: P(a > b) + 0.5 P(a == b).

    Computed from midranks; sums of half-integer ranks are exact in floats,
    so the result equals the O(nm) pair count bit-for-bit.
    """
    if not sample_a or not sample_b:
        raise EmptySampleError("a12 requires nonempty samples")
    n, m = len(sample_a), len(sample_b)
    ranks = _midranks(list(sample_a) + list(sample_b))
    rank_sum_a = sum(ranks[:n])
    return (rank_sum_a - n * (n + 1) / 2) / (n * m)


def _normal_quantile(p: float) -> float:
    return statistics.NormalDist().inv_cdf(p)


def _chi2_critical(alpha: float, dof: float) -> float:
    """Upper critical value of chi-square via the Wilson-Hilferty cube
    approximation; supports fractional degrees of freedom."""
    z = _normal_quantile(1 - alpha)
    return dof * (1 - 2 / (9 * dof) + z * math.sqrt(2 / (9 * dof))) ** 3


_SK_FACTOR = math.pi / (2 * (math.pi - 2))


def scott_knott(
    groups: Sequence[tuple[str, Sequence[float]]] | dict,
    alpha: float = 0.05,
) -> list[list[str]]:
    """Cluster named groups into statistically distinct ranks.

    Classic chi-square Scott-Knott over treatment means: groups are sorted
    by mean (best first); the contiguous two-way split maximizing the
    between-group sum of squares is accepted iff
    ``lambda = pi/(2(pi-2)) * B0 / sigma0^2`` exceeds the chi-square
    critical value at ``k/(pi-2)`` degrees of freedom.  Returns clusters
    best-mean first; each cluster is one rank.
    """
    if isinstance(groups, dict):
        groups = list(groups.items())
    if not groups:
        raise EmptyGroupError("scott_knott requires at least one group")
    for name, values in groups:
        if len(values) == 0:
            raise EmptyGroupError(f"group {name!r} is empty")

    stats = sorted(
        ((name, float(np.mean(values)), list(map(float, values))) for name, values in groups),
        key=lambda item: (-item[1], item[0]),
    )

    # pooled within-group variance and error degrees of freedom
    error_dof = sum(len(vals) - 1 for _, _, vals in stats)
    if error_dof > 0:
        pooled = sum(
            sum((v - mean) ** 2 for v in vals) for _, mean, vals in stats
        ) / error_dof
    else:
        pooled = 0.0
    mean_replication = sum(len(vals) for _, _, vals in stats) / len(stats)

    def best_split(items: list[tuple[str, float, list[float]]]) -> tuple[float, int]:
        means = [mean for _, mean, _ in items]
        total = sum(means)
        k = len(means)
        best_b0, best_cut = -1.0, 1
        left_sum = 0.0
        for cut in range(1, k):
            left_sum += means[cut - 1]
            right_sum = total - left_sum
            b0 = left_sum**2 / cut + right_sum**2 / (k - cut) - total**2 / k
            if b0 > best_b0:
                best_b0, best_cut = b0, cut
        return best_b0, best_cut

    def partition(items: list[tuple[str, float, list[float]]]) -> list[list[str]]:
        if len(items) == 1:
            return [[items[0][0]]]
        b0, cut = best_split(items)
        means = [mean for _, mean, _ in items]
        grand = sum(means) / len(means)
        k = len(means)
        sigma0 = (
            sum((m - grand) ** 2 for m in means)
            + (error_dof * pooled / mean_replication if mean_replication else 0.0)
        ) / (k + error_dof)
        if sigma0 <= 0.0:
            split = b0 > 0.0
        else:
            lam = _SK_FACTOR * b0 / sigma0
            split = lam > _chi2_critical(alpha, k / (math.pi - 2))
        if not split:
            return [[name for name, _, _ in items]]
        return partition(items[:cut]) + partition(items[cut:])

    return partition(stats)


def rank_sum_test(
    sample_a: Sequence[float], sample_b: Sequence[float], method: str = "auto"
) -> float:
    """Two-sided Wilcoxon rank-sum p-value.

    ``auto`` uses the exact permutation distribution when the pooled size is
    at most 16, otherwise the normal approximation with tie and continuity
    corrections.
    """
    n, m = len(sample_a), len(sample_b)
    if n < 2 or m < 2:
        raise TooFewSamplesError("rank_sum_test requires both samples of size >= 2")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact" or (method == "auto" and n + m <= 16):
        return _rank_sum_exact(sample_a, sample_b)
    return _rank_sum_normal(sample_a, sample_b)


def _rank_sum_exact(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    n = len(sample_a)
    ranks = _midranks(list(sample_a) + list(sample_b))
    observed = sum(ranks[:n])
    total = math.comb(len(ranks), n)
    at_most = 0
    at_least = 0
    eps = 1e-9
    for subset in itertools.combinations(ranks, n):
        w = sum(subset)
        if w <= observed + eps:
            at_most += 1
        if w >= observed - eps:
            at_least += 1
    return min(1.0, 2 * min(at_most / total, at_least / total))


def _rank_sum_normal(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    n, m = len(sample_a), len(sample_b)
    pooled = list(sample_a) + list(sample_b)
    ranks = _midranks(pooled)
    w = sum(ranks[:n])
    total = n + m
    mean = n * (total + 1) / 2
    tie_counts = [len(list(group)) for _, group in itertools.groupby(sorted(pooled))]
    tie_correction = 1 - sum(t**3 - t for t in tie_counts) / (total**3 - total)
    variance = n * m * (total + 1) / 12 * tie_correction
    if variance <= 0:
        return 1.0
    delta = w - mean
    # continuity correction toward the mean
    if delta > 0:
        delta -= 0.5
    elif delta < 0:
        delta += 0.5
    z = delta / math.sqrt(variance)
    return 2 * (1 - statistics.NormalDist().cdf(abs(z)))


# ---------------------------------------------------------------------------
# tabular export


def export_table(recorder: MetricRecorder, path: str | Path) -> Path:
    """Write one CSV row per (trial, metric) series; values fill the
    remaining columns with round-trip-exact float text."""
    path = Path(path)
    series = recorder.series()
    width = max((len(s.values) for s in series), default=0)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["trial", "metric"] + [f"v{i}" for i in range(width)])
        for entry in series:
            row = [entry.trial_name, entry.metric_name] + [repr(v) for v in entry.values]
            row += [""] * (width - len(entry.values))
            writer.writerow(row)
    return path


def import_table(path: str | Path) -> MetricRecorder:
    """Load a CSV written by export_table back into a recorder."""
    recorder = MetricRecorder()
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    current: str | None = None
    for row in rows[1:]:
        if not row:
            continue
        trial_name, metric_name, *cells = row
        if trial_name != current:
            recorder.begin_trial(trial_name)
            current = trial_name
        for cell in cells:
            if cell:
                recorder.record(metric_name, float(cell))
    return recorder


def summary_rows(recorder: MetricRecorder) -> list[dict]:
    rows = []
    for series in recorder.series():
        stats = summarize(series.values)
        row = {"trial": series.trial_name, "metric": series.metric_name}
        row.update(stats.to_dict())
        row["mean(std)"] = format_mean_std(stats.mean, stats.std)
        rows.append(row)
    return rows


def write_summary_csv(recorder: MetricRecorder, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = ["trial", "metric", "count", "mean", "std", "median", "iqr", "min", "max", "mean(std)"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for row in summary_rows(recorder):
            writer.writerow(row)
    return path
