"""Vote-ensemble prediction over multiple predictors and the cartesian
training driver over (model x dataset x seed) lists.

Label votes use ``max_vote``; ties break on the fixed label order
Negative < Neutral < Positive (then lexicographic for other strings), so
aggregation is invariant to predictor order.  ATESC spans need a strict
majority of members to be emitted; their polarity is re-voted among the
supporters of that exact span.
"""

from __future__ import annotations

import dataclasses
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

from absakit.checkpoints import PredictedSpan, Prediction, Predictor, meta_for, save
from absakit.config import RunConfig, TaskKind, check
from absakit.corpus import Polarity
from absakit.datasets import DatasetHandle, load
from absakit.metrics import MetricRecorder
from absakit.training import TrainResult, train


class EnsembleError(Exception):
    pass


class EmptyEnsembleError(EnsembleError):
    pass


class MixedTaskError(EnsembleError):
    pass


NUMERIC_AGGS = ("mean", "median", "min", "max")


@dataclass(frozen=True)
class AggregationPolicy:
    numeric_agg: str = "mean"
    str_agg: str = "max_vote"

    def __post_init__(self) -> None:
        if self.numeric_agg not in NUMERIC_AGGS:
            raise ValueError(f"numeric_agg must be one of {NUMERIC_AGGS}")
        if self.str_agg != "max_vote":
            raise ValueError("str_agg supports only max_vote")


def _aggregate_numeric(values: Sequence[float], how: str) -> float:
    if how == "mean":
        return statistics.fmean(values)
    if how == "median":
        return float(statistics.median(values))
    if how == "min":
        return min(values)
    return max(values)


_POLARITY_RANK = {p.value: p.order for p in Polarity}


def max_vote(labels: Sequence[str], weights: Sequence[float] | None = None) -> str:
    """Weighted plurality vote; ties resolve by the fixed polarity order,
    then lexicographically."""
    if not labels:
        raise EmptyEnsembleError("max_vote over no labels")
    if weights is None:
        weights = [1.0] * len(labels)
    totals: dict[str, float] = {}
    for label, weight in zip(labels, weights):
        totals[label] = totals.get(label, 0.0) + weight
    top = max(totals.values())
    tied = [label for label, total in totals.items() if total == top]
    return min(tied, key=lambda label: (_POLARITY_RANK.get(label, len(_POLARITY_RANK)), label))


def ensemble_predict(
    predictors: Sequence[Predictor],
    text: str,
    policy: AggregationPolicy = AggregationPolicy(),
    weights: Sequence[float] | None = None,
) -> Prediction:
    """Aggregate member predictions on one input.

    ASC: every member scores the same designated regions; labels are
    max-voted and confidences combined with ``numeric_agg``.  ATESC: a span
    is emitted iff a strict majority of members predicted that exact
    (start, end); supporters then vote its polarity.
    """
    if not predictors:
        raise EmptyEnsembleError("ensemble requires at least one predictor")
    tasks = {p.task for p in predictors}
    if len(tasks) != 1:
        raise MixedTaskError(f"mixed predictor tasks: {sorted(t.value for t in tasks)}")
    if weights is not None:
        if len(weights) != len(predictors):
            raise EnsembleError("weights must match the predictor list")
        if any(w <= 0 for w in weights):
            raise EnsembleError("weights must be positive")
    member_weights = list(weights) if weights is not None else [1.0] * len(predictors)

    predictions = [p.predict_text(text) for p in predictors]
    tokens = predictions[0].tokens
    task = tasks.pop()

    if task is TaskKind.ASC:
        spans = []
        for position in range(len(predictions[0].spans)):
            member_spans = [prediction.spans[position] for prediction in predictions]
            label = max_vote([s.polarity for s in member_spans], member_weights)
            confidence = _aggregate_numeric(
                [s.confidence for s in member_spans], policy.numeric_agg
            )
            spans.append(
                PredictedSpan(member_spans[0].start, member_spans[0].end, label, confidence)
            )
        return Prediction(tokens, tuple(spans))

    # ATESC: strict-majority span voting
    supporters: dict[tuple[int, int], list[tuple[PredictedSpan, float]]] = {}
    for prediction, weight in zip(predictions, member_weights):
        for span in prediction.spans:
            supporters.setdefault((span.start, span.end), []).append((span, weight))
    spans = []
    for (start, end), votes in sorted(supporters.items()):
        if len(votes) * 2 <= len(predictors):
            continue
        label = max_vote([s.polarity for s, _ in votes], [w for _, w in votes])
        confidence = _aggregate_numeric([s.confidence for s, _ in votes], policy.numeric_agg)
        spans.append(PredictedSpan(start, end, label, confidence))
    return Prediction(tokens, tuple(spans))


class VoteEnsemblePredictor:
    """Predictor-shaped wrapper so ensembles plug in wherever one model does."""

    def __init__(
        self,
        predictors: Sequence[Predictor] | Mapping[str, Predictor],
        weights: Sequence[float] | None = None,
        numeric_agg: str = "mean",
        str_agg: str = "max_vote",
    ) -> None:
        if isinstance(predictors, Mapping):
            predictors = [predictors[key] for key in sorted(predictors)]
        if not predictors:
            raise EmptyEnsembleError("ensemble requires at least one predictor")
        tasks = {p.task for p in predictors}
        if len(tasks) != 1:
            raise MixedTaskError(f"mixed predictor tasks: {sorted(t.value for t in tasks)}")
        self.predictors = list(predictors)
        self.weights = list(weights) if weights is not None else None
        self.policy = AggregationPolicy(numeric_agg=numeric_agg, str_agg=str_agg)
        self.task = tasks.pop()

    def predict_text(self, text: str) -> Prediction:
        return ensemble_predict(self.predictors, text, self.policy, self.weights)


# ---------------------------------------------------------------------------
# ensemble training grid


@dataclass
class TrialOutcome:
    model_id: str
    dataset: str
    seed: int
    result: TrainResult | None = None
    checkpoint: str | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        data = {
            "model": self.model_id,
            "dataset": self.dataset,
            "seed": self.seed,
            "error": self.error,
        }
        if self.result is not None:
            data["metrics"] = self.result.best.to_dict()
            if self.result.test is not None:
                data["test_metrics"] = self.result.test.to_dict()
        if self.checkpoint is not None:
            data["checkpoint"] = self.checkpoint
        return data


def ensemble_train(
    base_config: RunConfig,
    model_ids: Sequence[str],
    handles: Sequence[DatasetHandle],
    seeds: Sequence[int],
    recorder: MetricRecorder | None = None,
    store_dir=None,
) -> list[TrialOutcome]:
    """Run one trial per (model, dataset, seed) tuple in deterministic
    document order; per-trial failures are recorded and the grid continues.

    Per-seed best metrics land in one recorder bucket per (model, dataset)
    combination, so summaries show mean(std) across seeds.
    """
    outcomes: list[TrialOutcome] = []
    for model_id in model_ids:
        for handle in handles:
            config = dataclasses.replace(base_config, model_id=model_id)
            if recorder is not None:
                recorder.begin_trial(f"{model_id}|{handle.name}")
            splits = None
            for seed in seeds:
                outcome = TrialOutcome(model_id=model_id, dataset=handle.name, seed=seed)
                try:
                    diagnostics = check(config)
                    if diagnostics:
                        raise EnsembleError(
                            "config check failed: " + "; ".join(str(d) for d in diagnostics)
                        )
                    if splits is None:
                        splits = load(handle, with_aug=config.load_aug)
                    result = train(config, splits, seed=seed)
                    outcome.result = result
                    if recorder is not None:
                        recorder.record("Acc", result.best.acc_asc)
                        recorder.record("F1_ASC", result.best.f1_asc)
                        if result.best.f1_ate is not None:
                            recorder.record("F1_ATE", result.best.f1_ate)
                    if store_dir is not None and config.checkpoint_save_mode == "state":
                        name = f"{config.task.value.lower()}-{model_id}-{handle.name}-seed{seed}"
                        path = save(
                            result.model,
                            meta_for(result.model, name.lower(), config, result.best),
                            store_dir,
                        )
                        outcome.checkpoint = str(path)
                except Exception as err:  # per-trial isolation
                    outcome.error = f"{type(err).__name__}: {err}"
                outcomes.append(outcome)
    return outcomes
