"""Baseline predictors and the training loop.

Two desk-scale models stand behind the predictor contract:

  * ``bow-logreg`` (ASC): multinomial logistic regression over bag-of-words
    features with local-context weighting (cdw distance decay or cdm hard
    window), trained by per-example SGD with L2 decay.
  * ``iob-perceptron`` (ATESC): averaged structured perceptron over emission
    and transition features with constrained Viterbi decoding (O -> I-ASP is
    impossible by construction), plus an inner ASC model for span polarity.

Training is bit-deterministic given (config, seed, corpus); models are
immutable after training and safe to share across threads.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from absakit.config import RunConfig, TaskKind
from absakit.corpus import (
    AbsaExample,
    AscTriple,
    AspectSpan,
    Corpus,
    Polarity,
    POLARITIES,
    triple_to_example,
)
from absakit.metrics import TrialSeries


class TrainingError(Exception):
    pass


class EmptyTrainSplitError(TrainingError):
    pass


class EmptyCorpusError(TrainingError):
    pass


class VocabularyEmptyError(TrainingError):
    pass


class UnknownModelError(TrainingError):
    pass


LABELS: tuple[Polarity, ...] = POLARITIES  # fixed order: Negative, Neutral, Positive

# model ids -> (task, forced lcf mode or None)
MODEL_IDS: dict[str, tuple[TaskKind, str | None]] = {
    "bow-logreg": (TaskKind.ASC, None),
    "bow-logreg-cdw": (TaskKind.ASC, "cdw"),
    "bow-logreg-cdm": (TaskKind.ASC, "cdm"),
    "iob-perceptron": (TaskKind.ATESC, None),
}


@dataclass(frozen=True)
class EvalResult:
    """Evaluation metrics, each in [0, 1]; f1_ate only for ATESC."""

    acc_asc: float
    f1_asc: float
    f1_ate: float | None = None

    def to_dict(self) -> dict:
        data = {"acc_asc": self.acc_asc, "f1_asc": self.f1_asc}
        if self.f1_ate is not None:
            data["f1_ate"] = self.f1_ate
        return data

    def selection_score(self, task: TaskKind) -> float:
        if task is TaskKind.ASC or self.f1_ate is None:
            return self.acc_asc
        return (self.f1_ate + self.f1_asc) / 2


AscInstance = tuple[AbsaExample, AspectSpan]


def asc_instances(corpus: Corpus) -> list[AscInstance]:
    """Flatten a corpus into (example, span) classification instances."""
    instances: list[AscInstance] = []
    for item in corpus:
        example = triple_to_example(item) if isinstance(item, AscTriple) else item
        for span in example.spans:
            instances.append((example, span))
    return instances


# ---------------------------------------------------------------------------
# ASC features


def _span_distance(position: int, span: AspectSpan) -> int:
    if position < span.start:
        return span.start - position
    if position > span.end:
        return position - span.end
    return 0


def _context_weight(distance: int, lcf: str, window: int, max_seq_len: int) -> float:
    if lcf == "cdm":
        return 1.0 if distance <= window else 0.0
    return max(0.0, 1.0 - distance / max_seq_len)


def _featurize(
    example: AbsaExample, span: AspectSpan, lcf: str, window: int, max_seq_len: int
) -> dict[str, float]:
    features: dict[str, float] = {}
    for position, token in enumerate(example.tokens):
        weight = _context_weight(_span_distance(position, span), lcf, window, max_seq_len)
        if weight > 0.0:
            features[token] = features.get(token, 0.0) + weight
    for token in example.aspect_tokens(span):
        key = f"ASP:{token}"
        features[key] = features.get(key, 0.0) + 1.0
    return features


def featurize_asc(example: AbsaExample, span: AspectSpan, config: RunConfig) -> dict[str, float]:
    """Sparse bag-of-words features for one (example, span) instance.

    cdw weights token t by ``max(0, 1 - dist(t, span)/max_seq_len)``; cdm
    keeps weight 1 within ``window`` tokens of the span and drops the rest.
    Aspect tokens are additionally emitted under an ``ASP:`` prefix.
    """
    return _featurize(example, span, config.lcf, config.window, config.max_seq_len)


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    feature_cols: np.ndarray,
    feature_vals: np.ndarray,
    label_index: int,
    l2_reg: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Per-instance multinomial logistic loss with L2, and its gradients.

    This is exactly the objective the SGD step descends, exposed so the
    gradient can be checked against finite differences.
    """
    scores = bias + weights[:, feature_cols] @ feature_vals
    probabilities = _softmax(scores)
    loss = -float(np.log(probabilities[label_index])) + 0.5 * l2_reg * float(
        (weights**2).sum()
    )
    delta = probabilities.copy()
    delta[label_index] -= 1.0
    grad_weights = l2_reg * weights
    grad_weights[:, feature_cols] += np.outer(delta, feature_vals)
    return loss, grad_weights, delta


class AscBaselineModel:
    """Bag-of-words multinomial logistic regression with context weighting."""

    task = TaskKind.ASC

    def __init__(
        self,
        features: Sequence[str],
        weights: np.ndarray,
        bias: np.ndarray,
        lcf: str,
        window: int,
        max_seq_len: int,
    ) -> None:
        self.features = tuple(features)
        self.feature_index = {name: i for i, name in enumerate(self.features)}
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.lcf = lcf
        self.window = window
        self.max_seq_len = max_seq_len
        if self.weights.shape != (len(LABELS), len(self.features)):
            raise ValueError("weight matrix shape inconsistent with vocabulary")
        if self.bias.shape != (len(LABELS),):
            raise ValueError("bias shape inconsistent with label count")

    def _vector(self, features: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
        cols, vals = [], []
        for name, value in sorted(features.items()):
            index = self.feature_index.get(name)
            if index is not None:
                cols.append(index)
                vals.append(value)
        return np.asarray(cols, dtype=np.intp), np.asarray(vals, dtype=np.float64)

    def scores(self, example: AbsaExample, span: AspectSpan) -> np.ndarray:
        if not self.features:
            raise VocabularyEmptyError("model has an empty vocabulary")
        cols, vals = self._vector(_featurize(example, span, self.lcf, self.window, self.max_seq_len))
        if cols.size == 0:
            return self.bias.copy()
        return self.bias + self.weights[:, cols] @ vals

    def predict(self, example: AbsaExample, span: AspectSpan) -> tuple[Polarity, float]:
        probabilities = _softmax(self.scores(example, span))
        best = int(np.argmax(probabilities))  # argmax takes the first max: tie order
        return LABELS[best], float(probabilities[best])

    def to_payload(self) -> tuple[dict[str, np.ndarray], dict]:
        tensors = {"weights": self.weights, "bias": self.bias}
        aux = {
            "features": list(self.features),
            "lcf": self.lcf,
            "window": self.window,
            "max_seq_len": self.max_seq_len,
        }
        return tensors, aux

    @classmethod
    def from_payload(cls, tensors: Mapping[str, np.ndarray], aux: dict) -> "AscBaselineModel":
        return cls(
            features=aux["features"],
            weights=tensors["weights"],
            bias=tensors["bias"],
            lcf=aux["lcf"],
            window=int(aux["window"]),
            max_seq_len=int(aux["max_seq_len"]),
        )


def predict_asc(model: AscBaselineModel, example: AbsaExample, span: AspectSpan) -> tuple[Polarity, float]:
    """Argmax polarity and softmax confidence; ties resolve to the first
    label in Negative < Neutral < Positive order."""
    return model.predict(example, span)


def _train_asc_model(
    config: RunConfig,
    train_instances: list[AscInstance],
    valid_instances: list[AscInstance],
    seed: int,
    lcf: str,
) -> tuple[AscBaselineModel, list[EvalResult], int]:
    if not train_instances:
        raise EmptyTrainSplitError("no training instances")
    vocabulary: dict[str, int] = {}
    featurized: list[tuple[dict[str, float], int]] = []
    for example, span in train_instances:
        features = _featurize(example, span, lcf, config.window, config.max_seq_len)
        for name in features:
            vocabulary.setdefault(name, len(vocabulary))
        featurized.append((features, LABELS.index(span.polarity)))
    names = tuple(sorted(vocabulary))
    index = {name: i for i, name in enumerate(names)}

    weights = np.zeros((len(LABELS), len(names)))
    bias = np.zeros(len(LABELS))
    rng = random.Random(seed)
    order = list(range(len(featurized)))
    lr, l2 = config.learning_rate, config.l2_reg

    history: list[EvalResult] = []
    best_epoch, best_score = 0, -1.0
    best_weights, best_bias = weights.copy(), bias.copy()

    for epoch in range(config.epochs):
        rng.shuffle(order)
        for position in order:
            features, label = featurized[position]
            cols = np.asarray([index[n] for n in sorted(features)], dtype=np.intp)
            vals = np.asarray([features[n] for n in sorted(features)], dtype=np.float64)
            scores = bias + weights[:, cols] @ vals
            delta = _softmax(scores)
            delta[label] -= 1.0
            if l2:
                weights *= 1.0 - lr * l2
            weights[:, cols] -= lr * np.outer(delta, vals)
            bias -= lr * delta
        model = AscBaselineModel(names, weights, bias, lcf, config.window, config.max_seq_len)
        result = evaluate_asc(model, valid_instances) if valid_instances else EvalResult(0.0, 0.0)
        history.append(result)
        score = result.selection_score(TaskKind.ASC)
        if score > best_score:
            best_epoch, best_score = epoch, score
            best_weights, best_bias = weights.copy(), bias.copy()

    model = AscBaselineModel(names, best_weights, best_bias, lcf, config.window, config.max_seq_len)
    return model, history, best_epoch


# ---------------------------------------------------------------------------
# ATESC sequence model

_TAGS = ("O", "B-ASP", "I-ASP")
_TAG_O, _TAG_B, _TAG_I = 0, 1, 2
_START = "<start>"
# O -> I-ASP (and start -> I-ASP) are impossible by construction
_ALLOWED_NEXT: dict[int | None, tuple[int, ...]] = {
    None: (_TAG_O, _TAG_B),
    _TAG_O: (_TAG_O, _TAG_B),
    _TAG_B: (_TAG_O, _TAG_B, _TAG_I),
    _TAG_I: (_TAG_O, _TAG_B, _TAG_I),
}


def _emission_features(tokens: Sequence[str], position: int) -> list[str]:
    token = tokens[position]
    previous = tokens[position - 1] if position > 0 else "<s>"
    following = tokens[position + 1] if position + 1 < len(tokens) else "</s>"
    return [f"w0={token}", f"low0={token.lower()}", f"w-1={previous}", f"w+1={following}", "bias"]


def _transition_feature(previous_tag: int | None) -> str:
    return f"T:{_START if previous_tag is None else _TAGS[previous_tag]}"


class AtescBaselineModel:
    """Averaged perceptron IOB tagger with an inner ASC model for polarity."""

    task = TaskKind.ATESC

    def __init__(self, features: Sequence[str], weights: np.ndarray, asc_model: AscBaselineModel) -> None:
        self.features = tuple(features)
        self.feature_index = {name: i for i, name in enumerate(self.features)}
        self.weights = np.asarray(weights, dtype=np.float64)
        self.asc_model = asc_model
        if self.weights.shape != (len(self.features), len(_TAGS)):
            raise ValueError("weight matrix shape inconsistent with feature count")

    def _score_row(self, feature_names: Sequence[str]) -> np.ndarray:
        row = np.zeros(len(_TAGS))
        for name in feature_names:
            index = self.feature_index.get(name)
            if index is not None:
                row += self.weights[index]
        return row

    def decode(self, tokens: Sequence[str]) -> list[int]:
        """Constrained Viterbi; the decoded sequence is always IOB-valid."""
        if not tokens:
            return []
        emissions = [self._score_row(_emission_features(tokens, i)) for i in range(len(tokens))]
        transitions = {
            previous: self._score_row([_transition_feature(previous)])
            for previous in (None, _TAG_O, _TAG_B, _TAG_I)
        }
        scores = np.full((len(tokens), len(_TAGS)), -np.inf)
        back = np.zeros((len(tokens), len(_TAGS)), dtype=int)
        for tag in _ALLOWED_NEXT[None]:
            scores[0, tag] = emissions[0][tag] + transitions[None][tag]
        for position in range(1, len(tokens)):
            for previous in range(len(_TAGS)):
                if scores[position - 1, previous] == -np.inf:
                    continue
                for tag in _ALLOWED_NEXT[previous]:
                    candidate = (
                        scores[position - 1, previous]
                        + emissions[position][tag]
                        + transitions[previous][tag]
                    )
                    if candidate > scores[position, tag]:
                        scores[position, tag] = candidate
                        back[position, tag] = previous
        tag = int(np.argmax(scores[-1]))
        path = [tag]
        for position in range(len(tokens) - 1, 0, -1):
            tag = int(back[position, tag])
            path.append(tag)
        path.reverse()
        return path

    def predict(self, tokens: Sequence[str]) -> AbsaExample:
        return self.predict_with_confidence(tokens)[0]

    def predict_with_confidence(
        self, tokens: Sequence[str]
    ) -> tuple[AbsaExample, list[float]]:
        tags = self.decode(tokens)
        spans: list[AspectSpan] = []
        confidences: list[float] = []
        position = 0
        while position < len(tags):
            if tags[position] == _TAG_B:
                end = position
                while end + 1 < len(tags) and tags[end + 1] == _TAG_I:
                    end += 1
                bare = AspectSpan(position, end, Polarity.NEUTRAL)
                example = AbsaExample(tuple(tokens), (bare,))
                if self.asc_model.features:
                    polarity, confidence = self.asc_model.predict(example, example.spans[0])
                else:  # inner model saw no labeled spans: uniform fallback
                    polarity, confidence = Polarity.NEUTRAL, 1.0 / len(LABELS)
                spans.append(AspectSpan(position, end, polarity))
                confidences.append(confidence)
                position = end + 1
            else:
                position += 1
        return AbsaExample(tuple(tokens), tuple(spans)), confidences

    def to_payload(self) -> tuple[dict[str, np.ndarray], dict]:
        asc_tensors, asc_aux = self.asc_model.to_payload()
        tensors = {"weights": self.weights}
        tensors.update({f"asc.{name}": tensor for name, tensor in asc_tensors.items()})
        return tensors, {"features": list(self.features), "asc": asc_aux}

    @classmethod
    def from_payload(cls, tensors: Mapping[str, np.ndarray], aux: dict) -> "AtescBaselineModel":
        asc_tensors = {
            name[len("asc.") :]: tensor for name, tensor in tensors.items() if name.startswith("asc.")
        }
        return cls(
            features=aux["features"],
            weights=tensors["weights"],
            asc_model=AscBaselineModel.from_payload(asc_tensors, aux["asc"]),
        )


def predict_atesc(model: AtescBaselineModel, tokens: Sequence[str]) -> AbsaExample:
    """Decode spans and classify each span's polarity; the output is always
    a valid example."""
    return model.predict(tokens)


def _gold_tags(example: AbsaExample) -> list[int]:
    tags = [_TAG_O] * len(example.tokens)
    for span in example.spans:
        tags[span.start] = _TAG_B
        for position in range(span.start + 1, span.end + 1):
            tags[position] = _TAG_I
    return tags


def _train_atesc_model(
    config: RunConfig,
    train_examples: list[AbsaExample],
    valid_examples: list[AbsaExample],
    seed: int,
) -> tuple[AtescBaselineModel, list[EvalResult], int]:
    if not train_examples:
        raise EmptyTrainSplitError("no training examples")

    train_spans = asc_instances(train_examples)
    if train_spans:
        asc_model, _, _ = _train_asc_model(config, train_spans, [], seed, config.lcf)
    else:
        asc_model = AscBaselineModel(
            (), np.zeros((len(LABELS), 0)), np.zeros(len(LABELS)),
            config.lcf, config.window, config.max_seq_len,
        )

    vocabulary: dict[str, int] = {}
    for example in train_examples:
        for position in range(len(example.tokens)):
            for name in _emission_features(example.tokens, position):
                vocabulary.setdefault(name, len(vocabulary))
    for previous in (None, _TAG_O, _TAG_B, _TAG_I):
        vocabulary.setdefault(_transition_feature(previous), len(vocabulary))
    names = tuple(sorted(vocabulary))
    index = {name: i for i, name in enumerate(names)}

    weights = np.zeros((len(names), len(_TAGS)))
    totals = np.zeros_like(weights)
    stamps = np.zeros_like(weights)
    step = 0

    def bump(name: str, tag: int, amount: float) -> None:
        i = index[name]
        totals[i, tag] += (step - stamps[i, tag]) * weights[i, tag]
        stamps[i, tag] = step
        weights[i, tag] += amount

    def averaged() -> np.ndarray:
        if step == 0:
            return weights.copy()
        return (totals + (step - stamps) * weights) / step

    rng = random.Random(seed)
    order = list(range(len(train_examples)))
    history: list[EvalResult] = []
    best_epoch, best_score = 0, -1.0
    best_weights = averaged()

    for epoch in range(config.epochs):
        rng.shuffle(order)
        for position in order:
            example = train_examples[position]
            if not example.tokens:
                continue
            step += 1
            gold = _gold_tags(example)
            live = AtescBaselineModel(names, weights, asc_model)
            predicted = live.decode(example.tokens)
            if predicted == gold:
                continue
            previous_gold: int | None = None
            previous_pred: int | None = None
            for i, (gold_tag, pred_tag) in enumerate(zip(gold, predicted)):
                if gold_tag != pred_tag:
                    for name in _emission_features(example.tokens, i):
                        bump(name, gold_tag, +1.0)
                        bump(name, pred_tag, -1.0)
                if (previous_gold, gold_tag) != (previous_pred, pred_tag):
                    bump(_transition_feature(previous_gold), gold_tag, +1.0)
                    bump(_transition_feature(previous_pred), pred_tag, -1.0)
                previous_gold, previous_pred = gold_tag, pred_tag
        snapshot = AtescBaselineModel(names, averaged(), asc_model)
        result = (
            evaluate_atesc(snapshot, valid_examples) if valid_examples else EvalResult(0.0, 0.0, 0.0)
        )
        history.append(result)
        score = result.selection_score(TaskKind.ATESC)
        if score > best_score:
            best_epoch, best_score = epoch, score
            best_weights = averaged()

    model = AtescBaselineModel(names, best_weights, asc_model)
    return model, history, best_epoch


# ---------------------------------------------------------------------------
# evaluation


def _macro_f1(pairs: list[tuple[Polarity, Polarity | None]]) -> float:
    """Unweighted mean of per-label F1 over labels present in gold."""
    gold_labels = sorted({gold for gold, _ in pairs}, key=lambda p: p.order)
    if not gold_labels:
        return 0.0
    scores = []
    for label in gold_labels:
        tp = sum(1 for gold, pred in pairs if gold == label and pred == label)
        fp = sum(1 for gold, pred in pairs if gold != label and pred == label)
        fn = sum(1 for gold, pred in pairs if gold == label and pred != label)
        scores.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
    return sum(scores) / len(scores)


def evaluate_asc(model: AscBaselineModel, corpus_or_instances) -> EvalResult:
    instances = (
        corpus_or_instances
        if corpus_or_instances and isinstance(corpus_or_instances[0], tuple)
        else asc_instances(corpus_or_instances)
    )
    if not instances:
        raise EmptyCorpusError("cannot evaluate on an empty corpus")
    pairs: list[tuple[Polarity, Polarity | None]] = []
    for example, span in instances:
        predicted, _ = model.predict(example, span)
        pairs.append((span.polarity, predicted))
    accuracy = sum(1 for gold, pred in pairs if gold == pred) / len(pairs)
    return EvalResult(acc_asc=accuracy, f1_asc=_macro_f1(pairs))


def evaluate_atesc(model: AtescBaselineModel, corpus: Sequence[AbsaExample]) -> EvalResult:
    if not corpus:
        raise EmptyCorpusError("cannot evaluate on an empty corpus")
    tp = fp = fn = 0
    pairs: list[tuple[Polarity, Polarity | None]] = []
    for example in corpus:
        predicted = model.predict(example.tokens)
        gold_spans = {(s.start, s.end): s.polarity for s in example.spans}
        pred_spans = {(s.start, s.end): s.polarity for s in predicted.spans}
        matched = gold_spans.keys() & pred_spans.keys()
        tp += len(matched)
        fp += len(pred_spans.keys() - gold_spans.keys())
        fn += len(gold_spans.keys() - pred_spans.keys())
        for key in matched:
            pairs.append((gold_spans[key], pred_spans[key]))
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    if tp + fp + fn == 0:
        f1_ate = 1.0  # vacuously perfect: nothing to find, nothing found
    else:
        f1_ate = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    accuracy = sum(1 for gold, pred in pairs if gold == pred) / len(pairs) if pairs else 0.0
    return EvalResult(acc_asc=accuracy, f1_asc=_macro_f1(pairs) if pairs else 0.0, f1_ate=f1_ate)


def evaluate(model, corpus) -> EvalResult:
    """Exact-label accuracy, macro-F1 over gold labels, and span-exact-match
    F1 (ATESC); invariant under corpus permutation."""
    if isinstance(model, AtescBaselineModel):
        return evaluate_atesc(model, corpus)
    return evaluate_asc(model, corpus)


# ---------------------------------------------------------------------------
# training driver


@dataclass
class TrainResult:
    model: object
    series: list[TrialSeries]
    best_epoch: int
    best: EvalResult
    test: EvalResult | None = None


def _carve_validation(items: list, seed: int) -> tuple[list, list]:
    """Hold out 10% (at least one item) of train as validation."""
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    held = max(1, len(items) // 10)
    held_idx = set(order[:held])
    train = [items[i] for i in range(len(items)) if i not in held_idx]
    valid = [items[i] for i in range(len(items)) if i in held_idx]
    return train, valid


def resolve_model(model_id: str) -> tuple[TaskKind, str | None]:
    if model_id not in MODEL_IDS:
        raise UnknownModelError(f"unknown model id {model_id!r}")
    return MODEL_IDS[model_id]


def model_class(model_id: str):
    task, _ = resolve_model(model_id)
    return AscBaselineModel if task is TaskKind.ASC else AtescBaselineModel


def train(config: RunConfig, splits: Mapping[str, Corpus], seed: int | None = None) -> TrainResult:
    """Train the configured model; per-epoch validation metrics are recorded
    and the best-validation model is returned.

    A dataset without a validation split gets a 10% seeded holdout carved
    from train (never from test).
    """
    if seed is None:
        seed = config.seeds[0]
    task, forced_lcf = resolve_model(config.model_id)
    if task is not config.task:
        raise UnknownModelError(
            f"model {config.model_id!r} serves task {task.value}, config says {config.task.value}"
        )
    lcf = forced_lcf or config.lcf

    train_items = list(splits.get("train", []))
    if not train_items:
        raise EmptyTrainSplitError("train split is empty")
    valid_items = list(splits.get("valid", []))
    if not valid_items:
        train_items, valid_items = _carve_validation(train_items, seed)
        if not train_items:  # single-example corpus: validate on it too
            train_items = list(valid_items)

    if task is TaskKind.ASC:
        model, history, best_epoch = _train_asc_model(
            config, asc_instances(train_items), asc_instances(valid_items), seed, lcf
        )
    else:
        examples = [
            triple_to_example(item) if isinstance(item, AscTriple) else item
            for item in train_items
        ]
        valid_examples = [
            triple_to_example(item) if isinstance(item, AscTriple) else item
            for item in valid_items
        ]
        model, history, best_epoch = _train_atesc_model(config, examples, valid_examples, seed)

    trial_name = f"{config.model_id}-seed{seed}"
    series = [
        TrialSeries(trial_name, "Acc", tuple(r.acc_asc for r in history)),
        TrialSeries(trial_name, "F1_ASC", tuple(r.f1_asc for r in history)),
    ]
    if task is TaskKind.ATESC:
        series.append(
            TrialSeries(trial_name, "F1_ATE", tuple(r.f1_ate or 0.0 for r in history))
        )
    best = history[best_epoch] if history else EvalResult(0.0, 0.0)
    test_result = None
    test_items = list(splits.get("test", []))
    if test_items:
        test_result = evaluate(model, test_items if task is TaskKind.ASC else [
            triple_to_example(item) if isinstance(item, AscTriple) else item for item in test_items
        ])
    return TrainResult(model=model, series=series, best_epoch=best_epoch, best=best, test=test_result)
