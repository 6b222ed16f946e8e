"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


# -- annotation sessions ----------------------------------------------------


class SessionCreateRequest(BaseModel):
    text: str = Field(description="plain text (one sentence per line) or spantag-encoded corpus")


class SessionCreateResponse(BaseModel):
    session_id: str
    sentences: int


class SpanOut(BaseModel):
    start: int
    end: int
    polarity: str


class ProposalOut(BaseModel):
    start: int
    end: int
    polarity: str
    confidence: float
    predictor: str


class SentenceOut(BaseModel):
    index: int
    tokens: list[str]
    confirmed: list[SpanOut]
    proposals: list[ProposalOut]
    version: int


class SentencePage(BaseModel):
    sentences: list[SentenceOut]
    next_cursor: Optional[int] = None


class SessionSummary(BaseModel):
    session_id: str
    sentences: int
    confirmed: int
    proposals: int


class SpanPutRequest(BaseModel):
    start: int
    end: int
    polarity: str
    version: int


class VersionResponse(BaseModel):
    version: int


class ProposalActionRequest(BaseModel):
    start: int
    end: int
    action: str = Field(pattern="^(accept|reject)$")
    version: int


class AutolabelRequest(BaseModel):
    checkpoint: str


class AutolabelResponse(BaseModel):
    proposals_added: int


# -- corpus operations ------------------------------------------------------


class ConvertRequest(BaseModel):
    text: str
    from_kind: str
    to_kind: str


class ConvertResponse(BaseModel):
    text: str


class ValidateRequest(BaseModel):
    text: str
    kind: str


class DiagnosticOut(BaseModel):
    line: Optional[int]
    code: str
    message: str


class ValidateResponse(BaseModel):
    diagnostics: list[DiagnosticOut]
    examples: int
    spans: int
    polarities: dict[str, int]


# -- inference / checkpoints --------------------------------------------------


class InferRequest(BaseModel):
    checkpoints: list[str]
    texts: list[str]
    ignore_error: bool = False
    numeric_agg: str = "mean"
    weights: Optional[list[float]] = None


class PredictedSpanOut(BaseModel):
    start: int
    end: int
    polarity: str
    confidence: float


class PredictionOut(BaseModel):
    tokens: list[str]
    spans: list[PredictedSpanOut]


class InferResult(BaseModel):
    text: str
    prediction: Optional[PredictionOut] = None
    error: Optional[str] = None


class InferResponse(BaseModel):
    results: list[InferResult]


class CheckpointOut(BaseModel):
    name: str
    task_code: str
    model_id: str
    metrics: dict
    digest: str
    created_at: str
    remote: bool


class CheckpointsResponse(BaseModel):
    checkpoints: list[CheckpointOut]


# -- datasets ------------------------------------------------------------


class DatasetOut(BaseModel):
    id: int
    name: str
    language: str
    task: str
    has_files: bool
    adversarial: bool


class DatasetsResponse(BaseModel):
    datasets: list[DatasetOut]


class FetchRequest(BaseModel):
    manifest_url: str


class FetchResponse(BaseModel):
    registered: list[str]
    downloads: int


# -- training -----------------------------------------------------------------


class TrainRequest(BaseModel):
    task: str
    models: list[str] = Field(default_factory=list)
    datasets: list[str]
    seeds: Optional[list[int]] = None
    overrides: dict[str, str] = Field(default_factory=dict)
    load_aug: bool = False
    combine: bool = False
    report_dir: Optional[str] = None
    save_checkpoints: bool = True


class TrialOut(BaseModel):
    model: str
    dataset: str
    seed: int
    metrics: Optional[dict] = None
    test_metrics: Optional[dict] = None
    checkpoint: Optional[str] = None
    error: Optional[str] = None


class TrainResponse(BaseModel):
    trials: list[TrialOut]
    failures: int
    report_dir: Optional[str] = None
    report_files: list[str] = Field(default_factory=list)


# -- augmentation / reports ---------------------------------------------------


class AugmentRequest(BaseModel):
    dataset: str
    task: str
    multiplier: int = 2
    ops: list[str] = Field(default_factory=lambda: ["synonym_swap", "random_swap"])
    rate: float = 0.1
    seed: int = 1
    lexicon: Optional[str] = None


class AugmentResponse(BaseModel):
    files: list[str]
    examples: int


class ReportRequest(BaseModel):
    values_csv: str
    out_dir: str
    kinds: Optional[list[str]] = None
    no_overlap: bool = False
    alpha: float = 0.05


class ReportResponse(BaseModel):
    files: list[str]
