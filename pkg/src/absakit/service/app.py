"""FastAPI service wrapping the toolkit: annotation sessions plus
conversion, validation, inference, checkpoint listing, training, and
report rendering endpoints.

File paths inside requests (datasets, report dirs) refer to the service
host's filesystem; the CLI runs this app in-process by default, so they are
local paths there.  CORS is open for the annotation UI, which is served
under ``/ui`` when a build directory is available.
"""

from __future__ import annotations

import contextlib
import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

import absakit
from absakit import annotation as ann
from absakit import augment as aug
from absakit import checkpoints as ckpt
from absakit import corpus
from absakit import datasets as ds
from absakit import ensembles as ens
from absakit import metrics as mx
from absakit import svgplot
from absakit import training
from absakit.config import TaskKind, apply_overrides, check, defaults
from absakit.service import schemas


@dataclass
class ServiceSettings:
    cache_root: Path
    hub_url: str | None = None
    ui_dir: Path | None = None

    @classmethod
    def from_env(cls) -> "ServiceSettings":
        cache = Path(os.environ.get("ABSAKIT_CACHE", "~/.cache/absakit")).expanduser()
        ui = os.environ.get("ABSAKIT_UI_DIR")
        return cls(
            cache_root=cache,
            hub_url=os.environ.get("ABSAKIT_HUB_URL") or None,
            ui_dir=Path(ui) if ui else None,
        )

    @property
    def checkpoints_dir(self) -> Path:
        return self.cache_root / "checkpoints"

    @property
    def datasets_dir(self) -> Path:
        return self.cache_root / "datasets"

    @property
    def sessions_dir(self) -> Path:
        return self.cache_root / "sessions"


def build_registry(settings: ServiceSettings) -> ds.DatasetRegistry:
    """Builtin catalog plus whatever sits in the dataset cache; cached files
    attach to the matching builtin handle when names agree."""
    registry = ds.seed_builtin(ds.DatasetRegistry())
    root = settings.datasets_dir
    if not root.is_dir():
        return registry
    for task_dir in sorted(root.iterdir()):
        try:
            task = TaskKind.parse(task_dir.name)
        except ValueError:
            continue
        for directory in sorted(task_dir.iterdir()):
            if not directory.is_dir():
                continue
            handle = ds.discover_dataset_dir(directory, task)
            if handle.name in registry:
                existing = registry.lookup(handle.name)
                if not any(existing.splits.values()):
                    existing.splits = handle.splits
                    existing.aug_files = handle.aug_files
                    existing.task = task
                    existing.origin = str(directory)
            else:
                registry.register(handle)
    return registry


def _resolve_dataset(spec: str, task: TaskKind, registry: ds.DatasetRegistry) -> ds.DatasetHandle:
    path = Path(spec)
    if path.is_dir():
        return ds.discover_dataset_dir(path, task)
    if spec in registry:
        return registry.lookup(spec)
    # unresolved: empty handle so the trial fails with attribution, not the grid
    return ds.DatasetHandle(id=-1, name=spec, language="unknown", task=task)


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings.from_env()
    store = ann.SessionStore(settings.sessions_dir)

    @contextlib.asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        store.snapshot_all()  # journal stays authoritative; snapshots aid inspection

    app = FastAPI(title="absakit service", version=absakit.__version__, lifespan=lifespan)
    app.state.settings = settings
    app.state.sessions = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # most specific class wins (starlette walks the exception's MRO)
    _STATUS_BY_ERROR = {
        ann.UnknownSessionError: 404,
        ckpt.NotFoundError: 404,
        ds.UnknownDatasetError: 404,
        ann.VersionConflictError: 409,
        ann.InvalidSpanError: 422,
        ann.AnnotationError: 400,
        ckpt.CheckpointError: 400,
        ds.DatasetError: 400,
        training.TrainingError: 400,
        ens.EnsembleError: 400,
        ValueError: 400,  # corpus/config/metrics/plot/augment errors
    }

    def _register_error(exc_class, status: int) -> None:
        @app.exception_handler(exc_class)
        async def handler(request: Request, exc: Exception, status=status):
            return JSONResponse(status_code=status, content={"detail": str(exc)})

    for exc_class, status in _STATUS_BY_ERROR.items():
        _register_error(exc_class, status)

    # -- health -------------------------------------------------------------

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": absakit.__version__}

    # -- annotation sessions -------------------------------------------------

    @app.post("/sessions", response_model=schemas.SessionCreateResponse, status_code=201)
    def create_session(request: schemas.SessionCreateRequest):
        if not request.text.strip():
            return JSONResponse(status_code=400, content={"detail": "empty corpus upload"})
        session = store.create(request.text)
        return {"session_id": session.session_id, "sentences": len(session.sentences)}

    @app.get("/sessions/{session_id}", response_model=schemas.SessionSummary)
    def session_summary(session_id: str):
        return store.get(session_id).counts()

    @app.get("/sessions/{session_id}/sentences", response_model=schemas.SentencePage)
    def session_sentences(session_id: str, cursor: int = 0, limit: int = 50):
        session = store.get(session_id)
        window = session.sentences[cursor : cursor + limit]
        sentences = [state.to_dict(cursor + offset) for offset, state in enumerate(window)]
        next_cursor = cursor + limit if cursor + limit < len(session.sentences) else None
        return {"sentences": sentences, "next_cursor": next_cursor}

    @app.put(
        "/sessions/{session_id}/sentences/{index}/spans",
        response_model=schemas.VersionResponse,
    )
    def put_span(session_id: str, index: int, request: schemas.SpanPutRequest):
        session = store.get(session_id)
        mark = len(session.journal)
        version = session.put_span(
            index,
            request.start,
            request.end,
            corpus.Polarity.parse(request.polarity),
            expected_version=request.version,
        )
        store.append_events(session, mark)
        return {"version": version}

    @app.put(
        "/sessions/{session_id}/sentences/{index}/proposals",
        response_model=schemas.VersionResponse,
    )
    def resolve_proposal(session_id: str, index: int, request: schemas.ProposalActionRequest):
        session = store.get(session_id)
        mark = len(session.journal)
        version = session.resolve_proposal(
            index,
            request.start,
            request.end,
            accept=request.action == "accept",
            expected_version=request.version,
        )
        store.append_events(session, mark)
        return {"version": version}

    @app.post("/sessions/{session_id}/autolabel", response_model=schemas.AutolabelResponse)
    def autolabel(session_id: str, request: schemas.AutolabelRequest):
        session = store.get(session_id)
        predictor = ckpt.load_predictor(
            request.checkpoint,
            store_dirs=[settings.checkpoints_dir],
            hub_url=settings.hub_url,
            expected_task=TaskKind.ATESC,
        )
        mark = len(session.journal)
        added = session.autolabel(predictor)
        store.append_events(session, mark)
        return {"proposals_added": added}

    @app.get("/sessions/{session_id}/export", response_class=PlainTextResponse)
    def export_session(
        session_id: str,
        kind: str = Query("atesc"),
        include_proposals: bool = False,
    ):
        session = store.get(session_id)
        return session.export(corpus.EncodingKind.parse(kind), include_proposals)

    # -- corpus operations -----------------------------------------------------

    @app.post("/convert", response_model=schemas.ConvertResponse)
    def convert(request: schemas.ConvertRequest):
        return {
            "text": corpus.convert_document(
                request.text,
                corpus.EncodingKind.parse(request.from_kind),
                corpus.EncodingKind.parse(request.to_kind),
            )
        }

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate_document(request: schemas.ValidateRequest):
        report = corpus.validate(request.text, corpus.EncodingKind.parse(request.kind))
        return report.to_dict()

    # -- inference / checkpoints -------------------------------------------------

    def _build_predictor(names: list[str], numeric_agg: str, weights):
        predictors = [
            ckpt.load_predictor(
                name, store_dirs=[settings.checkpoints_dir], hub_url=settings.hub_url
            )
            for name in names
        ]
        if len(predictors) == 1 and weights is None:
            return predictors[0]
        return ens.VoteEnsemblePredictor(predictors, weights=weights, numeric_agg=numeric_agg)

    @app.post("/infer", response_model=schemas.InferResponse)
    def infer(request: schemas.InferRequest):
        if not request.checkpoints:
            return JSONResponse(status_code=400, content={"detail": "no checkpoint given"})
        predictor = _build_predictor(request.checkpoints, request.numeric_agg, request.weights)
        results = []
        for text in request.texts:
            try:
                prediction = predictor.predict_text(text)
                results.append({"text": text, "prediction": prediction.to_dict()})
            except (corpus.CorpusParseError, ckpt.PredictorInputError) as err:
                if not request.ignore_error:
                    return JSONResponse(
                        status_code=400,
                        content={"detail": f"invalid input {text!r}: {err}"},
                    )
                results.append({"text": text, "error": str(err)})
        return {"results": results}

    @app.get("/checkpoints", response_model=schemas.CheckpointsResponse)
    def list_checkpoints(task: str | None = None):
        listing = ckpt.available_checkpoints(
            task, [settings.checkpoints_dir], hub_url=settings.hub_url
        )
        rows = [
            {
                "name": meta.name,
                "task_code": meta.task_code,
                "model_id": meta.model_id,
                "metrics": meta.metrics,
                "digest": meta.digest,
                "created_at": meta.created_at,
                "remote": meta.remote,
            }
            for _, meta in sorted(listing.items())
        ]
        return {"checkpoints": rows}

    # -- datasets ---------------------------------------------------------------

    @app.get("/datasets", response_model=schemas.DatasetsResponse)
    def list_datasets():
        registry = build_registry(settings)
        rows = [
            {
                "id": handle.id,
                "name": handle.name,
                "language": handle.language,
                "task": handle.task.value,
                "has_files": any(handle.splits.values()),
                "adversarial": handle.adversarial,
            }
            for handle in registry.handles()
        ]
        return {"datasets": rows}

    @app.post("/datasets/fetch", response_model=schemas.FetchResponse)
    def fetch_datasets(request: schemas.FetchRequest):
        registry = ds.DatasetRegistry()
        result = ds.fetch(request.manifest_url, settings.datasets_dir, registry)
        return {
            "registered": [handle.name for handle in result.registered],
            "downloads": result.downloads,
        }

    # -- training -----------------------------------------------------------------

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_grid(request: schemas.TrainRequest):
        task = TaskKind.parse(request.task)
        config = defaults(task)
        config = apply_overrides(config, request.overrides)
        if request.load_aug:
            config = dataclasses.replace(config, load_aug=True)
        if request.seeds:
            config = dataclasses.replace(config, seeds=tuple(request.seeds))
        diagnostics = check(config)
        if diagnostics:
            rendered = [str(d) for d in diagnostics]
            return JSONResponse(
                status_code=400,
                content={
                    "detail": "config check failed: " + "; ".join(rendered),
                    "diagnostics": rendered,
                },
            )
        registry = build_registry(settings)
        handles = [_resolve_dataset(spec, task, registry) for spec in request.datasets]
        if request.combine and len(handles) > 1:
            handles = [ds.combine(handles)]
        models = request.models or [config.model_id]
        recorder = mx.MetricRecorder()
        outcomes = ens.ensemble_train(
            config,
            models,
            handles,
            list(config.seeds),
            recorder=recorder,
            store_dir=settings.checkpoints_dir if request.save_checkpoints else None,
        )
        report_files: list[str] = []
        report_dir = request.report_dir
        if report_dir and not recorder.empty:
            report_files = [str(p) for p in svgplot.render(recorder, report_dir)]
        return {
            "trials": [outcome.to_dict() for outcome in outcomes],
            "failures": sum(1 for outcome in outcomes if not outcome.ok),
            "report_dir": report_dir,
            "report_files": report_files,
        }

    # -- augmentation / reports -----------------------------------------------------

    @app.post("/augment", response_model=schemas.AugmentResponse)
    def augment_dataset(request: schemas.AugmentRequest):
        task = TaskKind.parse(request.task)
        registry = build_registry(settings)
        handle = _resolve_dataset(request.dataset, task, registry)
        policy = aug.AugmentPolicy(
            multiplier=request.multiplier,
            ops=tuple(request.ops),
            rate=request.rate,
            seed=request.seed,
        )
        lexicon = aug.load_lexicon(request.lexicon) if request.lexicon else None
        base = ds.load(handle)["train"]
        augmented = aug.augment(base, policy, lexicon)
        files = aug.write_aug_files(handle, augmented)
        return {"files": [str(p) for p in files], "examples": len(augmented)}

    @app.post("/report", response_model=schemas.ReportResponse)
    def render_report(request: schemas.ReportRequest):
        recorder = mx.import_table(request.values_csv)
        files = svgplot.render(
            recorder,
            request.out_dir,
            kinds=request.kinds or svgplot.PLOT_KINDS,
            no_overlap=request.no_overlap,
            alpha=request.alpha,
        )
        return {"files": [str(p) for p in files]}

    # -- static UI -------------------------------------------------------------

    ui_dir = settings.ui_dir
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
