"""Command-line entry point: train, infer, convert, validate, augment,
report, annotate, checkpoints.

Every command except ``annotate`` is a thin client over the HTTP service
API, executed in-process by default (``--server``/``ABSAKIT_SERVER``
switches to a remote service).  Output is JSON lines when stdout is piped;
human tables appear only on a terminal.  Exit codes: 0 success, 1
operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from absakit.client import ClientError, ServiceClient
from absakit.config import load_config
from absakit.service import ServiceSettings

_EXIT_OK = 0
_EXIT_FAILURE = 1
_EXIT_USAGE = 2


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _fail(message: str) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return _EXIT_FAILURE


def _table(rows: list[dict], columns: list[str]) -> None:
    widths = {c: max(len(c), *(len(str(r.get(c, ""))) for r in rows)) for c in columns}
    print("  ".join(c.ljust(widths[c]) for c in columns))
    for row in rows:
        print("  ".join(str(row.get(c, "")).ljust(widths[c]) for c in columns))


def _human() -> bool:
    return sys.stdout.isatty()


def _settings(args) -> ServiceSettings:
    settings = ServiceSettings.from_env()
    if getattr(args, "cache", None):
        settings.cache_root = Path(args.cache).expanduser()
    if getattr(args, "hub_url", None):
        settings.hub_url = args.hub_url
    return settings


def _client(args) -> ServiceClient:
    return ServiceClient(server=getattr(args, "server", None), settings=_settings(args))


def _split_csv(value: str | None) -> list[str]:
    if not value:
        return []
    return [part.strip() for part in value.split(",") if part.strip()]


def _collect_overrides(args) -> dict[str, str]:
    overrides: dict[str, str] = {}
    if getattr(args, "config", None):
        config, warnings = load_config(args.config)
        for warning in warnings:
            print(warning, file=sys.stderr)
        for key, value in config.to_dict().items():
            overrides[key] = ",".join(map(str, value)) if isinstance(value, list) else str(value)
    for pair in args.set or []:
        if "=" not in pair:
            raise ClientError(400, f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        overrides[key.strip()] = value.strip()
    return overrides


# -- commands ----------------------------------------------------------------


def cmd_train(args) -> int:
    overrides = _collect_overrides(args)
    body = {
        "task": args.task,
        "models": _split_csv(args.model),
        "datasets": _split_csv(args.dataset),
        "overrides": overrides,
        "load_aug": args.load_aug,
        "combine": args.combine,
        "report_dir": args.report_dir,
        "save_checkpoints": not args.no_save,
    }
    if args.seeds:
        body["seeds"] = [int(s) for s in _split_csv(args.seeds)]
    response = _client(args).call("POST", "/train", json=body)
    for trial in response["trials"]:
        _emit(trial)
    if response.get("report_dir"):
        _emit({"report_dir": response["report_dir"]})
    if response["trials"] and response["failures"] == len(response["trials"]):
        return _fail("every trial failed")
    return _EXIT_OK


def cmd_infer(args) -> int:
    if bool(args.text) == bool(args.file):
        raise ClientError(400, "exactly one of --text/--file is required")
    if args.file:
        texts = [line for line in Path(args.file).read_text(encoding="utf-8").splitlines() if line.strip()]
    else:
        texts = list(args.text)
    client = _client(args)
    batch = max(1, args.batch_size)
    for start in range(0, len(texts), batch):
        chunk = texts[start : start + batch]
        response = client.call(
            "POST",
            "/infer",
            json={
                "checkpoints": _split_csv(args.checkpoint),
                "texts": chunk,
                "ignore_error": args.ignore_error,
                "numeric_agg": args.numeric_agg,
            },
        )
        for result in response["results"]:
            if result.get("error"):
                print(
                    json.dumps({"skipped": result["text"], "reason": result["error"]}),
                    file=sys.stderr,
                )
                continue
            prediction = result["prediction"]
            _emit({"text": result["text"], **prediction})
    return _EXIT_OK


def cmd_convert(args) -> int:
    text = Path(args.infile).read_text(encoding="utf-8")
    response = _client(args).call(
        "POST",
        "/convert",
        json={"text": text, "from_kind": args.from_kind, "to_kind": args.to_kind},
    )
    if args.out and args.out != "-":
        Path(args.out).write_text(response["text"], encoding="utf-8")
    else:
        sys.stdout.write(response["text"])
    return _EXIT_OK


def cmd_validate(args) -> int:
    text = Path(args.infile).read_text(encoding="utf-8")
    report = _client(args).call("POST", "/validate", json={"text": text, "kind": args.kind})
    if _human():
        print(
            f"examples: {report['examples']}  spans: {report['spans']}  "
            f"polarities: {report['polarities']}"
        )
        for diagnostic in report["diagnostics"]:
            print(f"  line {diagnostic['line']}: [{diagnostic['code']}] {diagnostic['message']}")
    else:
        _emit({"file": str(args.infile), **report})
    return _EXIT_OK


def cmd_augment(args) -> int:
    response = _client(args).call(
        "POST",
        "/augment",
        json={
            "dataset": args.dataset,
            "task": args.task,
            "multiplier": args.multiplier,
            "ops": _split_csv(args.ops),
            "rate": args.rate,
            "seed": args.seed,
            "lexicon": args.lexicon,
        },
    )
    _emit(response)
    return _EXIT_OK


def cmd_report(args) -> int:
    response = _client(args).call(
        "POST",
        "/report",
        json={
            "values_csv": args.values,
            "out_dir": args.out,
            "kinds": _split_csv(args.kinds) or None,
            "no_overlap": args.no_overlap,
            "alpha": args.alpha,
        },
    )
    _emit(response)
    return _EXIT_OK


def cmd_checkpoints(args) -> int:
    params = {"task": args.task.upper()} if args.task else {}
    response = _client(args).call("GET", "/checkpoints", params=params)
    rows = response["checkpoints"]
    if _human():
        if not rows:
            print("no checkpoints")
        else:
            for row in rows:
                row["where"] = "remote" if row["remote"] else "local"
                row["metrics"] = json.dumps(row["metrics"], sort_keys=True)
            _table(rows, ["name", "task_code", "model_id", "metrics", "where"])
    else:
        for row in rows:
            _emit(row)
    return _EXIT_OK


def cmd_annotate(args) -> int:
    import uvicorn

    from absakit.service import create_app

    settings = _settings(args)
    if args.ui_dir:
        settings.ui_dir = Path(args.ui_dir)
    app = create_app(settings)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return _EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="absakit",
        description="Aspect-based sentiment analysis toolkit",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", help="remote service URL (default: run in-process)")
    common.add_argument("--cache", help="cache root (default: $ABSAKIT_CACHE or ~/.cache/absakit)")
    common.add_argument("--hub-url", help="checkpoint/dataset hub manifest URL")

    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train", parents=[common], help="train models over dataset/seed grids")
    p.add_argument("--task", required=True, choices=["asc", "atesc"])
    p.add_argument("--dataset", required=True, help="comma-separated dataset dirs or names")
    p.add_argument("--model", help="comma-separated model ids (default per task)")
    p.add_argument("--seeds", help="comma-separated integer seeds")
    p.add_argument("--load-aug", action="store_true", help="append augmentation files to train")
    p.add_argument("--combine", action="store_true", help="combine datasets into one pile")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
    p.add_argument("--config", help="config file (key=value or JSON)")
    p.add_argument("--report-dir", default="reports", help="metric report output directory")
    p.add_argument("--no-save", action="store_true", help="skip checkpoint saving")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", parents=[common], help="predict on text or a file")
    p.add_argument(
        "--checkpoint",
        "--checkpoints",
        dest="checkpoint",
        required=True,
        help="checkpoint name(s), comma-separated for ensembles",
    )
    p.add_argument("--text", action="append", help="input sentence (repeatable)")
    p.add_argument("--file", help="file with one input per line")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--ignore-error", action="store_true", help="skip unparsable lines with a warning")
    p.add_argument("--numeric-agg", default="mean", choices=["mean", "median", "min", "max"])
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("convert", parents=[common], help="convert a corpus between encodings")
    p.add_argument("--from", dest="from_kind", required=True, choices=["asc", "atesc", "spantag"])
    p.add_argument("--to", dest="to_kind", required=True, choices=["asc", "atesc", "spantag"])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", parents=[common], help="validate a corpus file")
    p.add_argument("--kind", required=True, choices=["asc", "atesc", "spantag"])
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("augment", parents=[common], help="write augmentation files for a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--task", required=True, choices=["asc", "atesc"])
    p.add_argument("--multiplier", type=int, default=2)
    p.add_argument("--ops", default="synonym_swap,random_swap")
    p.add_argument("--rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--lexicon", help="tab-separated synonym sets file")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("report", parents=[common], help="render SVG/CSV metric reports")
    p.add_argument("--values", required=True, help="values.csv produced by training/export")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--kinds", help="comma-separated subset of box,violin,scatter,trajectory,sk,a12")
    p.add_argument("--no-overlap", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("annotate", parents=[common], help="run the annotation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui-dir", help="static UI build directory to serve under /ui")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("checkpoints", parents=[common], help="list available checkpoints")
    p.add_argument("--task", choices=["asc", "ate", "atesc"])
    p.set_defaults(func=cmd_checkpoints)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ClientError as err:
        return _fail(str(err.detail) if not isinstance(err.detail, str) else err.detail)
    except OSError as err:
        return _fail(str(err))


if __name__ == "__main__":
    sys.exit(main())
