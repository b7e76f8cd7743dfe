"""Command-line interface.

Verbs mirror the model-build pipeline (fetch_labels, extract, cv_train,
test_model, model_info, audit, build) plus `serve` for the HTTP service and
`metrics` for a plain-text counter dump from a running server.

Exit codes: 0 ok, 1 domain error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import signal
import sys

from .datasources import FIXTURES_ENV_VAR, FixtureClient
from .engine import ScoringEngine
from .errors import WikiscoreError
from .features.graph import EMPTY_OVERLAY, InjectionOverlay
from .modelstore import ModelRegistry, load, model_info
from .pipeline import (
    build_manifest,
    cv_train,
    extract_features,
    fetch_labels,
    labels_from_traces,
)
from .pipeline.extract import dataset_to_labeled, read_dataset
from .reports import render_histogram_figure, write_histogram_table
from .runtime.precache import PrecacheConfig, open_event_source
from .service import ScoreService
from .stats import compute_statistics

AUDIT_RUNS = {
    "natural": {},
    "everyone-anon": {"revision.user.is_anon": "true"},
    "everyone-newcomer": {
        "revision.user.is_anon": "false",
        "revision.user.account_age_seconds": "0",
    },
}


def _parse_param_value(raw: str):
    try:
        return json.loads(raw)
    except ValueError:
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
            return raw[1:-1]
        return raw


def _parse_assignments(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise WikiscoreError(f"expected key=value, got {pair!r}")
        out[key] = _parse_param_value(value)
    return out


def _add_fixtures_flag(parser):
    parser.add_argument(
        "--fixtures",
        default=None,
        help=f"fixture directory (default: ${FIXTURES_ENV_VAR})",
    )


def cmd_fetch_labels(args) -> int:
    if args.traces:
        if not (args.campaign and args.label_set):
            raise WikiscoreError("--traces needs --campaign and --label-set")
        header, count = labels_from_traces(
            args.source, args.campaign, json.loads(args.label_set), args.out
        )
    else:
        header, count = fetch_labels(args.source, args.out)
    print(
        f"wrote {count} labels for campaign {header.campaign_id!r} "
        f"({header.source}) to {args.out}"
    )
    return 0


def cmd_extract(args) -> int:
    client_dir = FixtureClient.from_env(args.fixtures).fixture_dir
    report = extract_features(
        args.labels, args.feature_set, client_dir, args.out,
        failure_tolerance=args.tolerance,
    )
    print(
        f"extracted {report.extracted} rows "
        f"({report.reused} reused, {len(report.skipped)} skipped) to {args.out}"
    )
    for rev_id, message in report.skipped:
        print(f"  skipped rev {rev_id}: {message}", file=sys.stderr)
    return 0


def cmd_cv_train(args) -> int:
    model = cv_train(
        args.dataset,
        args.estimator,
        args.feature_set,
        args.model_name,
        version=args.version,
        hyperparameters=_parse_assignments(args.param),
        label_weights=_parse_assignments(args.label_weight) or None,
        population_rates=_parse_assignments(args.pop_rate) or None,
        center=args.center,
        scale=args.scale,
        folds=args.folds,
        seed=args.seed,
        out_path=args.out,
    )
    info = model.info()
    summary = {
        "type": info["type"],
        "version": info["version"],
        "params": info["params"],
        "counts": info["statistics"]["counts"],
        "precision": info["statistics"]["precision"],
        "recall": info["statistics"]["recall"],
        "pr_auc": info["statistics"]["pr_auc"],
        "roc_auc": info["statistics"]["roc_auc"],
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        print(f"wrote model to {args.out}", file=sys.stderr)
    return 0


def cmd_test_model(args) -> int:
    model = load(args.model)
    dataset = dataset_to_labeled(args.dataset)
    if dataset.feature_names != model.features:
        raise WikiscoreError("dataset features do not match the model's feature set")
    scored = model.estimator.predict_proba_many(dataset.feature_matrix)
    statistics = compute_statistics(
        list(zip(scored, dataset.labels)), model.label_set
    )
    doc = statistics.to_doc()
    doc.pop("thresholds")
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_model_info(args) -> int:
    document = model_info(load(args.model), args.field_path)
    print(json.dumps(document, indent=2, sort_keys=True))
    return 0


def _audit_revision_ids(args) -> list[int]:
    if args.revids:
        return [int(r) for r in args.revids.split(",") if r]
    if args.dataset:
        _, rows = read_dataset(args.dataset)
        return [row["rev_id"] for row in rows]
    raise WikiscoreError("give --revids or --dataset")


def cmd_audit(args) -> int:
    model = load(args.model)
    registry = ModelRegistry()
    registry.put(model)
    client = FixtureClient.from_env(args.fixtures)
    engine = ScoringEngine(registry, client)
    raw_overlay = dict(AUDIT_RUNS[args.run])
    raw_overlay.update(_parse_assignments(args.set))
    overlay = (
        InjectionOverlay.build(model.build_graph(), raw_overlay)
        if raw_overlay
        else EMPTY_OVERLAY
    )
    target_label = None
    if args.target_label is not None:
        target_label = _parse_param_value(args.target_label)
    summary = engine.audit_inject(
        model.context,
        model.name,
        _audit_revision_ids(args),
        overlay=overlay,
        target_label=target_label,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            write_histogram_table(summary, handle, delimiter=args.delimiter)
    else:
        write_histogram_table(summary, sys.stdout, delimiter=args.delimiter)
    if args.plot:
        render_histogram_figure(
            {args.run: summary}, args.plot,
            title=f"{model.name} p({summary.target_label})",
        )
        print(f"wrote figure to {args.plot}", file=sys.stderr)
    return 0


def cmd_build(args) -> int:
    summary = build_manifest(args.manifest, force=args.force, log=print)
    built = sum(1 for row in summary if row["status"] == "built")
    print(f"{built} built, {len(summary) - built} up-to-date")
    return 0


def cmd_serve(args) -> int:
    registry = ModelRegistry()
    count = registry.load_directory(args.models_dir)
    client = FixtureClient.from_env(args.fixtures, simulated_latency=args.latency)
    service = ScoreService(
        registry,
        client,
        cache_capacity=args.cache_capacity,
        io_workers=args.io_workers,
        cpu_workers=args.cpu_workers,
        timeout=args.timeout,
    )
    precacher = None
    if args.precache_source:
        if not args.precache_config:
            raise WikiscoreError("--precache-source needs --precache-config")
        with open(args.precache_config, encoding="utf-8") as handle:
            config = PrecacheConfig.from_doc(json.load(handle))
        config.validate(registry)
        precacher = service.start_precacher(
            open_event_source(args.precache_source), config
        )
    server = service.make_http_server(port=args.port)
    host, port = server.server_address[:2]
    print(f"serving {count} models on http://{host}:{port}", file=sys.stderr)

    def stop(*_):
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, stop)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
        if precacher is not None:
            precacher.stop()
        service.close()
    return 0


def cmd_metrics(args) -> int:
    from urllib.request import urlopen

    with urlopen(args.url.rstrip("/") + "/metrics") as response:
        sys.stdout.write(response.read().decode("utf-8"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wikiscore",
        description="Train, version, serve, and audit revision scoring models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch_labels", help="validate and normalize a label file")
    p.add_argument("source", help="label file path or file:// URL")
    p.add_argument("--out", required=True)
    p.add_argument("--traces", action="store_true",
                   help="treat the source as an assessment-events file")
    p.add_argument("--campaign", help="campaign id for --traces")
    p.add_argument("--label-set", help="JSON list of labels for --traces")
    p.set_defaults(func=cmd_fetch_labels)

    p = sub.add_parser("extract", help="extract features for labeled revisions")
    p.add_argument("--labels", required=True)
    p.add_argument("--feature-set", required=True)
    _add_fixtures_flag(p)
    p.add_argument("--out", required=True)
    p.add_argument("--tolerance", type=float, default=0.1,
                   help="max fraction of rows allowed to fail (default 0.1)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("cv_train", help="cross-validate, train, and serialize a model")
    p.add_argument("dataset")
    p.add_argument("estimator", choices=("linear_logistic", "gradient_boosting"))
    p.add_argument("feature_set")
    p.add_argument("model_name")
    p.add_argument("--version", required=True)
    p.add_argument("-p", "--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--label-weight", action="append", metavar="LABEL=WEIGHT")
    p.add_argument("--pop-rate", action="append", metavar="LABEL=RATE")
    p.add_argument("--center", action="store_true")
    p.add_argument("--scale", action="store_true")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv_train)

    p = sub.add_parser("test_model", help="evaluate a model file against a dataset")
    p.add_argument("model")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_test_model)

    p = sub.add_parser("model_info", help="print a model's info document")
    p.add_argument("model")
    p.add_argument("field_path", nargs="?", default=None)
    p.set_defaults(func=cmd_model_info)

    p = sub.add_parser("audit", help="score a revision set under an injection overlay")
    p.add_argument("model")
    _add_fixtures_flag(p)
    p.add_argument("--dataset", help="dataset/label file supplying rev_ids")
    p.add_argument("--revids", help="comma-separated revision ids")
    p.add_argument("--run", choices=sorted(AUDIT_RUNS), default="natural")
    p.add_argument("--set", action="append", metavar="NAME=VALUE",
                   help="inject a feature or datasource value")
    p.add_argument("--target-label", default=None)
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--plot", help="also render the histogram to this image file")
    p.add_argument("--delimiter", default="\t")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("build", help="build every stale target in a manifest")
    p.add_argument("manifest")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("serve", help="run the scoring HTTP service")
    p.add_argument("--port", type=int, default=8080)
    _add_fixtures_flag(p)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--cache-capacity", type=int, default=10_000)
    p.add_argument("--io-workers", type=int, default=4)
    p.add_argument("--cpu-workers", type=int, default=4)
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--latency", type=float, default=0.0,
                   help="simulated datasource latency in seconds")
    p.add_argument("--precache-source",
                   help="event stream: a file path, '-', or tcp://host:port")
    p.add_argument("--precache-config",
                   help="JSON file: context -> model -> [event types]")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("metrics", help="dump counters from a running server")
    p.add_argument("url", help="base URL, e.g. http://127.0.0.1:8080")
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WikiscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
