from __future__ import annotations

import json
from pathlib import Path

import pytest

from wikiscore.cli import main
from wikiscore.errors import (
    MalformedLabelRecord,
    PipelineError,
    TooFewExamplesPerClass,
    UnknownLabel,
)
from wikiscore.modelstore import load
from wikiscore.pipeline import (
    build_manifest,
    cv_train,
    extract_features,
    fetch_labels,
    labels_from_traces,
    read_label_file,
)
from wikiscore.pipeline.extract import read_dataset
from wikiscore.reports import parse_histogram_table

from conftest import CONTEXT, FIXTURES_DIR, write_tmp_manifest

DAMAGING_LABELS = FIXTURES_DIR / f"{CONTEXT}.damaging.labels.ndjson"
DAMAGING_FEATURES = FIXTURES_DIR / f"{CONTEXT}.damaging.features.json"


def write_labels(path: Path, records, label_set=(False, True), source="manual_campaign"):
    header = {
        "campaign_id": "c1",
        "label_set": list(label_set),
        "source": source,
    }
    lines = [json.dumps(header)] + [json.dumps(r) for r in records]
    path.write_text("\n".join(lines) + "\n")
    return path


def label_records(count, start=10001):
    _, records = read_label_file(DAMAGING_LABELS)
    by_id = {r["rev_id"]: r for r in records}
    return [by_id[start + i] for i in range(count)]


# -- fetch_labels -------------------------------------------------------------

def test_fetch_labels_valid_campaign(tmp_path):
    out = tmp_path / "labels.ndjson"
    header, count = fetch_labels(DAMAGING_LABELS, out)
    assert count == 1200
    assert header.label_set == (False, True)
    reread_header, reread = read_label_file(out)
    assert len(reread) == count
    assert reread_header == header


def test_fetch_labels_accepts_file_url(tmp_path):
    out = tmp_path / "labels.ndjson"
    _, count = fetch_labels(f"file://{DAMAGING_LABELS}", out)
    assert count == 1200


def test_fetch_labels_duplicate_rev_id_names_both_lines(tmp_path):
    source = write_labels(
        tmp_path / "dup.ndjson",
        [
            {"rev_id": 1, "label": True, "context": CONTEXT},
            {"rev_id": 2, "label": False, "context": CONTEXT},
            {"rev_id": 1, "label": False, "context": CONTEXT},
        ],
    )
    with pytest.raises(MalformedLabelRecord) as exc_info:
        fetch_labels(source, tmp_path / "out.ndjson")
    message = str(exc_info.value)
    assert "line 4" in message and "line 2" in message


def test_fetch_labels_unknown_label(tmp_path):
    source = write_labels(
        tmp_path / "bad.ndjson",
        [{"rev_id": 1, "label": "maybe", "context": CONTEXT}],
    )
    with pytest.raises(UnknownLabel):
        fetch_labels(source, tmp_path / "out.ndjson")


def test_fetch_labels_malformed_record_carries_line(tmp_path):
    path = tmp_path / "broken.ndjson"
    path.write_text(
        json.dumps(
            {"campaign_id": "c", "label_set": [True, False], "source": "manual_campaign"}
        )
        + "\nnot json\n"
    )
    with pytest.raises(MalformedLabelRecord) as exc_info:
        fetch_labels(path, tmp_path / "out.ndjson")
    assert exc_info.value.line_number == 2


def test_labels_from_traces_latest_event_wins(tmp_path):
    events = [
        {"rev_id": 5, "context": CONTEXT, "assessment": "Stub"},
        {"rev_id": 6, "context": CONTEXT, "assessment": "Start"},
        {"rev_id": 5, "context": CONTEXT, "assessment": "B"},
    ]
    events_path = tmp_path / "events.ndjson"
    events_path.write_text("\n".join(json.dumps(e) for e in events) + "\n")
    out = tmp_path / "labels.ndjson"
    header, count = labels_from_traces(events_path, "tc", ["Stub", "Start", "B"], out)
    assert header.source == "trace_extraction"
    assert count == 2
    _, records = read_label_file(out)
    assert {r["rev_id"]: r["label"] for r in records} == {5: "B", 6: "Start"}


# -- extract ------------------------------------------------------------------

def test_extract_produces_one_row_per_label(tmp_path):
    labels = write_labels(tmp_path / "l.ndjson", label_records(100))
    out = tmp_path / "dataset.ndjson"
    report = extract_features(labels, DAMAGING_FEATURES, FIXTURES_DIR, out)
    assert (report.total, report.extracted, report.reused) == (100, 100, 0)
    header, rows = read_dataset(out)
    assert len(rows) == 100
    assert len(header["feature_names"]) == 12
    assert all(len(row["features"]) == 12 for row in rows)


def test_extract_is_resumable(tmp_path):
    out = tmp_path / "dataset.ndjson"
    labels_50 = write_labels(tmp_path / "l50.ndjson", label_records(50))
    extract_features(labels_50, DAMAGING_FEATURES, FIXTURES_DIR, out)
    labels_100 = write_labels(tmp_path / "l100.ndjson", label_records(100))
    report = extract_features(labels_100, DAMAGING_FEATURES, FIXTURES_DIR, out)
    assert report.reused == 50
    assert report.extracted == 50
    _, rows = read_dataset(out)
    assert len(rows) == 100


def test_extract_recomputes_when_label_changes(tmp_path):
    out = tmp_path / "dataset.ndjson"
    records = label_records(20)
    extract_features(
        write_labels(tmp_path / "a.ndjson", records),
        DAMAGING_FEATURES,
        FIXTURES_DIR,
        out,
    )
    flipped = [dict(records[0], label=not records[0]["label"])] + records[1:]
    report = extract_features(
        write_labels(tmp_path / "b.ndjson", flipped),
        DAMAGING_FEATURES,
        FIXTURES_DIR,
        out,
    )
    assert report.reused == 19
    assert report.extracted == 1
    _, rows = read_dataset(out)
    assert rows[0]["label"] == flipped[0]["label"]


def test_extract_fails_beyond_missing_tolerance(tmp_path):
    records = label_records(85) + [
        {"rev_id": 90_000_000 + i, "label": False, "context": CONTEXT}
        for i in range(15)
    ]
    labels = write_labels(tmp_path / "l.ndjson", records)
    out = tmp_path / "dataset.ndjson"
    with pytest.raises(PipelineError):
        extract_features(labels, DAMAGING_FEATURES, FIXTURES_DIR, out)
    report = extract_features(
        labels, DAMAGING_FEATURES, FIXTURES_DIR, out, failure_tolerance=0.2
    )
    assert len(report.skipped) == 15
    assert report.extracted == 85


# -- cv_train -----------------------------------------------------------------

@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("dataset")
    labels = write_labels(tmp / "l.ndjson", label_records(120))
    out = tmp / "dataset.ndjson"
    extract_features(labels, DAMAGING_FEATURES, FIXTURES_DIR, out)
    return out


def test_cv_train_flags_echoed_in_model_info(small_dataset, tmp_path):
    out = tmp_path / "m.model"
    exit_code = main(
        [
            "cv_train",
            str(small_dataset),
            "gradient_boosting",
            str(DAMAGING_FEATURES),
            "damaging",
            "--version", "0.4.0",
            "-p", "learning_rate=0.01",
            "-p", "max_depth=7",
            "-p", 'max_features="log2"',
            "-p", "n_estimators=12",
            "--label-weight", "true=1.0",
            "--pop-rate", "true=0.4",
            "--pop-rate", "false=0.6",
            "--center",
            "--scale",
            "--folds", "3",
            "--seed", "5",
            "--out", str(out),
        ]
    )
    assert exit_code == 0
    model = load(out)
    params = model.info()["params"]
    assert params["learning_rate"] == 0.01
    assert params["max_depth"] == 7
    assert params["max_features"] == "log2"
    assert params["n_estimators"] == 12
    assert params["label_weights"] == {"true": 1.0}
    assert params["population_rates"] == {"true": 0.4, "false": 0.6}
    assert params["center"] is True and params["scale"] is True
    assert model.version == "0.4.0"


def test_cv_train_deterministic_bytes(small_dataset, tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.model"
        cv_train(
            small_dataset,
            "gradient_boosting",
            DAMAGING_FEATURES,
            "damaging",
            version="0.1.0",
            hyperparameters={"n_estimators": 8},
            folds=3,
            seed=99,
            out_path=out,
        )
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_cv_train_too_few_examples_per_class(small_dataset, tmp_path):
    with pytest.raises(TooFewExamplesPerClass):
        cv_train(
            small_dataset,
            "linear_logistic",
            DAMAGING_FEATURES,
            "damaging",
            version="0.1.0",
            folds=200,
        )


# -- build --------------------------------------------------------------------

def small_manifest_doc(n_estimators=8, folds=3):
    return {
        "fixtures": "fixtures",
        "targets": [
            {
                "name": "damaging",
                "labels": "fixtures/testwiki.damaging.labels.ndjson",
                "feature_set": "fixtures/testwiki.damaging.features.json",
                "estimator": "gradient_boosting",
                "version": "0.4.0",
                "hyperparameters": {"n_estimators": n_estimators, "max_depth": 3},
                "folds": folds,
                "seed": 42,
            },
            {
                "name": "damaging_linear",
                "labels": "fixtures/testwiki.damaging.labels.ndjson",
                "feature_set": "fixtures/testwiki.damaging.features.json",
                "estimator": "linear_logistic",
                "version": "0.2.0",
                "hyperparameters": {"iterations": 150},
                "folds": folds,
                "seed": 7,
            },
            {
                "name": "articlequality",
                "labels": "fixtures/testwiki.articlequality.labels.ndjson",
                "feature_set": "fixtures/testwiki.articlequality.features.json",
                "estimator": "gradient_boosting",
                "version": "0.1.0",
                "hyperparameters": {"n_estimators": n_estimators, "max_depth": 3},
                "folds": folds,
                "seed": 11,
            },
        ],
    }


def test_build_manifest_and_incremental_rebuild(tmp_path):
    manifest = write_tmp_manifest(tmp_path, small_manifest_doc())
    summary = build_manifest(manifest)
    assert [row["status"] for row in summary] == ["built"] * 3
    models_dir = tmp_path / "models"
    files = sorted(p.name for p in models_dir.glob("*.model"))
    assert files == [
        "testwiki.articlequality.gradient_boosting.model",
        "testwiki.damaging.gradient_boosting.model",
        "testwiki.damaging_linear.linear_logistic.model",
    ]
    # Nothing changed: everything is up-to-date.
    summary = build_manifest(manifest)
    assert [row["status"] for row in summary] == ["up-to-date"] * 3


def test_build_rebuilds_only_dependents_of_changed_labels(tmp_path):
    doc = small_manifest_doc()
    manifest = write_tmp_manifest(tmp_path, doc)
    # Point the articlequality target at a private copy of its labels.
    manifest_doc = json.loads(manifest.read_text())
    quality_labels = tmp_path / "quality.labels.ndjson"
    quality_labels.write_text(
        Path(manifest_doc["targets"][2]["labels"]).read_text()
    )
    manifest_doc["targets"][2]["labels"] = str(quality_labels)
    manifest.write_text(json.dumps(manifest_doc))

    build_manifest(manifest)
    before = {
        path.name: path.read_bytes() for path in (tmp_path / "models").glob("*.model")
    }

    lines = quality_labels.read_text().splitlines()
    record = json.loads(lines[1])
    record["label"] = "B" if record["label"] != "B" else "Start"
    lines[1] = json.dumps(record)
    quality_labels.write_text("\n".join(lines) + "\n")

    summary = build_manifest(manifest)
    statuses = {row["name"]: row["status"] for row in summary}
    assert statuses == {
        "damaging": "up-to-date",
        "damaging_linear": "up-to-date",
        "articlequality": "built",
    }
    after = {
        path.name: path.read_bytes() for path in (tmp_path / "models").glob("*.model")
    }
    unchanged = [name for name in before if before[name] == after[name]]
    assert sorted(unchanged) == [
        "testwiki.damaging.gradient_boosting.model",
        "testwiki.damaging_linear.linear_logistic.model",
    ]


def test_build_aborts_on_first_failing_target(tmp_path):
    doc = small_manifest_doc()
    doc["targets"][0]["estimator"] = "linear_logistic"
    doc["targets"][0]["hyperparameters"] = {"learning_rate": 1e10, "l2": 1.0}
    manifest = write_tmp_manifest(tmp_path, doc)
    with pytest.raises(PipelineError) as exc_info:
        build_manifest(manifest)
    assert "damaging" in str(exc_info.value)
    assert not (tmp_path / "models" / "testwiki.damaging.gradient_boosting.model").exists()


# -- CLI round trips ----------------------------------------------------------

def test_cli_audit_writes_table_and_figure(built_models_dir, tmp_path, capsys):
    model_path = built_models_dir / "testwiki.damaging.gradient_boosting.model"
    table_path = tmp_path / "audit.tsv"
    figure_path = tmp_path / "audit.png"
    revids = ",".join(str(10001 + i) for i in range(40))
    exit_code = main(
        [
            "audit",
            str(model_path),
            "--fixtures", str(FIXTURES_DIR),
            "--revids", revids,
            "--run", "everyone-anon",
            "--target-label", "true",
            "--out", str(table_path),
            "--plot", str(figure_path),
        ]
    )
    assert exit_code == 0
    table = parse_histogram_table(table_path.read_text())
    assert len(table["bins"]) == 50
    assert sum(count for _, _, count in table["bins"]) == 40
    assert table["scored"] == 40
    assert figure_path.exists() and figure_path.stat().st_size > 0


def test_cli_audit_stdout_and_overlay_flags(built_models_dir, capsys):
    model_path = built_models_dir / "testwiki.damaging.gradient_boosting.model"
    exit_code = main(
        [
            "audit",
            str(model_path),
            "--fixtures", str(FIXTURES_DIR),
            "--revids", "10001,10002,10003",
            "--set", "feature.revision.user.is_anon=true",
            "--target-label", "true",
        ]
    )
    assert exit_code == 0
    table = parse_histogram_table(capsys.readouterr().out)
    assert table["scored"] == 3


def test_cli_model_info_field_path(built_models_dir, capsys):
    model_path = built_models_dir / "testwiki.damaging.gradient_boosting.model"
    assert main(["model_info", str(model_path), "statistics.counts.n"]) == 0
    assert json.loads(capsys.readouterr().out) == 1200


def test_cli_test_model(built_models_dir, small_dataset, capsys):
    model_path = built_models_dir / "testwiki.damaging.gradient_boosting.model"
    assert main(["test_model", str(model_path), "--dataset", str(small_dataset)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["counts"]["n"] == 120
    assert 0.0 <= doc["roc_auc"]["macro"] <= 1.0


def test_cli_domain_error_exit_code(tmp_path, capsys):
    assert main(["model_info", str(tmp_path / "missing.model")]) == 1


def test_cli_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc_info:
        main(["cv_train"])  # missing required arguments
    assert exc_info.value.code == 2


def test_cli_fetch_labels_roundtrip(tmp_path, capsys):
    out = tmp_path / "out.ndjson"
    assert main(["fetch_labels", str(DAMAGING_LABELS), "--out", str(out)]) == 0
    assert "1200 labels" in capsys.readouterr().out


def test_cli_audit_newcomer_preset(built_models_dir, capsys):
    model_path = built_models_dir / "testwiki.damaging_linear.linear_logistic.model"
    exit_code = main(
        [
            "audit",
            str(model_path),
            "--fixtures", str(FIXTURES_DIR),
            "--revids", "10001,10002,10003,10004",
            "--run", "everyone-newcomer",
            "--target-label", "true",
        ]
    )
    assert exit_code == 0
    table = parse_histogram_table(capsys.readouterr().out)
    assert table["scored"] == 4


def test_boosting_deviance_non_increasing_on_fixture_data(small_dataset):
    from wikiscore.estimators import EstimatorParams, train
    from wikiscore.pipeline.extract import dataset_to_labeled

    data = dataset_to_labeled(small_dataset)
    model = train(
        data,
        EstimatorParams(
            estimator_kind="gradient_boosting",
            hyperparameters={"learning_rate": 0.1, "n_estimators": 30},
            center=True,
            scale=True,
            seed=1,
        ),
    )
    losses = model.training_loss()
    assert len(losses) == 31
    for before, after in zip(losses, losses[1:]):
        assert after <= before + 1e-12


def test_build_regenerates_deleted_intermediate(tmp_path):
    manifest = write_tmp_manifest(tmp_path, small_manifest_doc())
    build_manifest(manifest)
    datasets = sorted((tmp_path / "datasets").glob("*.ndjson"))
    victim = datasets[0]
    original = victim.read_bytes()
    victim.unlink()
    summary = build_manifest(manifest)
    assert any(row["status"] == "built" for row in summary)
    assert victim.read_bytes() == original


def test_clean_rebuild_matches_local_build(tmp_path):
    local = Path(__file__).resolve().parents[1] / "build" / "models"
    if not local.is_dir():
        pytest.skip("no local build to compare against (run: wikiscore build manifest.json)")
    manifest = write_tmp_manifest(tmp_path)
    build_manifest(manifest)
    for path in sorted((tmp_path / "models").glob("*.model")):
        rebuilt = load(path)
        reference = load(local / path.name)
        assert rebuilt.version == reference.version
        assert rebuilt.info()["statistics"] == reference.info()["statistics"]
        assert rebuilt.info()["params"] == reference.info()["params"]
