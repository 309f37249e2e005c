"""
Tests for the veriprop command-line interface.
"""
import json

import pytest

from app.cli.main import main
from app.middleware.error_handler import EXIT_DATA, EXIT_OK, EXIT_USAGE

SUMMARY_FILES = ["p0000.summary.json", "p0001.summary.json"]


@pytest.fixture(autouse=True)
def testing_environment(monkeypatch):
    monkeypatch.setenv("ENVIRONMENT", "testing")


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def write_batch(tmp_path, ehr_text):
    summaries, records = tmp_path / "s", tmp_path / "e"
    summaries.mkdir()
    records.mkdir()
    summary = {"doc_id": "a", "kind": "summary", "text": "Fever on day 2."}
    write_json(summaries / "a.json", summary)
    write_json(records / "a.json", {"doc_id": "b", "kind": "ehr", "text": ehr_text})
    return summaries, records


def gen_corpus(out, seed="1", docs="1"):
    return main(["gen-corpus", "--seed", seed, "--docs", docs, "-o", str(out)])


@pytest.fixture
def pair(tmp_path):
    summary = write_json(
        tmp_path / "summary.json",
        {
            "doc_id": "s1",
            "kind": "summary",
            "text": "Creatinine 1.2 mg/dL on day 2. Antibiotics were not prescribed.",
        },
    )
    ehr = write_json(
        tmp_path / "ehr.json",
        {
            "doc_id": "e1",
            "kind": "ehr",
            "structured": [
                {
                    "entity": "creatinine",
                    "attribute": "lab_value",
                    "value": "2.1",
                    "unit": "mg/dL",
                    "time": "day 2",
                },
                {"entity": "antibiotics", "attribute": "treatment", "time": "day 1"},
            ],
        },
    )
    return summary, ehr


def test_extract(pair, tmp_path):
    summary, _ = pair
    out = tmp_path / "props.json"
    assert main(["extract", summary, "-o", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["doc_id"] == "s1"
    assert [p["entity"] for p in data["propositions"]] == ["creatinine", "antibiotics"]
    assert data["propositions"][1]["negated"] is True


def test_extract_to_stdout(pair, capsys):
    summary, _ = pair
    assert main(["extract", summary]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["kind"] == "summary"


def test_verify_single_pair(pair, tmp_path):
    summary, ehr = pair
    out = tmp_path / "report.json"
    argv = ["verify", "--summary", summary, "--ehr", ehr, "-o", str(out)]
    assert main(argv) == EXIT_OK
    report = json.loads(out.read_text())
    creatinine, antibiotics = report["verdicts"]
    assert creatinine["failure_codes"] == ["NUMERICAL_FAIL"]
    assert antibiotics["failure_codes"] == ["NEGATION_FAIL"]
    assert report["omissions"] == []
    assert report["params"]["tau_match"] == 0.5


def test_verify_flags_override_settings(pair, tmp_path):
    summary, ehr = pair
    out = tmp_path / "report.json"
    argv = [
        "verify",
        "--summary",
        summary,
        "--ehr",
        ehr,
        "--tau-num",
        "0.5",
        "-o",
        str(out),
    ]
    assert main(argv) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["params"]["tau_num"] == 0.5
    assert report["verdicts"][0]["failure_codes"] == []


def test_corpus_round_trip(tmp_path, capsys):
    """Generate a faithful bundle, verify it and score it."""
    bundle = tmp_path / "bundle"
    reports = tmp_path / "reports"
    argv = ["--workers", "2", "gen-corpus", "--seed", "9", "--docs", "2"]
    assert main(argv + ["-o", str(bundle)]) == EXIT_OK
    assert sorted(p.name for p in (bundle / "summary").iterdir()) == SUMMARY_FILES

    argv = [
        "verify",
        "--summary-dir",
        str(bundle / "summary"),
        "--ehr-dir",
        str(bundle / "ehr"),
        "-o",
        str(reports),
    ]
    assert main(argv) == EXIT_OK
    assert sorted(p.name for p in reports.iterdir()) == SUMMARY_FILES

    metrics_file = tmp_path / "metrics.json"
    evaluate = ["evaluate", "--report", str(reports), "--gold", str(bundle / "gold")]
    assert main(evaluate + ["-o", str(metrics_file)]) == EXIT_OK
    metrics = json.loads(metrics_file.read_text())
    assert metrics["confusion"]["tp"] > 0
    assert metrics["confusion"]["fp"] == 0
    assert metrics["confusion"]["fn"] == 0

    capsys.readouterr()
    assert main(evaluate + ["--format", "table"]) == EXIT_OK
    assert capsys.readouterr().out.split()[:2] == ["metric", "value"]


def test_gen_corpus_with_faults(tmp_path):
    plan = write_json(
        tmp_path / "faults.json",
        {"faults": [{"kind": "fabrication", "rate": "0.1"}]},
    )
    bundle = tmp_path / "bundle"
    argv = ["gen-corpus", "--seed", "3", "--docs", "1", "--faults", plan]
    assert main(argv + ["-o", str(bundle)]) == EXIT_OK
    manifest = json.loads((bundle / "manifest.json").read_text())
    assert manifest["faults"][0]["kind"] == "fabrication"
    gold = json.loads((bundle / "gold" / "p0000.summary.json").read_text())
    assert any(label["codes"] == ["NO_EVIDENCE"] for label in gold["labels"])


def test_evaluate_single_files(tmp_path, capsys):
    report = write_json(
        tmp_path / "report.json",
        {
            "doc_id": "s",
            "verdicts": [
                {"id": ["s", 0], "label": "Supported", "confidence": 0.9},
                {"id": ["s", 1], "label": "NotSupported", "confidence": 0.2},
            ],
        },
    )
    gold = write_json(
        tmp_path / "gold.json",
        {
            "labels": [
                {"id": ["s", 1], "gold": "Supported"},
                {"id": ["s", 0], "gold": "Supported"},
            ],
        },
    )
    assert main(["evaluate", "--report", report, "--gold", gold]) == EXIT_OK
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["confusion"] == {"tp": 1, "fp": 0, "fn": 1, "tn": 0}
    assert "specificity" in metrics["degenerate"]


def test_lora_demo(tmp_path):
    out = tmp_path / "trace.json"
    checkpoint = tmp_path / "adapter.bin"
    argv = [
        "lora-demo",
        *("--d", "8", "--k", "8", "--r", "4", "--alpha", "16"),
        *("--steps", "20", "--lr", "0.05"),
        *("--checkpoint", str(checkpoint), "--checkpoint-format", "binary"),
        *("-o", str(out)),
    ]
    assert main(argv) == EXIT_OK
    trace = json.loads(out.read_text())
    assert set(trace) == {
        "params",
        "param_counts",
        "losses",
        "initial_loss",
        "final_loss",
        "base_unchanged",
        "warnings",
    }
    assert len(trace["losses"]) == 20
    assert trace["final_loss"] < trace["initial_loss"]
    assert trace["base_unchanged"] is True
    assert trace["param_counts"] == {
        "full": 64,
        "lora": 64,
        "ratio": 1.0,
        "reduction": 0.0,
    }
    assert trace["warnings"] == []
    assert checkpoint.read_bytes()[:4] == b"LORA"


def test_lora_demo_warns_outside_recommended_ranges(capsys):
    assert main(["lora-demo", "--r", "2", "--alpha", "64", "--steps", "1"]) == EXIT_OK
    assert len(json.loads(capsys.readouterr().out)["warnings"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["verify", "--summary", "only.json"],
        ["verify"],
        ["lora-demo", "--d", "4", "--k", "4", "--r", "5"],
        ["lora-demo", "--lr", "-1"],
        [
            *("gen-corpus", "--seed", "1", "--docs", "1"),
            *("--min-props", "20", "--max-props", "10", "-o", "unused"),
        ],
        ["--config", "no-such.env", "extract", "doc.json"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_USAGE


def test_data_errors_exit_2(tmp_path, capsys):
    assert main(["extract", str(tmp_path / "missing.json")]) == EXIT_DATA

    broken = tmp_path / "broken.json"
    broken.write_text('{\n  "doc_id": "x",\n  "kind": \n}', encoding="utf-8")
    capsys.readouterr()
    assert main(["extract", str(broken)]) == EXIT_DATA
    assert f"{broken}:4" in capsys.readouterr().err

    empty = write_json(
        tmp_path / "empty.json", {"doc_id": "x", "kind": "ehr", "text": ""}
    )
    assert main(["extract", empty]) == EXIT_DATA

    unknown = write_json(
        tmp_path / "unknown.json", {"doc_id": "x", "kind": "letter", "text": "fever"}
    )
    assert main(["extract", unknown]) == EXIT_DATA


def test_failed_batch_leaves_no_output(tmp_path):
    summaries, records = write_batch(tmp_path, "   ")
    out = tmp_path / "reports"
    argv = ["verify", "--summary-dir", str(summaries), "--ehr-dir", str(records)]
    assert main(argv + ["-o", str(out)]) == EXIT_DATA
    assert not out.exists()


def test_gen_corpus_refuses_foreign_directory(tmp_path):
    out = tmp_path / "results"
    out.mkdir()
    (out / "notes.txt").write_text("keep me", encoding="utf-8")
    assert gen_corpus(out) == EXIT_USAGE
    assert [p.name for p in out.iterdir()] == ["notes.txt"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["results"]


def test_gen_corpus_replaces_previous_bundle(tmp_path):
    out = tmp_path / "bundle"
    assert gen_corpus(out, seed="1", docs="2") == EXIT_OK
    assert gen_corpus(out, seed="2", docs="1") == EXIT_OK
    assert json.loads((out / "manifest.json").read_text())["seed"] == "2"
    summaries = sorted(p.name for p in (out / "summary").iterdir())
    assert summaries == ["p0000.summary.json"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bundle"]


def test_verify_does_not_overwrite_its_inputs(tmp_path):
    summaries, records = write_batch(tmp_path, "Fever on day 2.")
    before = (summaries / "a.json").read_text()
    argv = ["verify", "--summary-dir", str(summaries), "--ehr-dir", str(records)]
    assert main(argv + ["-o", str(summaries)]) == EXIT_USAGE
    assert (summaries / "a.json").read_text() == before


@pytest.mark.parametrize("target", [".", "./", "sub/.."])
def test_working_directory_is_not_an_output(target, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "sub").mkdir()
    assert gen_corpus(target) == EXIT_USAGE
    assert sorted(p.name for p in tmp_path.iterdir()) == ["sub"]


def test_output_path_that_is_a_file(tmp_path):
    out = tmp_path / "report.json"
    out.write_text("{}", encoding="utf-8")
    assert gen_corpus(out) == EXIT_USAGE
    assert out.read_text() == "{}"
