import json

import numpy as np
import pytest

from gmtree.cli import EXIT_DATA, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main

from conftest import DATA_DIR

FIVEPOINT = str(DATA_DIR / "fivepoint.csv")
FIVEPOINT_SCHEMA = str(DATA_DIR / "fivepoint.schema.json")


@pytest.fixture
def fivepoint_model(tmp_path):
    out = tmp_path / "fivepoint.model.json"
    code = main(["train", "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA, "--alpha", "1", "--alpha", "1", "--out", str(out)])
    assert code == EXIT_OK
    return out


def test_train_prints_stats(tmp_path, capsys):
    out = tmp_path / "m.json"
    code = main(["train", "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA, "--alpha", "1", "--alpha", "1", "--out", str(out)])
    captured = capsys.readouterr().out
    assert code == EXIT_OK
    assert "depth=1" in captured and "leaves=2" in captured and "log_prob=" in captured
    assert out.exists()
    payload = json.loads(out.read_text())
    assert payload["kind"] == "tree"


def test_export_text_shows_root_rule(fivepoint_model, capsys):
    assert main(["export", "--model", str(fivepoint_model), "--format", "text"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "x <= 1.375" in out  # schema names the single feature "x"
    assert "0.8" in out and "0.25" in out


def test_predict_goldens(fivepoint_model, tmp_path, capsys):
    rows = tmp_path / "rows.csv"
    rows.write_text("0.7\n2.0\n")
    code = main(["predict", "--model", str(fivepoint_model), "--data", str(rows), "--schema", FIVEPOINT_SCHEMA])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split("\t") == ["0", "0.8", "0.2"]
    assert lines[1].split("\t") == ["1", "0.25", "0.75"]


def test_predict_explain_path(fivepoint_model, tmp_path, capsys):
    rows = tmp_path / "rows.csv"
    rows.write_text("0.7\n")
    main(["predict", "--model", str(fivepoint_model), "--data", str(rows), "--schema", FIVEPOINT_SCHEMA, "--explain"])
    out = capsys.readouterr().out
    assert "path: x <= 1.375: yes" in out


def test_predict_malformed_row_continues(fivepoint_model, tmp_path, capsys):
    rows = tmp_path / "rows.csv"
    rows.write_text("0.7\nbroken\n2.0\n")
    code = main(["predict", "--model", str(fivepoint_model), "--data", str(rows), "--schema", FIVEPOINT_SCHEMA])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("0\t")
    assert lines[1].startswith("row 2: error:")
    assert lines[2].startswith("1\t")


def test_predict_rows_with_target_column(fivepoint_model, capsys):
    # labelled files are accepted; the label column is ignored for prediction
    code = main(["predict", "--model", str(fivepoint_model), "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert [l.split("\t")[0] for l in lines] == ["0", "0", "0", "1", "1"]


def test_empty_dataset_exit_code(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    out = tmp_path / "m.json"
    code = main(["train", "--data", str(empty), "--schema", FIVEPOINT_SCHEMA, "--out", str(out)])
    assert code == EXIT_DATA
    assert "empty" in capsys.readouterr().err
    assert not out.exists()  # no partial model file


def test_unwritable_sink_is_data_error(tmp_path, capsys):
    out = tmp_path / "no" / "such" / "dir" / "m.json"
    code = main(["train", "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA, "--out", str(out)])
    assert code == EXIT_DATA
    assert not out.exists()


def test_unknown_flag_is_usage_error(capsys):
    assert main(["train", "--nonsense"]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err.lower()


def test_missing_subcommand_is_usage_error(capsys):
    assert main([]) == EXIT_USAGE


def test_schema_mismatch_refused(fivepoint_model, tmp_path, capsys):
    other_schema = tmp_path / "other.schema.json"
    other_schema.write_text(
        json.dumps(
            {
                "columns": [
                    {"name": "z", "role": "numeric"},
                    {"name": "label", "role": "target", "classes": ["0", "1"]},
                ]
            }
        )
    )
    rows = tmp_path / "rows.csv"
    rows.write_text("0.7\n")
    code = main(["predict", "--model", str(fivepoint_model), "--data", str(rows), "--schema", str(other_schema)])
    assert code == EXIT_MISMATCH
    assert "digest" in capsys.readouterr().err


def test_eval_fixed_model(fivepoint_model, capsys):
    code = main(["eval", "--model", str(fivepoint_model), "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA])
    assert code == EXIT_OK
    assert "accuracy: 1" in capsys.readouterr().out


def test_eval_cv_mode_echoes_seed(tmp_path, capsys):
    rng = np.random.default_rng(0)
    lines = [f"{x:.4f},{int(x > 0)}" for x in rng.normal(size=40)]
    data = tmp_path / "d.csv"
    data.write_text("\n".join(lines) + "\n")
    code = main(["eval", "--data", str(data), "--schema", FIVEPOINT_SCHEMA, "--k", "4", "--seed", "7"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "seed 7" in out and "accuracy:" in out


def test_bench_suite(tmp_path, capsys):
    suite = {
        "benchmarks": [
            {
                "name": "fivepoint",
                "data": FIVEPOINT,
                "schema": FIVEPOINT_SCHEMA,
                "protocol": {"kind": "kfold", "k": 2, "seed": 0},
                "model": {"alpha": [1, 1]},
            },
            {
                "name": "missing",
                "data": str(tmp_path / "nope.csv"),
                "schema": FIVEPOINT_SCHEMA,
                "protocol": {"kind": "kfold", "k": 2, "seed": 0},
            },
        ]
    }
    suite_path = tmp_path / "suite.json"
    suite_path.write_text(json.dumps(suite))
    report_path = tmp_path / "report.json"
    code = main(["bench", "--suite", str(suite_path), "--out", str(report_path)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "fivepoint" in out and "ERROR" in out
    assert json.loads(report_path.read_text())["results"][0]["name"] == "fivepoint"


def test_importance_fivepoint(capsys):
    code = main(["importance", "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA, "--alpha", "1", "--alpha", "1"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith("column")
    masses = {l.split()[0]: float(l.split()[-1]) for l in lines[1:]}
    assert masses["x"] > masses["(no"] or masses["x"] > 0.5  # feature mass dominates


def test_importance_constant_outcomes(tmp_path, capsys):
    data = tmp_path / "const.csv"
    data.write_text("0,0\n1,0\n2,0\n3,1\n" * 1)
    # nearly-constant outcomes at tiny n: compare masses rather than hardcode
    code = main(["importance", "--data", str(data), "--schema", FIVEPOINT_SCHEMA])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "(no split)" in out


def test_importance_aggregates_categorical_blocks(tmp_path, capsys):
    schema = {
        "columns": [
            {"name": "num", "role": "numeric"},
            {"name": "kind", "role": "categorical", "categories": ["a", "b", "c"]},
            {"name": "y", "role": "target", "classes": ["0", "1"]},
        ]
    }
    schema_path = tmp_path / "s.json"
    schema_path.write_text(json.dumps(schema))
    data = tmp_path / "d.csv"
    rows = ["1,a,0", "2,a,0", "3,b,1", "4,b,1", "5,c,0", "6,c,1"]
    data.write_text("\n".join(rows) + "\n")
    code = main(["importance", "--data", str(data), "--schema", str(schema_path)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    # one aggregated row per raw column, not one per dummy column
    assert "kind=" not in out and "kind" in out


def test_train_ensemble_and_structured_export(tmp_path, capsys):
    out = tmp_path / "ens.json"
    code = main(
        ["train", "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA, "--alpha", "1", "--alpha", "1", "--trees", "2", "--out", str(out)]
    )
    assert code == EXIT_OK
    assert "ensemble of 2 trees" in capsys.readouterr().out
    assert json.loads(out.read_text())["kind"] == "ensemble"
    # text export of an ensemble is refused with a data error
    assert main(["export", "--model", str(out), "--format", "text"]) == EXIT_DATA
    capsys.readouterr()
    assert main(["export", "--model", str(out), "--format", "structured"]) == EXIT_OK
    capsys.readouterr()
    # ensemble models evaluate and predict like single trees
    assert main(["eval", "--model", str(out), "--data", FIVEPOINT, "--schema", FIVEPOINT_SCHEMA]) == EXIT_OK
    assert "accuracy: 1" in capsys.readouterr().out


def test_predict_writes_output_file(fivepoint_model, tmp_path):
    rows = tmp_path / "rows.csv"
    rows.write_text("0.7\n")
    out = tmp_path / "predictions.tsv"
    code = main(
        ["predict", "--model", str(fivepoint_model), "--data", str(rows), "--schema", FIVEPOINT_SCHEMA, "--out", str(out)]
    )
    assert code == EXIT_OK
    assert out.read_text().startswith("0\t0.8\t0.2")


def test_export_graph(fivepoint_model, capsys):
    assert main(["export", "--model", str(fivepoint_model), "--format", "graph"]) == EXIT_OK
    assert "digraph" in capsys.readouterr().out


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert "gmt" in capsys.readouterr().out
