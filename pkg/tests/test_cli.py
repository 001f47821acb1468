import csv
import json
from pathlib import Path

import pytest

from scisoc.cli import main


@pytest.fixture()
def ingested(dump_paths, tmp_path) -> Path:
    out = tmp_path / "corpus"
    code = main(["ingest",
                 "--authors", str(dump_paths["authors"]),
                 "--papers", str(dump_paths["papers"]),
                 "--rankings", str(dump_paths["rankings"]),
                 "--out", str(out)])
    assert code == 0
    return out


def test_ingest_writes_snapshot_and_report(ingested):
    assert (ingested / "meta.json").exists()
    assert (ingested / "ingest_report.json").exists()
    report = json.loads((ingested / "ingest_report.json").read_text())
    assert report["authors_ingested"] > 0


def test_simulate_then_metrics_then_validate(ingested, tmp_path, capsys):
    run_dir = tmp_path / "run"
    code = main(["simulate", "--corpus", str(ingested), "--out", str(run_dir),
                 "--agents", "20", "--epochs", "10", "--seed", "3",
                 "--deterministic"])
    assert code == 0
    assert (run_dir / "manifest.json").exists()
    assert (run_dir / "actions.jsonl").exists()

    metrics_dir = tmp_path / "metrics"
    code = main(["metrics", "--snapshot", str(run_dir), "--out", str(metrics_dir)])
    assert code == 0
    assert (metrics_dir / "metrics.csv").exists()
    assert (metrics_dir / "correlations.csv").exists()

    report_path = tmp_path / "compare.csv"
    code = main(["validate",
                 "--real", str(run_dir / "metrics.csv"),
                 "--sim", str(metrics_dir / "metrics.csv"),
                 "--out", str(report_path)])
    assert code == 0
    rows = list(csv.DictReader(report_path.open()))
    assert {r["factor"] for r in rows} == {"d_eth", "d_aff", "mean_rank"}


def test_simulate_resume_flag(ingested, tmp_path):
    run_dir = tmp_path / "run"
    code = main(["simulate", "--corpus", str(ingested), "--out", str(run_dir),
                 "--agents", "16", "--epochs", "8", "--seed", "1",
                 "--checkpoint-every", "4", "--deterministic"])
    assert code == 0
    code = main(["simulate", "--corpus", str(ingested), "--out", str(run_dir),
                 "--resume"])
    assert code == 0


def test_metrics_csv_schema_from_cli_run(ingested, tmp_path):
    run_dir = tmp_path / "run"
    main(["simulate", "--corpus", str(ingested), "--out", str(run_dir),
          "--agents", "16", "--epochs", "8", "--seed", "1", "--deterministic"])
    with (run_dir / "metrics.csv").open() as fh:
        header = fh.readline().strip()
    assert header == "paper_id,d_eth,d_aff,mean_rank,citations,source"
    with (run_dir / "correlations.csv").open() as fh:
        header = fh.readline().strip()
    assert header == "factor,r,p_value,n"


def test_probe_emits_scaling_csv(tmp_path):
    out = tmp_path / "probe"
    code = main(["probe", "--out", str(out), "--ports", "1", "2",
                 "--agents", "8", "--latency", "0.001", "--requests-per-agent", "2"])
    assert code == 0
    rows = list(csv.DictReader((out / "scaling.csv").open()))
    assert len(rows) == 2
    assert {"n_agents", "n_ports", "wall_clock", "throughput"} <= set(rows[0])


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "config.json"
    bad.write_text('{"accept_rule": "banana"}')
    code = main(["simulate", "--corpus", str(tmp_path), "--out", str(tmp_path / "o"),
                 "--config", str(bad)])
    assert code == 2


def test_data_error_exit_code(tmp_path):
    code = main(["simulate", "--corpus", str(tmp_path / "nowhere"),
                 "--out", str(tmp_path / "o")])
    assert code == 3


def test_ingest_missing_file_exit_code(tmp_path):
    code = main(["ingest", "--authors", str(tmp_path / "a.jsonl"),
                 "--papers", str(tmp_path / "p.jsonl"),
                 "--out", str(tmp_path / "c")])
    assert code == 3
