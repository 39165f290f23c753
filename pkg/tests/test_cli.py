"""Command line driver: exit codes, reports on disk, sweeps, determinism."""

import json
from pathlib import Path

import pytest

from phasebalance import cli, fixtures, netmodel

REPORT_FILES = (
    "report.json",
    "periods.csv",
    "assignments.csv",
    "svc.csv",
    "validation.csv",
    "timings.csv",
)


@pytest.fixture(scope="module")
def medium_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("nets") / "medium.json"
    p.write_text(json.dumps(fixtures.medium_feeder_doc(T=2, n_o=1)))
    return str(p)


@pytest.fixture(scope="module")
def medium4_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("nets4") / "medium4.json"
    p.write_text(json.dumps(fixtures.medium_feeder_doc(T=4, n_o=1)))
    return str(p)


@pytest.fixture(scope="module")
def infeasible_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("netsbad") / "infeasible.json"
    p.write_text(json.dumps(fixtures.infeasible_svc_doc()))
    return str(p)


def test_config_validation():
    with pytest.raises(cli.CliError, match="strategy"):
        cli.ScenarioConfig(network="x.json", strategy=7)
    with pytest.raises(cli.CliError, match="n_o"):
        cli.ScenarioConfig(network="x.json", n_o=0)
    with pytest.raises(cli.CliError, match="capacity"):
        cli.ScenarioConfig(network="x.json", svc_cap=-2.0)
    with pytest.raises(cli.CliError, match="gap"):
        cli.ScenarioConfig(network="x.json", gap_tol=0.0)
    with pytest.raises(cli.CliError, match="worker"):
        cli.ScenarioConfig(network="x.json", workers=0)


def test_load_document_dispatch(tmp_path):
    doc = fixtures.two_node_doc()
    # dicts are deep-copied so callers cannot be mutated through the result
    got = cli._load_document(doc)
    got["nodes"][0]["id"] = "mangled"
    assert doc["nodes"][0]["id"] == "n1"

    assert cli._load_document(json.dumps(doc)) == doc
    p = tmp_path / "net.json"
    p.write_text(json.dumps(doc))
    assert cli._load_document(str(p)) == doc
    with pytest.raises(cli.CliError, match="not found"):
        cli._load_document(str(tmp_path / "missing.json"))


def test_worker_count(monkeypatch):
    monkeypatch.delenv("PHASEBALANCE_WORKERS", raising=False)
    assert cli.worker_count() == 1
    assert cli.worker_count(3) == 3
    monkeypatch.setenv("PHASEBALANCE_WORKERS", "5")
    assert cli.worker_count() == 5
    assert cli.worker_count(2) == 2  # explicit config beats the env var
    monkeypatch.setenv("PHASEBALANCE_WORKERS", "lots")
    assert cli.worker_count() == 1


def test_run_writes_report(medium_path, tmp_path):
    out = tmp_path / "out"
    code = cli.main(
        ["run", "--network", medium_path, "--strategy", "4", "--out", str(out)]
    )
    assert code == cli.EXIT_OK
    for name in REPORT_FILES:
        assert (out / name).exists(), name

    payload = json.loads((out / "report.json").read_text())
    assert payload["strategy"] == 4
    assert "timings" not in payload  # wall clocks live in timings.csv only
    total = sum(p["z_total"] for p in payload["periods"].values())
    assert total == pytest.approx(payload["objective"], rel=1e-9)
    # exact grading travels with the report
    rel = abs(payload["objective_exact"] - payload["objective"])
    assert rel / max(payload["objective_exact"], 1e-12) < 0.02

    # and the validate subcommand accepts what run wrote
    code = cli.main(
        ["validate", "--network", medium_path, "--report", str(out / "report.json")]
    )
    assert code == cli.EXIT_OK


def test_validate_flags_doctored_report(medium_path, tmp_path):
    out = tmp_path / "out"
    assert (
        cli.main(["run", "--network", medium_path, "--strategy", "3", "--out", str(out)])
        == cli.EXIT_OK
    )
    rp = out / "report.json"
    payload = json.loads(rp.read_text())
    payload["objective"] *= 1.5
    rp.write_text(json.dumps(payload))
    assert (
        cli.main(["validate", "--network", medium_path, "--report", str(rp)])
        == cli.EXIT_INPUT
    )


def test_infeasible_exit_code(infeasible_path):
    code = cli.main(["run", "--network", infeasible_path, "--strategy", "2"])
    assert code == cli.EXIT_INFEASIBLE


def test_time_limit_exit_code(medium_path):
    code = cli.main(
        ["run", "--network", medium_path, "--strategy", "4", "--time-limit", "0.001"]
    )
    assert code == cli.EXIT_TIME_LIMIT


def test_input_error_exit_codes(tmp_path):
    assert cli.main(["run", "--network", str(tmp_path / "nope.json")]) == cli.EXIT_INPUT
    # argparse failures (bad strategy choice, unknown command) map to 4 too
    assert cli.main(["run", "--network", "x", "--strategy", "9"]) == cli.EXIT_INPUT
    assert cli.main(["frobnicate"]) == cli.EXIT_INPUT
    assert cli.main(["--help"]) == cli.EXIT_OK


def test_svc_strategy_without_compensator_is_input_error(tmp_path):
    p = tmp_path / "plain.json"
    p.write_text(json.dumps(fixtures.two_node_doc(T=1)))
    assert cli.main(["run", "--network", str(p), "--strategy", "2"]) == cli.EXIT_INPUT


def test_reports_are_byte_identical(medium_path, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = cli.main(
            ["run", "--network", medium_path, "--strategy", "4", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        outs.append(out)
    for name in REPORT_FILES:
        if name == "timings.csv":
            continue  # wall clocks are the one legitimately varying output
        a = (outs[0] / name).read_bytes()
        b = (outs[1] / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_worker_pool_matches_sequential(medium4_path, tmp_path):
    # two windows let the fork pool engage; the merged report must not care
    seq, par = tmp_path / "seq", tmp_path / "par"
    base = ["run", "--network", medium4_path, "--strategy", "4", "--no", "2"]
    assert cli.main(base + ["--out", str(seq), "--workers", "1"]) == cli.EXIT_OK
    assert cli.main(base + ["--out", str(par), "--workers", "2"]) == cli.EXIT_OK
    assert (seq / "report.json").read_bytes() == (par / "report.json").read_bytes()


def test_sweep_no_labels_and_monotonicity(medium4_path, tmp_path):
    out = tmp_path / "sweep"
    code = cli.main(
        [
            "sweep-no",
            "--network",
            medium4_path,
            "--strategy",
            "3",
            "--values",
            "1,2",
            "--out",
            str(out),
        ]
    )
    assert code == cli.EXIT_OK
    text = (out / "sweep_no.csv").read_text().splitlines()
    assert text[0] == "n_o,subsets,objective,objective_exact,gap"
    assert len(text) == 3
    row1, row2 = text[1].split(","), text[2].split(",")
    assert row1[1] == "1..4"
    assert row2[1] == "1..2|3..4"
    # refining the partition can only help
    assert float(row2[2]) <= float(row1[2]) + 1e-9


def test_sweep_svc_marginal_column(medium_path, tmp_path):
    out = tmp_path / "svcsweep"
    code = cli.main(
        [
            "sweep-svc",
            "--network",
            medium_path,
            "--strategy",
            "4",
            "--capacities",
            "0,2000",
            "--out",
            str(out),
        ]
    )
    assert code == cli.EXIT_OK
    lines = (out / "sweep_svc.csv").read_text().splitlines()
    assert lines[0] == "capacity,objective,objective_exact,delta_f,gap"
    first, second = lines[1].split(","), lines[2].split(",")
    assert float(first[3]) == 0.0
    assert float(second[3]) == pytest.approx(
        float(second[1]) - float(first[1]), rel=1e-9, abs=1e-12
    )
    # more reactive headroom cannot hurt
    assert float(second[1]) <= float(first[1]) + 1e-9
    assert (out / "sweep_svc_periods.csv").exists()


def test_capacity_override_reaches_the_model(medium_path):
    # forcing the rating to zero must reproduce the no-compensator objective
    rep_zero = cli.run_scenario(
        cli.ScenarioConfig(network=medium_path, strategy=4, svc_cap=0.0)
    )
    rep_psd = cli.run_scenario(cli.ScenarioConfig(network=medium_path, strategy=3))
    assert rep_zero.objective == pytest.approx(rep_psd.objective, abs=1e-6)
    for cur in rep_zero.svc_dispatch.values():
        assert abs(cur) < 1e-7
