"""End-to-end command-line flows."""

import json
import socket
import subprocess
import sys
import time

import numpy as np
import pytest

from priarta import default_scenario, load_report
from priarta.cli import main


def run_cli(*argv):
    return main(list(argv))


def dir_bytes(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scn") / "run"
    assert run_cli("scenario", "--out-dir", str(out), "--seed", "7") == 0
    return out


# ----------------------------------------------------------------- scenario


def test_scenario_writes_roster(scenario_dir):
    names = set(dir_bytes(scenario_dir))
    assert "buyer.raw" in names
    assert "scenario.resolved.json" in names
    assert "encoder.json" in names
    assert sum(n.startswith("sellers/") for n in names) == 7


def test_scenario_is_deterministic(tmp_path, scenario_dir):
    again = tmp_path / "again"
    assert run_cli("scenario", "--out-dir", str(again), "--seed", "7") == 0
    assert dir_bytes(again) == dir_bytes(scenario_dir)


def test_scenario_resolved_config_reloads(scenario_dir, tmp_path):
    # the resolved echo is a valid config that regenerates the same data
    resolved = scenario_dir / "scenario.resolved.json"
    out = tmp_path / "reload"
    assert run_cli("scenario", "--config", str(resolved), "--out-dir", str(out)) == 0
    ours = dir_bytes(out)
    theirs = dir_bytes(scenario_dir)
    assert ours == theirs


def test_scenario_rejects_invalid_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    cfg = default_scenario(7).to_dict()
    cfg["sellers"] = []
    bad.write_text(json.dumps(cfg))
    code = run_cli("scenario", "--config", str(bad), "--out-dir", str(tmp_path / "x"))
    assert code == 1
    assert "sellers" in capsys.readouterr().err


def test_unknown_flag_exits_1():
    with pytest.raises(SystemExit) as info:
        run_cli("scenario", "--wat")
    assert info.value.code == 1


# ------------------------------------------------------------------- encode


def test_encode_round_trip(scenario_dir, tmp_path):
    out = tmp_path / "buyer.emb"
    code = run_cli(
        "encode",
        "--spec", str(scenario_dir / "encoder.json"),
        "--input", str(scenario_dir / "buyer.raw"),
        "--output", str(out),
    )
    assert code == 0
    text = out.read_text()
    assert text.startswith("PRIARTA-EMB 1\n")
    assert text.splitlines()[1].startswith("4096 4 ")


def test_encode_alpha_zero_invariant_through_files(scenario_dir, tmp_path):
    # seller-4 is a nuisance-only augmented copy of the buyer
    a, b = tmp_path / "a.emb", tmp_path / "b.emb"
    spec = str(scenario_dir / "encoder.json")
    assert run_cli("encode", "--spec", spec,
                   "--input", str(scenario_dir / "buyer.raw"), "--output", str(a)) == 0
    assert run_cli("encode", "--spec", spec,
                   "--input", str(scenario_dir / "sellers" / "seller-4.raw"),
                   "--output", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


# -------------------------------------------------------------------- value


def value_args(scenario_dir, output):
    return (
        "value",
        "--input", str(scenario_dir / "buyer.raw"),
        "--sellers", str(scenario_dir / "sellers"),
        "--spec", str(scenario_dir / "encoder.json"),
        "--output", str(output),
        "--offline",
        "--seed", "7",
    )


def test_value_offline_writes_report(scenario_dir, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run_cli(*value_args(scenario_dir, out)) == 0
    report = load_report(out)
    assert len(report.entries) == 7
    assert len(report.ranking) == 7
    assert report.params_echo["epsilon"] == 0.8
    assert report.params_echo["delta"] == 1e-5
    assert report.params_echo["master_seed"] == 7
    assert report.params_echo["mode"] == "seeded"
    assert not any(e.failed for e in report.entries)


def test_value_seeded_reruns_byte_identical(scenario_dir, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_cli(*value_args(scenario_dir, a)) == 0
    assert run_cli(*value_args(scenario_dir, b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_value_disjoint_seller_ranks_first(scenario_dir, tmp_path):
    out = tmp_path / "report.json"
    assert run_cli(*value_args(scenario_dir, out)) == 0
    report = load_report(out)
    assert report.ranking[0] == "seller-1"


def test_value_enrich_reverses_extremes(scenario_dir, tmp_path):
    out = tmp_path / "enrich.json"
    assert run_cli(*value_args(scenario_dir, out), "--objective", "enrich") == 0
    report = load_report(out)
    assert report.ranking[-1] == "seller-1"


def test_value_all_failed_exits_3(scenario_dir, tmp_path, capsys):
    out = tmp_path / "report.json"
    # subset larger than any seller dataset
    code = run_cli(*value_args(scenario_dir, out), "--subset-size", "5000")
    assert code == 3
    err = capsys.readouterr().err
    assert "all sellers failed" in err
    report = load_report(out)  # failure report still written
    assert all(e.failed for e in report.entries)


def test_value_debias_changes_scores(scenario_dir, tmp_path):
    plain, debiased = tmp_path / "p.json", tmp_path / "d.json"
    assert run_cli(*value_args(scenario_dir, plain)) == 0
    assert run_cli(*value_args(scenario_dir, debiased), "--debias") == 0
    a = load_report(plain)
    b = load_report(debiased)
    assert b.params_echo["debias"] is True
    assert any(
        x.raw_w2 != y.raw_w2 for x, y in zip(a.entries, b.entries)
    )


def test_value_requires_directory_for_offline(scenario_dir, tmp_path, capsys):
    code = run_cli(
        "value",
        "--input", str(scenario_dir / "buyer.raw"),
        "--sellers", "s1=127.0.0.1:9",
        "--spec", str(scenario_dir / "encoder.json"),
        "--output", str(tmp_path / "r.json"),
        "--offline",
    )
    assert code == 1


# ------------------------------------------------------------------- report


def test_report_table_and_csv(scenario_dir, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run_cli(*value_args(scenario_dir, out)) == 0
    capsys.readouterr()

    assert run_cli("report", "--input", str(out), "--format", "table") == 0
    table = capsys.readouterr().out
    assert "node_id" in table
    assert "seller-1" in table

    assert run_cli("report", "--input", str(out), "--format", "csv") == 0
    csv_text = capsys.readouterr().out
    assert csv_text.startswith("node_id,raw_w2,normalized,rank,failed,failure_reason")
    assert csv_text.count("\n") == 8  # header + 7 sellers


def test_report_corrupt_file_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert run_cli("report", "--input", str(bad)) == 1
    assert "byte" in capsys.readouterr().err


# --------------------------------------------------------------- robustness


def test_robustness_appends_zero_deviations(scenario_dir, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run_cli(*value_args(scenario_dir, out)) == 0
    assert run_cli("robustness", "--seed", "7", "--output", str(out)) == 0
    report = load_report(out)
    assert report.robustness is not None
    ids = [r.node_id for r in report.robustness]
    assert ids == [f"seller-{i}" for i in range(3, 8)]
    for entry in report.robustness:
        assert entry.deviation == 0.0


def test_robustness_baselines_match_report_scores(scenario_dir, tmp_path):
    # the augmented sellers' own raw scores ARE the augmented distances;
    # their sources' raw scores are the baselines
    out = tmp_path / "report.json"
    assert run_cli(*value_args(scenario_dir, out)) == 0
    assert run_cli("robustness", "--seed", "7", "--output", str(out)) == 0
    report = load_report(out)
    by_id = {e.node_id: e for e in report.entries}
    for r in report.robustness:
        assert r.augmented_w2 == by_id[r.node_id].raw_w2


def test_robustness_without_augmented_sellers_notices(tmp_path, capsys):
    cfg = default_scenario(7).to_dict()
    cfg["sellers"] = cfg["sellers"][:2]  # fresh sellers only
    config_path = tmp_path / "cfg.json"
    config_path.write_text(json.dumps(cfg))
    report_path = tmp_path / "r.json"
    report_path.write_text(
        '{"degenerate_normalization":false,"entries":[],"objective":"diversify",'
        '"params_echo":{},"ranking":[],"robustness":null}\n'
    )
    assert run_cli("robustness", "--config", str(config_path),
                   "--output", str(report_path)) == 0
    assert "nothing to do" in capsys.readouterr().out


# ------------------------------------------------------------------ network


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_and_value_over_sockets(scenario_dir, tmp_path):
    # spawn two real seller processes, value against them, and compare with
    # the offline route over the same two sellers
    ports = [free_port(), free_port()]
    procs = []
    spec = str(scenario_dir / "encoder.json")
    try:
        for i, port in enumerate(ports, start=1):
            procs.append(subprocess.Popen(
                [sys.executable, "-m", "priarta.cli", "serve",
                 "--input", str(scenario_dir / "sellers" / f"seller-{i}.raw"),
                 "--listen", f"127.0.0.1:{port}",
                 "--node-id", f"seller-{i}"],
                stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
            ))
        for proc in procs:
            line = proc.stdout.readline()
            assert "listening" in line

        net_out = tmp_path / "net.json"
        code = run_cli(
            "value",
            "--input", str(scenario_dir / "buyer.raw"),
            "--sellers", ",".join(
                f"seller-{i}=127.0.0.1:{port}" for i, port in enumerate(ports, start=1)
            ),
            "--spec", spec,
            "--output", str(net_out),
            "--seed", "7",
        )
        assert code == 0
    finally:
        for proc in procs:
            proc.terminate()
        for proc in procs:
            proc.wait(timeout=10)

    # offline pass over only those two sellers
    two = tmp_path / "two"
    two.mkdir()
    for i in (1, 2):
        (two / f"seller-{i}.raw").write_bytes(
            (scenario_dir / "sellers" / f"seller-{i}.raw").read_bytes()
        )
    off_out = tmp_path / "off.json"
    code = run_cli(
        "value",
        "--input", str(scenario_dir / "buyer.raw"),
        "--sellers", str(two),
        "--spec", spec,
        "--output", str(off_out),
        "--offline",
        "--seed", "7",
    )
    assert code == 0
    assert net_out.read_bytes() == off_out.read_bytes()


def test_value_against_dead_seller_exits_3(scenario_dir, tmp_path, capsys):
    port = free_port()  # nothing listens here
    code = run_cli(
        "value",
        "--input", str(scenario_dir / "buyer.raw"),
        "--sellers", f"ghost=127.0.0.1:{port}",
        "--spec", str(scenario_dir / "encoder.json"),
        "--output", str(tmp_path / "r.json"),
        "--seed", "7",
    )
    assert code == 3


def test_serve_bind_conflict_exits_2(scenario_dir):
    port = free_port()
    with socket.socket() as blocker:
        blocker.bind(("127.0.0.1", port))
        blocker.listen(1)
        code = run_cli(
            "serve",
            "--input", str(scenario_dir / "buyer.raw"),
            "--listen", f"127.0.0.1:{port}",
        )
    assert code == 2
