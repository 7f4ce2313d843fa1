"""Command line behaviour and exit codes."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from medledger.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, _parse_size, main
from medledger.deployment import Deployment
from medledger.ledger import read_chain_log, write_chain_log

from conftest import build_busy_chain

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -------------------------------------------------------------------- sizes


def test_parse_size_forms():
    assert _parse_size("1KB") == 1024
    assert _parse_size("64KB") == 65536
    assert _parse_size("1MB") == 1048576
    assert _parse_size("512B") == 512
    assert _parse_size("900") == 900
    assert _parse_size(" 2 kb ") == 2048
    with pytest.raises(ValueError):
        _parse_size("huge")


# --------------------------------------------------------------------- init


def test_init_then_reinit(tmp_path, capsys):
    home = str(tmp_path / "dep")
    code, out, _ = run(capsys, "init", "--dir", home, "--difficulty", "8")
    assert code == EXIT_OK
    assert "initialized" in out
    code, _, err = run(capsys, "init", "--dir", home, "--difficulty", "8")
    assert code == EXIT_USAGE
    assert "error:" in err


def test_init_rejects_out_of_range_difficulty(tmp_path, capsys):
    code, _, err = run(capsys, "init", "--dir", str(tmp_path / "d"), "--difficulty", "40")
    assert code == EXIT_USAGE
    assert "difficulty" in err


# ---------------------------------------------------------- keygen/register


def test_keygen_register_flow(tmp_path, capsys):
    home = str(tmp_path / "dep")
    keyfile = str(tmp_path / "doc.key")
    run(capsys, "init", "--dir", home, "--difficulty", "4")
    code, out, err = run(
        capsys, "keygen", "--role", "provider", "--name", "doc", "--out", keyfile
    )
    assert code == EXIT_OK
    printed_id = out.strip()
    assert len(bytes.fromhex(printed_id)) == 32
    assert "wrote" in err
    assert Path(keyfile).is_file()

    code, out, err = run(capsys, "register", "--dir", home, "--keyfile", keyfile)
    assert code == EXIT_OK
    assert out.strip() == printed_id
    assert "registered 'doc' as provider" in err
    with Deployment.open_dir(home) as dep:
        assert dep.state.identity_by_name("doc") is not None


def test_keygen_bad_role(tmp_path, capsys):
    code, _, err = run(
        capsys, "keygen", "--role", "wizard", "--name", "x",
        "--out", str(tmp_path / "x.key"),
    )
    assert code == EXIT_USAGE
    assert "role" in err


# ------------------------------------------------------------------- verify


def test_verify_ok_and_pinned(tmp_path, capsys):
    chain = build_busy_chain(2, 2, 8, label="cli-verify")
    log = tmp_path / "chain.log"
    write_chain_log(log, chain)
    code, out, _ = run(capsys, "verify", "--chain", str(log))
    assert code == EXIT_OK
    assert out.strip() == "ok: chain verifies"
    code, _, _ = run(capsys, "verify", "--chain", str(log), "--difficulty", "8")
    assert code == EXIT_OK
    # Pinning a different difficulty fails every mined block.
    code, out, _ = run(capsys, "verify", "--chain", str(log), "--difficulty", "30")
    assert code == EXIT_FAILED
    assert "FAILED" in out


def test_verify_flagged_corruption(tmp_path, capsys):
    chain = build_busy_chain(2, 2, 8, label="cli-corrupt")
    log = tmp_path / "chain.log"
    write_chain_log(log, chain)
    raw = bytearray(log.read_bytes())
    raw[-40] ^= 0x01
    log.write_bytes(bytes(raw))
    code, out, _ = run(capsys, "verify", "--chain", str(log))
    assert code == EXIT_FAILED
    assert out.startswith("FAILED")


def test_verify_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "verify", "--chain", str(tmp_path / "nope.log"))
    assert code == EXIT_USAGE
    assert "error:" in err


# ---------------------------------------------------------------------- sim


def test_sim_runs_scenario(tmp_path, capsys):
    out_csv = tmp_path / "events.csv"
    code, out, err = run(
        capsys, "sim", "--scenario", str(SCENARIOS / "heal.sim"), "--out", str(out_csv)
    )
    assert code == EXIT_OK
    summary = out.strip()
    assert summary.startswith("nodes=5 ")
    assert "converged=true" in summary
    assert "tips=" in summary and "," not in summary.split("tips=")[1]
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["tick", "node_id", "event", "detail"]
    assert len(rows) > 1


def test_sim_identical_csv_across_runs(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        code, _, _ = run(
            capsys, "sim", "--scenario", str(SCENARIOS / "heal.sim"), "--out", str(out)
        )
        assert code == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sim_bad_directive_exit_2(tmp_path, capsys):
    scenario = tmp_path / "bad.sim"
    scenario.write_text("nodes 2\nwarp 9\n")
    code, _, err = run(capsys, "sim", "--scenario", str(scenario))
    assert code == EXIT_USAGE
    assert "line 2" in err


def test_sim_unconverged_exit_1(tmp_path, capsys):
    scenario = tmp_path / "slow.sim"
    scenario.write_text("nodes 1\ndifficulty 20\ntrials 1\nnode 0 mine\n")
    code, out, err = run(
        capsys, "sim", "--scenario", str(scenario), "--max-ticks", "5",
        "--out", str(tmp_path / "slow.csv"),
    )
    assert code == EXIT_FAILED
    assert "not quiescent" in err


def test_sim_default_output_path(tmp_path, capsys):
    scenario = tmp_path / "tiny.sim"
    scenario.write_text("nodes 1\ndifficulty 4\nnode 0 mine\n")
    code, _, _ = run(capsys, "sim", "--scenario", str(scenario))
    assert code == EXIT_OK
    assert (tmp_path / "tiny.events.csv").is_file()


# -------------------------------------------------------------------- bench


def test_bench_writes_csv(tmp_path, capsys):
    out_csv = tmp_path / "bench.csv"
    code, out, err = run(
        capsys, "bench", "--records", "2", "--sizes", "1KB,4KB",
        "--difficulty", "4", "--out", str(out_csv),
    )
    assert code == EXIT_OK
    rows = list(csv.DictReader(out_csv.open()))
    assert {(r["size_bytes"], r["op"]) for r in rows} == {
        ("1024", "upload"), ("1024", "download"),
        ("4096", "upload"), ("4096", "download"),
    }
    for row in rows:
        assert float(row["median_ms"]) >= 0.0
        assert float(row["p95_ms"]) >= float(row["median_ms"])
    assert "upload" in out and "download" in out


def test_bench_unreachable_url(capsys):
    code, _, err = run(
        capsys, "bench", "--records", "1", "--sizes", "1KB",
        "--url", "http://127.0.0.1:9",
    )
    assert code == EXIT_USAGE
    assert "error:" in err


# ------------------------------------------------------------ dump, openapi


def test_dump_prints_state(tmp_path, capsys):
    home = str(tmp_path / "dep")
    run(capsys, "init", "--dir", home, "--difficulty", "4")
    keyfile = str(tmp_path / "pat.key")
    run(capsys, "keygen", "--role", "patient", "--name", "pat", "--out", keyfile)
    run(capsys, "register", "--dir", home, "--keyfile", keyfile)
    code, out, _ = run(capsys, "dump", "--dir", home)
    assert code == EXIT_OK
    assert out.startswith("identity ")
    assert "role=patient" in out


def test_openapi_schema(tmp_path, capsys):
    out_path = tmp_path / "openapi.json"
    code, _, err = run(capsys, "openapi", "--out", str(out_path))
    assert code == EXIT_OK
    schema = json.loads(out_path.read_text())
    assert "/api/records" in schema["paths"]
    assert "/api/login" in schema["paths"]
    assert "/api/chain/verify" in schema["paths"]
    # Test hooks never leak into the published schema.
    assert "/api/testing/corrupt" not in schema["paths"]
