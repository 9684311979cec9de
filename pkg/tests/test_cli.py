import csv
import json

import pytest

from qgames.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, OUTPUT_ENV, main, make_parser


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    return tmp_path


def test_play_noiseless_doily(outdir, capsys):
    code = main(["play", "--game", "doily", "--scenario", "ll", "--method", "delegation",
                 "--shots", "16", "--seed", "7", "--orderings", "canonical"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "quantum advantage demonstrated" in out
    assert "Noiseless Simulation" in out
    data = json.loads((outdir / "doily_ll_delegation_seed7.json").read_text())
    assert data["sigma"]["value"] == 1.0
    assert data["metadata"]["config"]["seed"] == 7


def test_unitary_pl_rejected(capsys):
    assert main(["play", "--game", "mermin", "--scenario", "pl", "--method", "unitary"]) == EXIT_CONFIG
    assert "point-line" in capsys.readouterr().err


def test_zero_noise_equals_noiseless(outdir):
    base = ["play", "--game", "mermin", "--scenario", "ll", "--method", "unitary", "--shots", "8",
            "--orderings", "canonical"]
    main(base + ["--output", str(outdir / "a.json")])
    main(base + ["--noise", "0,0,0", "--output", str(outdir / "b.json")])
    a, b = (json.loads((outdir / f).read_text()) for f in ("a.json", "b.json"))
    a["metadata"].pop("config"), b["metadata"].pop("config")
    assert a == b


def test_replay_from_result_file(outdir):
    args = ["play", "--game", "doily", "--scenario", "pl", "--method", "delegation", "--shots", "8",
            "--noise", "0.01,0.02,0.03", "--seed", "3", "--orderings", "canonical"]
    main(args + ["--output", str(outdir / "first.json")])
    main(["play", "--config", str(outdir / "first.json"), "--output", str(outdir / "second.json")])
    assert (outdir / "first.json").read_bytes() == (outdir / "second.json").read_bytes()


def test_flags_override_config(outdir):
    cfg = outdir / "cfg.json"
    cfg.write_text(json.dumps({"game": "mermin", "scenario": "ll", "method": "unitary", "shots": 4,
                               "orderings": "canonical", "seed": 1}))
    main(["play", "--config", str(cfg), "--seed", "9", "--output", str(outdir / "r.json")])
    assert json.loads((outdir / "r.json").read_text())["seed"] == 9


def test_bad_config_key(outdir):
    cfg = outdir / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["play", "--config", str(cfg)]) == EXIT_CONFIG


def test_invariant_exit_code(monkeypatch):
    from qgames import cli
    from qgames.games import InvariantViolation

    def boom(*a, **k):
        raise InvariantViolation("broken parity")

    monkeypatch.setattr(cli, "referee_play", boom)
    assert main(["play", "--game", "mermin", "--method", "unitary", "--shots", "1"]) == EXIT_INVARIANT


@pytest.mark.parametrize(
    "game, scenario, text",
    [("mermin", "ll", "8/9 = 0.888889"), ("doily", "pl", "14/15 = 0.933333"), ("mermin", "pl", "17/18 = 0.944444")],
)
def test_bounds(game, scenario, text, capsys):
    assert main(["bounds", "--game", game, "--scenario", scenario]) == EXIT_OK
    assert text in capsys.readouterr().out


def test_bounds_doily_ll_writes_witness(outdir, capsys):
    assert main(["bounds", "--game", "doily", "--scenario", "ll"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "witness written to" in captured.out
    assert "searched" in captured.err
    witness = json.loads((outdir / "witness_doily_ll.json").read_text())
    assert witness["wins"] >= 78


def test_sweep_csv(outdir):
    path = outdir / "sweep.csv"
    code = main(["sweep", "--game", "mermin", "--scenario", "ll", "--method", "delegation", "--shots", "16",
                 "--orderings", "canonical", "--p2-values", "0,0.05", "--output", str(path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(path.open()))
    assert [float(r["p2"]) for r in rows] == [0.0, 0.05]
    assert float(rows[0]["sigma"]) == 1.0


def test_sweep_compare_routing(outdir, capsys):
    code = main(["sweep", "--game", "doily", "--scenario", "pl", "--method", "delegation", "--shots", "8",
                 "--orderings", "canonical", "--p2-values", "0.01", "--coupling-map", "lagos",
                 "--layout", "0 0;1 6;2 4;3 2;4 3", "--compare-routing"])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3


def test_geometry_outputs(capsys):
    main(["geometry", "--game", "doily", "--format", "dot"])
    assert capsys.readouterr().out.startswith("graph")
    main(["geometry", "--grids"])
    assert len(capsys.readouterr().out.strip().splitlines()) == 10
    main(["geometry", "--game", "mermin", "--grid", "square"])
    assert "YZ ZY XX" in capsys.readouterr().out


def test_bad_grid_name():
    assert main(["geometry", "--game", "mermin", "--grid", "fig9"]) == EXIT_CONFIG


def test_export_qasm(capsys):
    assert main(["export", "--game", "doily", "--scenario", "pl", "--method", "delegation", "--cell", "3",
                 "--coupling-map", "lagos", "--layout", "lagos-pl"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("OPENQASM 2.0;")
    assert '"plan"' in out and "swap q" not in out


def test_help_lists_choices():
    text = make_parser().format_help()
    for word in ("mermin", "doily", "ll", "pl", "unitary", "delegation", "classical:table1_grid"):
        assert word in text
