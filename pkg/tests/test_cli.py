import json

import pandas as pd
import pytest

from bench.cli import EXIT_INPUT, EXIT_OK, build_config, main, parse_grid
from overlap.errors import InvalidParameter


def test_parse_grid():
    assert parse_grid("0:1:0.5") == [0.0, 0.5, 1.0]
    assert parse_grid("0.1, 0.2,0.4") == [0.1, 0.2, 0.4]
    for bad in ("", "0:1", "a,b"):
        with pytest.raises(InvalidParameter):
            parse_grid(bad)


def test_build_config_from_options():
    config = build_config(
        "fig2",
        {"alpha_grid": "0.5,1.5", "gamma": "0.2", "codes": "direct,rep5", "points": "16", "seed": "4"},
    )
    assert config.experiment == "fig2_alpha"
    assert config.grid == [0.5, 1.5]
    assert config.gamma == 0.2
    assert config.codes == ["direct", "rep5"]
    assert config.sampling.n_points == 16
    assert config.sampling.seed == 4
    assert str(config.output_path) == "results/fig2.csv"
    assert config.gate_error == 0.0
    assert build_config("fig2", {"gate_error": "0.5"}).gate_error == 0.5


def test_fig1_command(tmp_path):
    out = tmp_path / "fig1.csv"
    code = main(
        ["fig1", "--gamma-grid", "0,0.5", "--codes", "direct,bosonic", "--points", "16", "--out", str(out)]
    )
    assert code == EXIT_OK
    rows = pd.read_csv(out)
    assert len(rows) == 4
    assert (tmp_path / "fig1.csv.meta.json").exists()


def test_config_file_and_flag_precedence(tmp_path):
    env = tmp_path / "bench.env"
    env.write_text("GAMMA_GRID=0,1\nCODES=direct\nPOINTS=4\n")
    out = tmp_path / "fig1.csv"
    code = main(["fig1", "--config", str(env), "--gamma-grid", "0.25", "--out", str(out)])
    assert code == EXIT_OK
    rows = pd.read_csv(out)
    assert rows["parameter"].tolist() == [0.25]
    assert rows["code"].tolist() == ["direct"]


def test_bad_code_exits_with_input_error(tmp_path):
    code = main(["fig1", "--codes", "nine_qubit", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_INPUT
    assert not (tmp_path / "x.csv").exists()


def test_bad_grid_exits_with_input_error(tmp_path):
    assert main(["fig2", "--alpha-grid", "1:2", "--out", str(tmp_path / "x.csv")]) == EXIT_INPUT
    assert main(["fig1", "--gamma-grid", "0.5,2", "--out", str(tmp_path / "x.csv")]) == EXIT_INPUT


def test_missing_config_file(tmp_path):
    assert main(["fig1", "--config", str(tmp_path / "nope.env")]) == EXIT_INPUT


def test_unknown_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["fig1", "--bogus"])
    assert excinfo.value.code == 2


def test_nogo_command(tmp_path):
    out = tmp_path / "nogo.txt"
    assert main(["nogo", "--samples", "300", "--seed", "5", "--out", str(out)]) == EXIT_OK
    assert "violations: 0" in out.read_text().splitlines()


def test_nogo_single_kind(tmp_path):
    out = tmp_path / "nogo.txt"
    code = main(["nogo", "--samples", "200", "--nogo-kind", "symplectic", "--out", str(out)])
    assert code == EXIT_OK
    assert "kind: symplectic" in out.read_text()


def test_plot_command(tmp_path):
    csv = tmp_path / "fig1.csv"
    args = ["--gamma-grid", "0:1:0.5", "--codes", "direct,dual_rail", "--points", "16"]
    assert main(["fig1", *args, "--out", str(csv)]) == EXIT_OK
    assert main(["plot", str(csv), "--out", str(tmp_path / "plots" / "fig1.svg")]) == EXIT_OK
    overlap_svg = tmp_path / "plots" / "fig1_overlap.svg"
    concurrence_svg = tmp_path / "plots" / "fig1_concurrence.svg"
    assert overlap_svg.read_text().lstrip().startswith("<?xml")
    assert concurrence_svg.exists()

    first = overlap_svg.read_bytes()
    assert main(["plot", str(csv), "--out", str(tmp_path / "plots" / "fig1.svg")]) == EXIT_OK
    assert overlap_svg.read_bytes() == first


def test_plot_of_empty_table(tmp_path):
    csv = tmp_path / "empty.csv"
    csv.write_text("parameter,code,f_cw,concurrence\n")
    assert main(["plot", str(csv)]) == EXIT_INPUT


def test_plot_of_missing_file(tmp_path):
    assert main(["plot", str(tmp_path / "none.csv")]) == EXIT_INPUT


def test_fig2_gate_error_flag(tmp_path):
    out = tmp_path / "fig2.csv"
    args = ["--alpha-grid", "0.5,1.5", "--codes", "direct,rep3", "--points", "16"]
    assert main(["fig2", *args, "--gate-error", "1", "--out", str(out)]) == EXIT_OK
    meta = json.loads((tmp_path / "fig2.csv.meta.json").read_text())
    assert meta["gate_error"] == 1.0
    assert meta["gamma"] == 0.32

    assert main(["fig2", *args, "--gate-error", "1.5", "--out", str(out)]) == EXIT_INPUT
