import csv
import json

import numpy as np
import pytest

from spikelab.cli import figure_bundles, parse_and_dispatch, parse_grid

SCHEMA_PATH = "src/spikelab/schemas/output.schema.json"


def run(argv):
    return parse_and_dispatch(argv)


def test_parse_grid():
    assert np.allclose(parse_grid("0:1:5"), np.linspace(0, 1, 5))
    assert parse_grid("2.5:2.5:1").tolist() == [2.5]
    for bad in ("1:0:5", "0:1:0", "0:1", "a:b:c"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_scalar_csv(tmp_path):
    out = tmp_path / "s.csv"
    rc = run(["scalar", "--prior", "gaussian", "--gamma-grid", "0:5:6",
              "-o", str(out)])
    assert rc == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["gamma", "psi", "psi_prime", "mmse"]
    gamma1 = [r for r in rows[1:] if float(r[0]) == 1.0][0]
    assert abs(float(gamma1[1]) - 0.5 * (1 - np.log(2.0))) < 1e-9


def test_byte_identical_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["oracle", "rem", "--n", "8", "--lambda-grid", "0.5:2:4",
            "--trials", "10", "--seed", "7"]
    assert run(argv + ["-o", str(a)]) == 0
    assert run(argv + ["-o", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_output_matches_schema(tmp_path):
    out = tmp_path / "t.json"
    rc = run(["wigner", "threshold", "--prior", "gaussian",
              "-o", str(out), "--format", "json"])
    assert rc == 0
    doc = json.loads(out.read_text())
    schema = json.loads(open(SCHEMA_PATH).read())
    assert set(doc) == set(schema["properties"]) == {"columns", "rows"}
    assert all(isinstance(c, str) for c in doc["columns"])
    for row in doc["rows"]:
        assert len(row) == len(doc["columns"])
        assert all(isinstance(x, (int, float, str)) for x in row)
    assert abs(doc["rows"][0][0] - 1.0) < 1e-3


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(["scalar", "--prior", "nonsense", "--gamma-grid", "0:1:3",
                "-o", str(tmp_path / "x.csv")]) == 2
    assert run(["scalar", "--prior", "gaussian", "--gamma-grid", "1:0:5",
                "-o", str(tmp_path / "x.csv")]) == 2
    with pytest.raises(SystemExit) as exc:
        run(["scalar", "--gamma-grid", "0:1:3", "-o", str(tmp_path / "x.csv")])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["preset", "no_such_figure", "-o", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_preset_expansion(tmp_path):
    assert set(figure_bundles()) == {
        "mmse_xx", "free_energy_landscape", "phase_diagram",
        "mmse_spiked_covariance",
    }
    out = tmp_path / "fl.csv"
    assert run(["preset", "free_energy_landscape", "-o", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["lambda", "q", "potential", "q_star"]
    assert {r[0] for r in rows[1:]} == {"0.4", "0.8", "1.5"}


def test_config_file_defaults(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"gamma_grid": "0:2:3", "prior": "rademacher"}))
    out = tmp_path / "c.csv"
    # flag overrides config value for the prior
    rc = run(["scalar", "--config", str(conf), "--prior", "gaussian",
              "-o", str(out)])
    assert rc == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 4
    assert abs(float(rows[2][3]) - 0.5) < 1e-12  # gaussian mmse at gamma=1


def test_se_and_amp_commands(tmp_path):
    out = tmp_path / "se.csv"
    assert run(["se", "--model", "wigner", "--prior", "rademacher",
                "--lambda", "1.5", "--iters", "30", "-o", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "q"]
    out2 = tmp_path / "amp.csv"
    assert run(["amp", "run", "--prior", "rademacher", "--lambda", "2.0",
                "--n", "400", "--iters", "4", "--seeds", "2",
                "-o", str(out2)]) == 0
    rows = list(csv.reader(out2.open()))
    assert rows[0] == ["seed", "t", "overlap_emp", "overlap_se", "norm_emp",
                       "mse_emp", "mse_se"]
    assert len(rows) == 1 + 2 * 5
