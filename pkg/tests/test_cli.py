import csv
import json

import numpy as np
import pytest

from interface_lab import __version__
from interface_lab.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    RunManifest,
    build_run_config,
    main,
    parse_config_text,
    parse_modes,
)
from interface_lab.errors import ConfigError

SMALL_RUN = "rho_plus = 1.0\nrho_minus = 2.0  # outer fluid\nn_nodes = 32\ndt = 0.01\nt_end = 0.05\n" \
            "amplitude = 0.02\nmode = 3\ninitial_gamma = mode:2,0.1\nreport_every = 1\n"


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_parse_config_text():
    d = parse_config_text("a = 1\n# comment\n\nb=x:1,2  # trailing\n")
    assert d == {"a": "1", "b": "x:1,2"}
    with pytest.raises(ConfigError):
        parse_config_text("no equals here")


def test_build_run_config_validates():
    cfg = build_run_config({"n_nodes": "48", "dt": "0.002", "initial_curve": "ellipse:1.5,1"})
    assert cfg.n_nodes == 48 and cfg.dt == 0.002
    for bad in ({"nope": "1"}, {"dt": "fast"}, {"n_nodes": "4"}, {"dt": "-1"}):
        with pytest.raises(ConfigError):
            build_run_config(bad)


def test_parse_modes():
    assert parse_modes("2..5") == [2, 3, 4, 5]
    assert parse_modes("1,7") == [1, 7]


def test_simulate_writes_manifest_and_energies(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_RUN)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--output-dir", str(out)]) == EXIT_OK
    man = RunManifest.read(out / "manifest.json")
    assert man.version == __version__ and man.config["n_nodes"] == 32
    rows = _rows(out / "energies.csv")
    assert rows[0][:3] == ["time", "E0", "E"]
    assert len(rows) == 1 + 6
    assert len(list((out / "states").iterdir())) == 6


def test_simulate_is_byte_identical(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_RUN)
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["simulate", "--config", str(cfg), "--output-dir", str(out)]) == EXIT_OK
        blobs.append((out / "energies.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_overrides_take_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_RUN)
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--output-dir", str(out), "t_end=0.02"]) == EXIT_OK
    assert json.loads((out / "manifest.json").read_text())["config"]["t_end"] == 0.02


def test_configuration_errors_exit_2(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg"), "--output-dir", str(out)]) == EXIT_CONFIG
    assert main(["simulate", "--output-dir", str(out), "bogus=1"]) == EXIT_CONFIG
    assert main(["no-such-command"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path):
    out = tmp_path / "o"
    # dt far above the capillary limit
    code = main(["simulate", "--output-dir", str(out), "n_nodes=64", "dt=0.5", "t_end=1"])
    assert code == EXIT_NUMERIC
    assert "CFLError" in (out / "failure.txt").read_text()


def test_dispersion_marks_threshold(tmp_path):
    out = tmp_path / "d"
    args = ["dispersion", "--output-dir", str(out), "--slip", "4", "--modes", "1..10"]
    assert main(args) == EXIT_OK
    rows = _rows(out / "dispersion.csv")[1:]
    growth = {int(r[0]): float(r[1]) for r in rows}
    above = {int(r[0]): r[3] == "1" for r in rows}
    assert growth[4] > 0
    assert all(growth[m] <= 1e-12 for m in growth if above[m])


def test_operators_on_circle(tmp_path):
    out = tmp_path / "op"
    R = 2.0
    args = ["operators", "--output-dir", str(out), "--radius", str(R), "--modes", "1..8", "--n-nodes", "64"]
    assert main(args) == EXIT_OK
    rows = _rows(out / "operators.csv")
    head = rows[0]
    for r in rows[1:]:
        m = int(r[0])
        assert float(r[head.index("dtn_plus")]) == pytest.approx(m / R, rel=1e-8)
        assert float(r[head.index("neg_laplacian")]) == pytest.approx((m / R) ** 2, rel=1e-8)
    ident = dict(_rows(out / "identities.csv")[1:])
    assert all(float(v) < 1e-10 for v in ident.values())


@pytest.mark.parametrize("cmd", ["pressure-test", "energy", "convergence"])
def test_diagnostic_commands_run(tmp_path, cmd):
    out = tmp_path / cmd
    extra = ["--n-nodes", "16", "--levels", "3"] if cmd == "convergence" else ["--n-nodes", "64"]
    assert main([cmd, "--output-dir", str(out), "--gamma", "mode:2,0.2"] + extra) == EXIT_OK
    assert (out / "manifest.json").exists()
    if cmd == "pressure-test":
        vals = {k: float(v) for k, v in _rows(out / "pressure.csv")[1:]}
        assert vals["static_circle_jump_error"] < 1e-10
        assert vals["jump_residual"] < 1e-8
    if cmd == "convergence":
        err = [float(r[1]) for r in _rows(out / "convergence.csv")[1:]]
        assert err[-1] < 1e-14 and err[1] < err[0]
    if cmd == "energy":
        assert np.isfinite(float(_rows(out / "energy.csv")[1][-1]))


def test_bad_manifest_is_a_configuration_error(tmp_path):
    bad = tmp_path / "manifest.json"
    bad.write_text("{not json")
    assert main(["simulate", "--manifest", str(bad), "--output-dir", str(tmp_path / "o")]) == EXIT_CONFIG
