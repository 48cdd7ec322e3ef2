import json
import subprocess
import sys

import pytest

from mfflow.cli import SCHEMA, emit_config, parse_config, resolve_config, run


def test_fixedpoint_free(outdir, capsys):
    assert run(["fixedpoint", "--f2", "1.0", "--n-max", "40"]) == 0
    rows = (outdir / "fixedpoint.csv").read_text().splitlines()
    assert rows[0] == "system,n,l,mu,value"
    assert [r.split(",")[-1] for r in rows[2:]] == ["0"] * 19
    assert "nonzero(n>=4)=0" in capsys.readouterr().out


def test_flow_geom2_strict(outdir):
    argv = "flow --family beta --delta 0.25 --beta 0.25 --mu-max 10 --n-max 16 --check geom2 --strict".split()
    assert run(argv) == 0
    doc = json.loads((outdir / "flow_geom2.json").read_text())
    assert doc["summary"]["failures"] == 0


def test_strict_failure_exit(outdir):
    argv = "flow --delta 2 --beta 1 --K 1 --n-max 6 --check geom2".split()
    assert run(argv) == 0
    assert run(argv + ["--strict"]) == 1


def test_landau(capsys):
    assert run(["landau", "--g0", "0.1", "--beta", "2"]) == 0
    assert "lambda_L = 5" in capsys.readouterr().out


def test_usage_and_numeric_errors(outdir):
    assert run(["flow", "--n-max", "7"]) == 2
    assert run(["bogus"]) == 2
    assert run(["flow", "--check", "nope"]) == 2
    assert run(["flow", "--delta", "abc"]) == 2
    assert run(["flow", "--config", str(outdir / "missing.cfg")]) == 2
    assert run(["onepi", "--delta", "0.5", "--n-max", "4", "--grid", "2"]) == 3
    assert run(["flow", "--family", "const", "--f2", "1e200", "--n-max", "8", "--l-max", "0", "--grid", "1"]) == 3


def test_config_roundtrip_and_precedence(outdir):
    for cmd in SCHEMA:
        cfg = resolve_config(cmd, {}, {})
        assert parse_config(emit_config(cfg)) == {k: v for k, v in cfg.items() if v is not None}
    path = outdir / "s.cfg"
    path.write_text("command = flow\nn_max = 8\ndelta = 1/2  # comment\ncheck = geom2\n")
    assert run(["flow", "--config", str(path), "--n-max", "6"]) == 0
    doc = json.loads((outdir / "flow.json").read_text())
    assert doc["n_max"] == 6 and doc["params"]["family"]["delta_end"] == 0.5
    assert (outdir / "flow_geom2.json").exists()
    path.write_text("command = onepi\n")
    assert run(["flow", "--config", str(path)]) == 2


def test_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["flow", "--n-max", "10", "--out", str(d), "--check", "geom2", "--quiet"]) == 0
    for name in ("flow.csv", "flow.json", "flow_geom2.json", "flow_geom2.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_rational_backend_output(outdir):
    assert run(["flow", "--backend", "rational", "--grid", "3", "--n-max", "6", "--l-max", "1"]) == 0
    rows = (outdir / "flow.csv").read_text().splitlines()
    assert any("/" in r.split(",")[-1] for r in rows[1:])


@pytest.mark.parametrize(
    "argv",
    [
        ["sine", "--n-max", "8", "--l-max", "2", "--check", "boundedaction"],
        ["trivial", "--M", "20", "--N", "16", "--nullin-n-max", "10", "--check", "g0g1,gnk,trivex"],
        ["onepi", "--n-max", "8", "--l-max", "2", "--grid", "3", "--check", "pi4,jv,jlv", "--strict"],
        ["uv-scan", "--n-max", "8"],
        ["bounds", "--lemma", "prodh", "--strict"],
        ["bounds", "--lemma", "geom2", "--scan", "delta", "--values", "0.25,0.5", "--n-max", "8", "--grid", "4"],
    ],
)
def test_other_commands(outdir, argv):
    assert run(argv) == 0


def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "mfflow.cli", "landau", "--g0", "0.1", "--beta", "2", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0 and "lambda_L = 5" in out.stdout
