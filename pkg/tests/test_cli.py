import json
import subprocess
import sys

import pytest

from rotsync.cli import ConfigError, main, validate


def run_cli(tmp_path, command, config, seed=0, name="out"):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / name
    args = [command, "--config", str(cfg), "--out", str(out)]
    if seed is not None:
        args += ["--seed", str(seed)]
    return main(args), out


def test_classify_rotations(tmp_path):
    status, out = run_cli(tmp_path, "classify", {"system": "rotations", "N": 200, "M": 2000})
    assert status == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["results"]["verdict"] == "InvariantMeasure"
    assert (out / "spectrum.csv").exists()


def test_arar_cocycle(tmp_path):
    status, out = run_cli(tmp_path, "arar", {"system": "arar", "f": 1, "g": 2})
    assert status == 0
    assert json.loads((out / "report.json").read_text())["results"]["c"] == 1.0


def test_rotnum_words(tmp_path):
    status, out = run_cli(tmp_path, "rotnum", {"system": "rotations", "words": [[1, 2]]})
    assert status == 0
    res = json.loads((out / "report.json").read_text())["results"]
    assert len(res["generators"]) == 2 and res["words"][0]["kind"] == "Approximate"


def test_malformed_pl_is_a_config_error(tmp_path, capsys):
    bad = {"generators": [{"kind": "pl", "breakpoints": [[0.1, 0.5], [0.2, 0.3], [0.3, 0.9]]}]}
    status, out = run_cli(tmp_path, "sync", {"system": bad})
    assert status == 1
    assert not out.exists()
    assert "invalid system" in capsys.readouterr().err


def test_missing_seed(tmp_path):
    status, _ = run_cli(tmp_path, "sync", {"system": "generic"}, seed=None)
    assert status == 1


@pytest.mark.parametrize("raw", [{"system": "generic", "n": 0}, {"system": "generic", "bogus": 1},
                                 {"system": "generic", "m": 2.5}, {}])
def test_validation_rejects(raw):
    with pytest.raises(ConfigError):
        validate("sync", raw, 0, "/tmp/x")


def test_seed_range():
    for seed in (-1, 2**64, True):
        with pytest.raises(ConfigError):
            validate("fixtures", {}, seed, "/tmp/x")


def test_reports_are_byte_identical(tmp_path):
    cfg = {"system": "generic", "n": 100, "m": 8, "samples": 20}
    _, a = run_cli(tmp_path, "sync", cfg, seed=42, name="a")
    _, b = run_cli(tmp_path, "sync", cfg, seed=42, name="b")
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "spreads.csv").read_bytes() == (b / "spreads.csv").read_bytes()


def test_workers_do_not_change_results(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"system": "generic", "M": 500, "n_burn": 50}))
    outs = []
    for w in (1, 4):
        out = tmp_path / f"w{w}"
        assert main(["measure", "--config", str(cfg), "--seed", "3", "--out", str(out), "--workers", str(w)]) == 0
        outs.append((out / "samples.csv").read_bytes())
    assert outs[0] == outs[1]


def test_inconclusive_exit_status(tmp_path):
    one13 = {"generators": [{"kind": "rotation", "alpha": 1 / 13}]}
    status, out = run_cli(tmp_path, "classify", {"system": one13, "N": 200, "M": 2000})
    assert status == 2
    err = json.loads((out / "report.json").read_text())["error"]
    assert err["type"] == "Inconclusive" and err["report"]["verdict"] is None


def test_fixtures_command(tmp_path):
    status, out = run_cli(tmp_path, "fixtures", {})
    assert status == 0
    assert (out / "fixtures" / "generic.json").exists()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "rotsync.cli", "arar", "--seed", "0", "--out", str(tmp_path / "o")],
                         capture_output=True, text=True)
    assert out.returncode == 0
