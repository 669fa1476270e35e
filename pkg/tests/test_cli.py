import json
import math
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from hypertess import cli
from hypertess.measure import ProcessSample

QUICK = {
    "sample": ["--d", "2", "--gamma", "2", "--R", "2"],
    "crossing": ["--gamma", "2", "--R", "3", "--n", "50"],
    "sweep": ["--R", "3", "--gammas", "1:4:1", "--n", "50"],
    "twopoint": ["--d", "3", "--gamma", "1", "--s", "2", "--n", "2000"],
    "vertexint": ["--gamma", "1", "--n", "20"],
    "cells2d": ["--R", "3", "--n", "3"],
    "sections": ["--n", "100"],
    "mixing": ["--separations", "0,4,20"],
    "encounter": ["--R", "5", "--n", "5", "--walls"],
    "forest": ["--R", "5", "--intensity", "0.05"],
    "render": ["--R", "2", "--gamma", "2"],
    "selftest": [],
}


def run(argv, tmp_path, name="out.txt"):
    path = tmp_path / name
    code = cli.main(argv + ["--out", str(path)])
    return code, path.read_text() if path.exists() else None


def payload(text):
    """Output without its provenance line."""
    return text.split("\n", 1)[1] if not text.startswith("<") else text.split("-->", 1)[1]


@pytest.mark.parametrize("cmd", sorted(QUICK))
def test_every_command_runs_and_is_deterministic(cmd, tmp_path):
    c1, a = run([cmd] + QUICK[cmd] + ["--seed", "3"], tmp_path, "a")
    c2, b = run([cmd] + QUICK[cmd] + ["--seed", "3"], tmp_path, "b")
    assert c1 == c2 == 0
    assert a == b
    assert "hypertess" in a.splitlines()[0] or "hypertess" in a[:400]
    assert "seed=3" in a[:400]


def test_twopoint_jsonl(tmp_path):
    code, text = run(["twopoint", "--d", "3", "--gamma", "1", "--s", "2", "--n", "1000", "--seed", "1"], tmp_path)
    assert code == 0
    lines = [json.loads(x) for x in text.splitlines()]
    assert "provenance" in lines[0]
    rep = lines[1]
    assert rep["name"] == "two_point"
    assert rep["target"] == pytest.approx(math.exp(-2))
    assert {"params", "estimate", "se", "n"} <= set(rep)


def test_sweep_csv_header(tmp_path):
    code, text = run(["sweep", "--R", "3", "--gammas", "1,2", "--n", "20", "--seed", "2"], tmp_path)
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("# hypertess")
    assert lines[1] == "gamma,p_hat,se,n,R,h,indeterminate_fraction"
    assert len(lines) == 4


def test_sample_roundtrip(tmp_path):
    code, text = run(["sample", "--gamma", "2", "--R", "2", "--seed", "4"], tmp_path)
    assert code == 0
    S = ProcessSample.from_text(payload(text))
    assert S.d == 2 and S.window_radius == 2.0


def test_render_svg_parses(tmp_path):
    code, text = run(["render", "--R", "3", "--gamma", "1", "--seed", "5", "--encounter-r", "1.9"], tmp_path)
    assert code == 0
    root = ET.fromstring(text[text.index("<svg"):] if not text.startswith("<?xml") else text)
    assert root.tag.endswith("svg")
    assert root.get("viewBox") == "0 0 1000 1000"


def test_render_from_sample_file(tmp_path):
    run(["sample", "--gamma", "2", "--R", "2", "--seed", "6"], tmp_path, "s.txt")
    code, text = run(["render", "--sample", str(tmp_path / "s.txt")], tmp_path, "r.svg")
    assert code == 0 and "<svg" in text
    run(["sample", "--d", "3", "--R", "2", "--seed", "6"], tmp_path, "s3.txt")
    code, _ = run(["render", "--sample", str(tmp_path / "s3.txt")], tmp_path, "r3.svg")
    assert code == 2


def test_usage_errors_exit_2(tmp_path, capsys):
    assert cli.main(["nosuch"]) == 2
    assert cli.main(["twopoint", "--bogus", "1"]) == 2
    assert cli.main(["twopoint", "--s", "0", "--n", "10"]) == 2
    assert cli.main(["sweep", "--gammas", "3:1:0.5", "--n", "5"]) == 2
    assert "usage" in capsys.readouterr().err


def test_domain_errors_exit_1(tmp_path, capsys):
    # epsilon violates a wall bound
    assert cli.main(["encounter", "--epsilon", "0.3", "--n", "2"]) == 1
    assert "epsilon" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\ngamma = 2.5\nn = 300\ns = 0.5\n")
    _, a = run(["twopoint", "--config", str(cfg), "--seed", "1"], tmp_path, "a")
    rep = json.loads(a.splitlines()[1])
    assert rep["params"]["gamma"] == 2.5 and rep["n"] == 300 and rep["params"]["s"] == 0.5
    _, b = run(["twopoint", "--config", str(cfg), "--gamma", "1.5", "--seed", "1"], tmp_path, "b")
    rep = json.loads(b.splitlines()[1])
    assert rep["params"]["gamma"] == 1.5 and rep["n"] == 300
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert cli.main(["twopoint", "--config", str(bad)]) == 2
    bad.write_text("no equals sign\n")
    assert cli.main(["twopoint", "--config", str(bad)]) == 2


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERTESS_SEED", "11")
    _, a = run(["twopoint", "--n", "500"], tmp_path, "a")
    _, b = run(["twopoint", "--n", "500", "--seed", "11"], tmp_path, "b")
    assert a == b and "seed=11" in a
    monkeypatch.setenv("HYPERTESS_SEED", "x")
    assert cli.main(["twopoint", "--n", "5"]) == 2


def test_jobs_do_not_change_payload(tmp_path):
    base = ["sweep", "--R", "3", "--gammas", "1:4:1", "--n", "60", "--seed", "8"]
    _, a = run(base + ["--jobs", "1"], tmp_path, "a")
    _, b = run(base + ["--jobs", "2"], tmp_path, "b")
    assert payload(a) == payload(b)


def test_selftest_passes(tmp_path):
    code, text = run(["selftest"], tmp_path)
    assert code == 0
    lines = payload(text).splitlines()
    assert lines and all(x.startswith("PASS") for x in lines)


def test_stdout_default(capsys):
    assert cli.main(["mixing", "--separations", "0,1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# hypertess") and "separation,mu_joint,p_disjoint" in out


@pytest.mark.skipif(shutil.which("hypertess") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["hypertess", "mixing", "--separations", "0"], capture_output=True, text=True)
    assert p.returncode == 0 and "p_disjoint" in p.stdout
    p = subprocess.run([sys.executable, "-m", "hypertess.cli", "--version"], capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.startswith("hypertess")
