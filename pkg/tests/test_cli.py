import json
import re

import numpy as np
import pytest

from qconsensus import network
from qconsensus.cli import main
from qconsensus.engine import codec_factory, run_consensus, save_archive
from qconsensus.schedule import progressive_schedule


def test_schedule_path3(capsys):
    assert main(["schedule", "--nodes", "3", "--topology", "path", "--bits", "2"]) == 0
    out = capsys.readouterr().out
    alpha = float(re.search(r"alpha\s+(\S+)", out).group(1))
    gamma = float(re.search(r"gamma\s+(\S+)", out).group(1))
    assert alpha == pytest.approx(0.405465, abs=1e-6)
    assert gamma == pytest.approx(0.5 * np.log(13 / 36), abs=1e-6)
    assert re.search(r"min_bits\s+1", out)


def test_schedule_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["schedule", "--nodes", "3", "--topology", "path", "--bits", "2", "--horizon", "4",
                 "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 6


def test_bits_zero_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--bits", "0"])
    assert exc.value.code == 2


def test_unknown_codec_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--codec", "foo"])
    assert exc.value.code == 2


def test_infeasible_exponential_schedule_is_data_error(capsys):
    # complete graph on 6 nodes with Laplacian steps: lambda2 small, one bit too few
    code = main(["schedule", "--nodes", "6", "--topology", "complete", "--weights", "laplacian",
                 "--laplacian-a", "0.15", "--bits", "1", "--source", "exponential"])
    assert code == 1
    assert "infeasible" in capsys.readouterr().err


def test_simulate_writes_table(tmp_path):
    out = tmp_path / "t.csv"
    code = main(["simulate", "--nodes", "10", "--bits", "2,4", "--trials", "2", "--horizon", "5",
                 "--codec", "progq,unifq", "--seed", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("codec,n,weights,t") and len(lines) == 1 + 2 * 2 * 6


def test_simulate_config_file_overridden_by_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 8, "bits": [3], "trials": 1, "horizon": 4, "codecs": ["unifq"]}))
    out = tmp_path / "t.json"
    assert main(["simulate", "--config", str(cfg), "--horizon", "2", "--out", str(out), "--format", "json"]) == 0
    doc = json.loads(out.read_text())
    assert {r["t"] for r in doc["rows"]} == {0, 1, 2} and {r["n"] for r in doc["rows"]} == {3}


def test_simulate_bad_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["simulate", "--config", str(cfg)]) == 2


def test_spectral_loaded_graph(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(network.path_graph(3).to_json())
    assert main(["spectral", "--graph", str(path)]) == 0
    out = capsys.readouterr().out
    assert float(re.search(r"lambda2\s+(\S+)", out).group(1)) == pytest.approx(2 / 3, abs=1e-9)


def test_replay_archive(tmp_path, capsys):
    g, _ = network.connected_rgg(8, 0.6, 4)
    w = network.metropolis_weights(g)
    z0 = np.random.default_rng(0).uniform(0, 1, 8)
    sched = progressive_schedule(w, 3, float(z0.max()), 1.0, 20)
    tr = run_consensus(w, z0, codec_factory("progressive", 3), sched, 20)
    path = tmp_path / "a.npz"
    save_archive(path, tr, w)
    assert main(["replay", str(path)]) == 0
    assert "OK" in capsys.readouterr().out


def test_replay_missing_file(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "nope.npz")]) == 1
