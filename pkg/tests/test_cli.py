import json

import numpy as np
import pytest

from elmpc import storage
from elmpc.cli import main
from elmpc.plots import PLOT_FILES

SHORT = """
simulate:
  scenario:
    duration: 5.0
collect:
  n_samples: 400
  n_test: 100
"""


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    cfg = root / "short.yaml"
    cfg.write_text(SHORT)
    c = ["--config", str(cfg)]
    assert main(["collect", *c, "--out", str(root / "collect")]) == 0
    assert main(["train", str(root / "collect" / "dataset.csv"), *c, "--out", str(root / "train")]) == 0
    assert main(["simulate", *c, "--out", str(root / "base")]) == 0
    assert main(["simulate", *c, "--mode", "compensated", "--model", str(root / "train" / "model.npz"),
                 "--out", str(root / "comp"), "--landmarks", "80,200"]) == 0
    assert main(["compare", str(root / "base" / "log.csv"), str(root / "comp" / "log.csv"),
                 "--out", str(root / "cmp"), "--landmarks", "80"]) == 0
    return root, c


def test_collect_outputs(pipeline):
    root, _ = pipeline
    data = storage.read_dataset_csv(root / "collect" / "dataset.csv")
    assert len(data) == 400
    m = json.loads((root / "collect" / "manifest.json").read_text())
    assert m["command"] == "collect" and m["samples"] == 400
    assert m["outputs"]["dataset.csv"] == storage.sha256_file(root / "collect" / "dataset.csv")


def test_train_report(pipeline, capsys):
    root, c = pipeline
    report = json.loads((root / "train" / "metrics.json").read_text())
    assert (report["n_train"], report["n_test"]) == (300, 100)
    assert main(["train", str(root / "collect" / "dataset.csv"), *c, "--out", str(root / "train2")]) == 0
    assert "split: 300 train / 100 test" in capsys.readouterr().out
    assert (root / "train" / "model.npz").read_bytes() == (root / "train2" / "model.npz").read_bytes()


def test_simulate_columns(pipeline):
    root, _ = pipeline
    base = storage.read_log_csv(root / "base" / "log.csv")
    comp = storage.read_log_csv(root / "comp" / "log.csv")
    assert np.all(base["u_c"] == 0.0) and np.any(comp["u_c"] != 0.0)
    metrics = json.loads((root / "comp" / "metrics.json").read_text())
    assert metrics["landmarks"]["80.0"] is not None and metrics["landmarks"]["200.0"] is None


def test_compare_outputs(pipeline):
    root, _ = pipeline
    names = sorted(p.name for p in (root / "cmp").glob("*.svg"))
    assert names == sorted(PLOT_FILES)
    report = json.loads((root / "cmp" / "report.json").read_text())
    assert set(report["reduction_percent"]) >= {"max_lateral", "rms_lateral", "landmark_80"}
    assert (root / "cmp" / "comparison.csv").exists()


def test_compare_with_itself_is_zero(pipeline, tmp_path):
    root, _ = pipeline
    log = str(root / "base" / "log.csv")
    assert main(["compare", log, log, "--out", str(tmp_path), "--landmarks", "80"]) == 0
    red = json.loads((tmp_path / "report.json").read_text())["reduction_percent"]
    assert all(v == 0.0 for v in red.values())


def test_outputs_are_reproducible(pipeline, tmp_path):
    root, c = pipeline
    assert main(["simulate", *c, "--mode", "compensated", "--model", str(root / "train" / "model.npz"),
                 "--out", str(tmp_path / "comp"), "--landmarks", "80,200"]) == 0
    for name in ("log.csv", "log.npz", "metrics.json"):
        assert (tmp_path / "comp" / name).read_bytes() == (root / "comp" / name).read_bytes()
    assert main(["compare", str(root / "base" / "log.csv"), str(root / "comp" / "log.csv"),
                 "--out", str(tmp_path / "cmp"), "--landmarks", "80"]) == 0
    for name in (*PLOT_FILES, "comparison.csv", "report.json"):
        assert (tmp_path / "cmp" / name).read_bytes() == (root / "cmp" / name).read_bytes()
    assert main(["collect", *c, "--out", str(tmp_path / "collect")]) == 0
    a, b = tmp_path / "collect" / "dataset.csv", root / "collect" / "dataset.csv"
    assert storage.sha256_file(a) == storage.sha256_file(b)


def test_compare_refuses_different_scenarios(pipeline, tmp_path):
    root, _ = pipeline
    other = tmp_path / "other.yaml"
    other.write_text("simulate:\n  scenario:\n    duration: 2.0\n")
    assert main(["simulate", "--config", str(other), "--out", str(tmp_path / "o")]) == 0
    code = main(["compare", str(root / "base" / "log.csv"), str(tmp_path / "o" / "log.csv"), "--out", str(tmp_path / "x")])
    assert code == 2


def test_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--mode", "compensated", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_malformed_config_exits_with_diagnostic(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("mpc:\n  Np: [\n")
    assert main(["collect", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "bad.yaml:" in capsys.readouterr().err


def test_bad_dataset_rows_exit_2(tmp_path, capsys):
    p = tmp_path / "d.csv"
    p.write_text("X,Y,phi,r,vx,vy,s_fl,s_fr,e\n1,2\n")
    assert main(["train", str(p), "--out", str(tmp_path / "t")]) == 2
    assert "line" in capsys.readouterr().err


def test_simulation_abort_exit_3(tmp_path):
    cfg = tmp_path / "c.yaml"
    # no steering authority: the offset run drifts far away and diverges
    cfg.write_text("mpc: {u_min: -1.0e-9, u_max: 1.0e-9}\nsimulate:\n  scenario:\n"
                   "    path: {kind: straight}\n    duration: 30.0\n    phi0: 0.5\n    speed: 20.0\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["aborted"]
