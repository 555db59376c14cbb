import json

import numpy as np
import pytest

from homconv.cli import EXIT_CONFIG, EXIT_OK, main


@pytest.fixture
def toy_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 5))
    y = (X[:, 0] > 0).astype(int)
    lines = [",".join(f"f{j}" for j in range(5)) + ",label"]
    for row, label in zip(X, y):
        lines.append(",".join(f"{v:.6f}" for v in row) + f",c{label}")
    path = tmp_path / "toy.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_run_subcommand(toy_csv, tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = main(["run", "--dataset", f"csv:{toy_csv}", "--variant", "mean",
                 "--budget", "1", "--seeds", "12",
                 "--out", str(out_dir),
                 "--config", _fast_train_config(tmp_path)])
    captured = capsys.readouterr().out
    assert code == EXIT_OK
    assert "aggregate:" in captured
    assert (out_dir / "per_seed.csv").exists()
    assert (out_dir / "summary.json").exists()


def test_run_requires_dataset(capsys):
    assert main(["run", "--budget", "1"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_run_bad_dataset_source(capsys):
    assert main(["run", "--dataset", "ftp:whatever", "--budget", "1"]) == EXIT_CONFIG


def test_tmfg_subcommand(toy_csv, capsys):
    code = main(["tmfg", "--dataset", f"csv:{toy_csv}", "--replicas", "10"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    header = out.splitlines()[0]
    assert "n=5" in header and "edges=9" in header  # 3n-6 for n=5
    assert len(out.splitlines()) == 10  # header + 9 edges


def test_families_subcommand(toy_csv, capsys):
    code = main(["families", "--dataset", f"csv:{toy_csv}", "--replicas", "10"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "tetrahedra (2):" in out


def test_verify_subcommand(toy_csv, capsys):
    code = main(["verify", "--dataset", f"csv:{toy_csv}", "--replicas", "10"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "chordal: pass" in out


def test_verify_missing_file(capsys):
    assert main(["verify", "--dataset", "csv:/nonexistent.csv"]) == EXIT_CONFIG


def _fast_train_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(
        {"train_config": {"max_epochs": 10, "patience": 3}, "label_column": "label"}))
    return str(path)
