import json

import numpy as np
import pytest

from freqmask.cli import main
from freqmask.data import load_mask_set

from test_data import _toy_mask_set


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "gen-data" in capsys.readouterr().out


def test_argparse_rejections():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["gen-data"])  # --out is required
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["attack", "--out", "x", "--data", "y"])  # --model is required
    assert exc.value.code == 2


def test_runtime_errors_exit_one(tmp_path, capsys):
    code = main(["train-model", "--out", str(tmp_path),
                 "--data", str(tmp_path / "missing.npz")])
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_gen_data_spectral_artifacts(tmp_path):
    out = tmp_path / "a"
    assert main(["gen-data", "--out", str(out),
                 "--n-train", "16", "--n-test", "8"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["n_train"] == 16
    assert manifest["files"] == ["dataset.npz"]
    with np.load(out / "dataset.npz") as z:
        assert z["train_images"].shape == (16, 1, 16, 16)
        assert z["test_labels"].shape == (8,)
        json.loads(str(z["config"]))

    # rerunning the command reproduces the archive byte for byte
    out2 = tmp_path / "b"
    assert main(["gen-data", "--out", str(out2),
                 "--n-train", "16", "--n-test", "8"]) == 0
    assert (out / "dataset.npz").read_bytes() == (out2 / "dataset.npz").read_bytes()


def test_gen_data_point_clouds(tmp_path):
    spiral = tmp_path / "spiral"
    assert main(["gen-data", "--kind", "spiral", "--n", "50",
                 "--out", str(spiral)]) == 0
    pts = np.loadtxt(spiral / "points.csv", delimiter=",")
    assert pts.shape == (50, 2)

    cube = tmp_path / "cube"
    assert main(["gen-data", "--kind", "hypercube", "--n", "100", "--dim", "3",
                 "--out", str(cube)]) == 0
    pts = np.loadtxt(cube / "points.csv", delimiter=",")
    assert pts.shape == (100, 3)
    assert json.loads((cube / "manifest.json").read_text())["d"] == 3


def test_gen_data_classes_need_matching_signatures(tmp_path, capsys):
    code = main(["gen-data", "--out", str(tmp_path / "x"), "--classes", "2"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_config_file_precedence(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"n_train": 24, "n_test": 8}))
    out = tmp_path / "from_file"
    assert main(["gen-data", "--out", str(out), "--config", str(config)]) == 0
    assert json.loads((out / "manifest.json").read_text())["n_train"] == 24

    out = tmp_path / "flag_wins"
    assert main(["gen-data", "--out", str(out), "--config", str(config),
                 "--n-train", "12"]) == 0
    assert json.loads((out / "manifest.json").read_text())["n_train"] == 12

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["gen-data", "--out", str(tmp_path / "y"),
                 "--config", str(bad)]) == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_id_command_on_csv(tmp_path, capsys):
    cube = tmp_path / "cube"
    assert main(["gen-data", "--kind", "hypercube", "--n", "3000", "--dim", "2",
                 "--out", str(cube), "--seed", "2"]) == 0
    capsys.readouterr()
    assert main(["id", str(cube / "points.csv")]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("n=3000 d_hat=")
    assert 1.9 <= float(out.split("d_hat=")[1]) <= 2.1
    assert main(["id", str(cube / "points.csv"),
                 "--discard", "0.1", "--method", "fit"]) == 0


def test_id_command_rejects_degenerate_input(tmp_path, capsys):
    path = tmp_path / "two.csv"
    path.write_text("0.0,0.0\n1.0,1.0\n")
    assert main(["id", str(path)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_id_command_reads_mask_sets(tmp_path, capsys):
    from freqmask.data import save_mask_set

    path = tmp_path / "set.fmsk"
    save_mask_set(_toy_mask_set(), path)
    assert main(["id", str(path)]) == 0
    assert capsys.readouterr().out.startswith("n=3 ")


def test_correlate_command(tmp_path, capsys):
    rng = np.random.default_rng(7)
    a = rng.uniform(-1.0, 1.0, (120, 2))
    b = np.column_stack([np.sin(np.pi * a[:, 0]), a[:, 0] * a[:, 1]])
    a_path, b_path = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(a_path, a, delimiter=",")
    np.savetxt(b_path, b, delimiter=",")
    report_path = tmp_path / "report.json"
    assert main(["correlate", str(a_path), str(b_path),
                 "--shuffles", "8", "--out", str(report_path)]) == 0
    assert "id_observed=" in capsys.readouterr().out
    report = json.loads(report_path.read_text())
    assert report["n_shuffles"] == 8
    assert 0.0 <= report["p_value"] <= 1.0
    assert report["config"]["command"] == "correlate"


def test_spiral_demo_artifacts_and_determinism(tmp_path):
    out = tmp_path / "demo"
    args = ["spiral-demo", "--n", "400", "--shuffles", "8"]
    assert main(args + ["--out", str(out)]) == 0

    lines = (out / "spiral.csv").read_text().splitlines()
    config = json.loads(lines[0][2:])
    assert lines[0].startswith("# ")
    assert config["command"] == "spiral-demo"
    assert config["n"] == 400
    assert lines[1] == "r2,id,id_shuffle_mean,id_shuffle_std,z,p"
    r2, id_obs, shuffle_mean, _, z, p = map(float, lines[2].split(","))
    assert r2 < 0.05
    assert 0.8 <= id_obs <= 1.1
    assert shuffle_mean > 1.5
    assert z < -3.0
    assert p < 1e-3

    report = json.loads((out / "report.json").read_text())
    assert report["id_observed"] == id_obs
    svg = (out / "scatter.svg").read_text()
    assert svg.lstrip().startswith("<?xml")

    again = tmp_path / "again"
    assert main(args + ["--out", str(again)]) == 0
    for name in ("spiral.csv", "report.json"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_command_chain_end_to_end(tmp_path, capsys):
    """gen-data -> train-model -> attack -> train-masks -> correlate."""
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "classes": 2,
        "signatures": [[[0, 2, 3]], [[0, 5, 1]]],
        "n_train": 64, "n_test": 32, "size": 8,
    }))
    data_dir = tmp_path / "data"
    assert main(["gen-data", "--out", str(data_dir),
                 "--config", str(config)]) == 0
    dataset = data_dir / "dataset.npz"

    model_dir = tmp_path / "model"
    assert main(["train-model", "--out", str(model_dir), "--data", str(dataset),
                 "--epochs", "40", "--hidden", "16"]) == 0
    model_report = json.loads((model_dir / "model.json").read_text())
    assert model_report["test_accuracy"] >= 0.9
    model = model_dir / "model.ckpt"
    assert model.exists()

    attack_dir = tmp_path / "attack"
    assert main(["attack", "--out", str(attack_dir), "--model", str(model),
                 "--data", str(dataset), "--epsilon", "0.2"]) == 0
    attack_report = json.loads((attack_dir / "adversarial.json").read_text())
    assert attack_report["success_rate_on_correct"] >= 0.9
    assert (attack_dir / "adversarial.npz").exists()

    keep = tmp_path / "keep.json"
    keep.write_text(json.dumps(list(range(8))))
    ef_path = tmp_path / "ef.fmsk"
    af_path = tmp_path / "af.fmsk"
    mask_args = ["--model", str(model), "--data", str(dataset),
                 "--min-steps", "40", "--max-steps", "150",
                 "--restrict", str(keep)]
    assert main(["train-masks", "--out", str(ef_path), "--kind", "EF",
                 *mask_args]) == 0
    assert main(["train-masks", "--out", str(af_path), "--kind", "AF",
                 "--epsilon", "0.2", *mask_args]) == 0
    out = capsys.readouterr().out
    assert "EF masks:" in out and "AF masks:" in out

    ef = load_mask_set(ef_path)
    af = load_mask_set(af_path)
    assert 1 <= len(ef) <= 8
    assert ef.image_ids.max() < 8
    assert np.isin(af.image_ids, ef.image_ids).all()
    assert ef.preserved.mean() >= 0.8
    assert af.preserved.mean() >= 0.8
    assert ef.config["run"]["command"] == "train-masks"

    report_path = tmp_path / "corr.json"
    assert main(["correlate", str(ef_path), str(af_path),
                 "--shuffles", "5", "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["cosine_mean"] is not None
    assert len(report["shuffled_ids"]) == 5
