"""Command-line front end for the full mask-correlation pipeline.

Commands: gen-data, train-model, attack, train-masks, id, correlate,
spiral-demo, pipeline. Every artifact a command writes embeds the resolved
run configuration (binary checkpoints get a JSON sidecar instead). Config
resolution: a flag given on the command line wins, then a key of the same
name in the --config JSON file, then the built-in default. CSV reports
start with one '#' comment line carrying the config echo; numeric readers
that honor '#' comments parse them unchanged.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import AttackConfig, min_norm_linf, pgd_linf
from .data import (
    ImageBatch,
    SpectralDatasetConfig,
    SpiralConfig,
    gen_hypercube,
    gen_spectral_dataset,
    gen_spiral,
    load_mask_set,
    save_mask_set,
)
from .idcorr import correlate, pearson_r2, twonn
from .masks import MaskTrainConfig, train_mask_set
from .model import (
    TrainConfig,
    accuracy,
    load_classifier,
    parameter_checksum,
    predict,
    save_classifier,
    train_classifier,
)

logger = logging.getLogger(__name__)

MASKSET_MAGIC = b"FMSK"


# ---------------------------------------------------------------- helpers

def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge CLI flags, --config file entries, and built-in defaults."""
    from_file = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as f:
            from_file = json.load(f)
        unknown = set(from_file) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    resolved = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in from_file:
            resolved[key] = from_file[key]
        else:
            resolved[key] = default
    return resolved


def _run_config(command: str, params: dict) -> dict:
    return {"command": command, "package_version": __version__, **params}


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _write_csv(path, header: list[str], rows: list[list], run_config: dict) -> None:
    lines = ["# " + json.dumps(run_config)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _save_dataset(path, train: ImageBatch, test: ImageBatch, run_config: dict) -> None:
    np.savez(path, train_images=train.images, train_labels=train.labels,
             test_images=test.images, test_labels=test.labels,
             config=json.dumps(run_config))


def _load_dataset(path) -> tuple[ImageBatch, ImageBatch]:
    with np.load(path, allow_pickle=False) as z:
        train = ImageBatch(z["train_images"], z["train_labels"])
        test = ImageBatch(z["test_images"], z["test_labels"])
    return train, test


def _load_points(path) -> np.ndarray:
    """Rows for the estimator: a mask-set file or a numeric CSV."""
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == MASKSET_MAGIC:
        return load_mask_set(path).masks.astype(np.float64)
    pts = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return pts


def _svg_scatter(path, panels, run_config: dict) -> None:
    """panels: list of (title, N x 2 points). One row of scatter plots."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "freqmask"
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 5))
    if len(panels) == 1:
        axes = [axes]
    for ax, (title, pts) in zip(axes, panels):
        ax.scatter(pts[:, 0], pts[:, 1], s=2, alpha=0.6)
        ax.set_title(title)
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, format="svg",
                metadata={"Date": None, "Description": json.dumps(run_config)})
    plt.close(fig)


def _svg_hist(path, series: dict, xlabel: str, run_config: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "freqmask"
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, values in series.items():
        ax.hist(values, bins=30, range=(0.0, 1.0), alpha=0.6, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg",
                metadata={"Date": None, "Description": json.dumps(run_config)})
    plt.close(fig)


def _workers(value) -> int:
    if value is None:
        return os.cpu_count() or 1
    return max(1, int(value))


# ---------------------------------------------------------------- commands

GEN_DEFAULTS = {
    "kind": "spectral", "seed": 0,
    "n_train": 500, "n_test": 200, "classes": 4, "size": 16,
    "amplitude": 1.0, "noise": None, "signatures": None,
    "n": 5000, "turns": 2.0, "radial_rate": 1.0, "dim": 2,
}


def cmd_gen_data(args) -> int:
    p = _resolve(args, GEN_DEFAULTS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_config = _run_config("gen-data", p)

    if p["kind"] == "spectral":
        noise = 2.8 if p["noise"] is None else p["noise"]
        kwargs = {
            "n_train": p["n_train"], "n_test": p["n_test"],
            "n_classes": p["classes"], "shape": (1, p["size"], p["size"]),
            "amplitude": p["amplitude"], "noise": noise, "seed": p["seed"],
        }
        if p["signatures"] is not None:
            kwargs["signatures"] = tuple(
                tuple(tuple(bin_) for bin_ in sig) for sig in p["signatures"])
        config = SpectralDatasetConfig(**kwargs)
        train, test = gen_spectral_dataset(config)
        _save_dataset(out / "dataset.npz", train, test, run_config)
        manifest = {"config": run_config, "files": ["dataset.npz"],
                    "n_train": len(train), "n_test": len(test),
                    "shape": list(train.shape)}
        _write_json(out / "manifest.json", manifest)
        print(f"wrote {out / 'dataset.npz'} ({len(train)} train / {len(test)} test)")
        return 0

    if p["kind"] == "spiral":
        noise = 1e-5 if p["noise"] is None else p["noise"]
        config = SpiralConfig(n_points=p["n"], turns=p["turns"],
                              radial_rate=p["radial_rate"], noise=noise,
                              seed=p["seed"])
        pts = gen_spiral(config)
    elif p["kind"] == "hypercube":
        pts = gen_hypercube(p["n"], p["dim"], p["seed"])
    else:
        raise ValueError(f"unknown dataset kind {p['kind']!r}")

    np.savetxt(out / "points.csv", pts, delimiter=",", fmt="%.17g")
    _write_json(out / "manifest.json",
                {"config": run_config, "files": ["points.csv"],
                 "n": len(pts), "d": pts.shape[1]})
    print(f"wrote {out / 'points.csv'} ({pts.shape[0]} x {pts.shape[1]})")
    return 0


TRAIN_DEFAULTS = {
    "epochs": 150, "batch_size": 64, "learning_rate": 0.005,
    "hidden": 64, "seed": 0,
}


def cmd_train_model(args) -> int:
    p = _resolve(args, TRAIN_DEFAULTS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_config = _run_config("train-model", {**p, "data": str(args.data)})

    train, test = _load_dataset(args.data)
    config = TrainConfig(epochs=p["epochs"], batch_size=p["batch_size"],
                         learning_rate=p["learning_rate"], seed=p["seed"])
    model = train_classifier(train.images, train.labels, config,
                             test.images, test.labels, hidden_dim=p["hidden"])
    save_classifier(model, out / "model.ckpt")
    train_acc = accuracy(model, train.images, train.labels)
    test_acc = accuracy(model, test.images, test.labels)
    _write_json(out / "model.json", {
        "config": run_config,
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "parameter_checksum": parameter_checksum(model),
    })
    print(f"train accuracy {train_acc:.4f}, test accuracy {test_acc:.4f}")
    return 0


ATTACK_DEFAULTS = {
    "method": "pgd", "epsilon": 0.01, "steps": 40, "eps_max": 0.5,
    "split": "test", "seed": 0,
}


def _run_attack(model, batch: ImageBatch, method: str, config: AttackConfig):
    if method == "pgd":
        return pgd_linf(model, batch.images, batch.labels, config)
    if method == "min-norm":
        return min_norm_linf(model, batch.images, batch.labels, config)
    raise ValueError(f"unknown attack method {method!r}")


def cmd_attack(args) -> int:
    p = _resolve(args, ATTACK_DEFAULTS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_config = _run_config("attack", {**p, "model": str(args.model),
                                        "data": str(args.data)})

    model = load_classifier(args.model)
    train, test = _load_dataset(args.data)
    batch = train if p["split"] == "train" else test
    config = AttackConfig(epsilon=p["epsilon"], steps=p["steps"],
                          eps_max=p["eps_max"], seed=p["seed"])
    adv = _run_attack(model, batch, p["method"], config)

    correct = predict(model, batch.images) == batch.labels
    on_correct = float(adv.success[correct].mean()) if correct.any() else 0.0
    np.savez(out / "adversarial.npz", images=adv.images,
             original_labels=adv.original_labels,
             adversarial_labels=adv.adversarial_labels,
             success=adv.success, norms=adv.norms,
             config=json.dumps(run_config))
    _write_json(out / "adversarial.json", {
        "config": run_config,
        "attack": p["method"],
        **adv.summary(),
        "success_rate_on_correct": on_correct,
    })
    print(f"{p['method']} success rate {adv.success.mean():.3f} "
          f"({on_correct:.3f} on correctly classified)")
    return 0


MASKS_DEFAULTS = {
    "kind": "EF", "method": "pgd", "epsilon": 0.01, "steps": 40,
    "l1_weight": 0.01, "learning_rate": 0.01, "min_steps": 500,
    "max_steps": 3000, "split": "test", "seed": 0, "workers": None,
    "restrict": None,
}


def cmd_train_masks(args) -> int:
    p = _resolve(args, MASKS_DEFAULTS)
    run_config = _run_config("train-masks", {**p, "model": str(args.model),
                                             "data": str(args.data)})
    model = load_classifier(args.model)
    train, test = _load_dataset(args.data)
    batch = train if p["split"] == "train" else test
    mask_config = MaskTrainConfig(l1_weight=p["l1_weight"],
                                  learning_rate=p["learning_rate"],
                                  min_steps=p["min_steps"],
                                  max_steps=p["max_steps"], seed=p["seed"])
    attack_config = None
    if p["kind"] == "AF":
        attack_config = AttackConfig(epsilon=p["epsilon"], steps=p["steps"],
                                     seed=p["seed"])
    restrict = None
    if p["restrict"] is not None:
        restrict = np.asarray(json.loads(Path(p["restrict"]).read_text()))

    mask_set = train_mask_set(model, batch.images, batch.labels, p["kind"],
                              mask_config, attack_config=attack_config,
                              attack_method=p["method"], restrict_ids=restrict,
                              workers=_workers(p["workers"]))
    mask_set.config = {**mask_set.config, "run": run_config}
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_mask_set(mask_set, args.out)
    print(f"{p['kind']} masks: {len(mask_set)} trained, "
          f"mean density {mask_set.densities.mean():.3f}, "
          f"target preserved for {mask_set.preserved.mean():.1%}")
    return 0


def cmd_id(args) -> int:
    pts = _load_points(args.input)
    estimate = twonn(pts, discard_fraction=args.discard, method=args.method)
    print(f"n={len(pts)} d_hat={estimate:.6g}")
    return 0


CORRELATE_DEFAULTS = {"shuffles": 50, "discard": 0.0, "method": "mle", "seed": 0}


def cmd_correlate(args) -> int:
    p = _resolve(args, CORRELATE_DEFAULTS)
    run_config = _run_config("correlate", {**p, "a": str(args.a), "b": str(args.b)})
    a = _load_points(args.a)
    b = _load_points(args.b)
    report = correlate(a, b, n_shuffles=p["shuffles"],
                       discard_fraction=p["discard"], seed=p["seed"],
                       method=p["method"])
    report.config = run_config
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        _write_json(args.out, report.to_dict())
    print(f"id_observed={report.id_observed:.4f} "
          f"shuffled={report.shuffled_mean:.4f}+-{report.shuffled_std:.4f} "
          f"z={report.z_score:.3f} p={report.p_value:.3g}")
    return 0


SPIRAL_DEFAULTS = {
    "n": 5000, "turns": 2.0, "radial_rate": 1.0, "noise": 1e-5,
    "shuffles": 50, "discard": 0.0, "seed": 0,
}


def cmd_spiral_demo(args) -> int:
    p = _resolve(args, SPIRAL_DEFAULTS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_config = _run_config("spiral-demo", p)

    config = SpiralConfig(n_points=p["n"], turns=p["turns"],
                          radial_rate=p["radial_rate"], noise=p["noise"],
                          seed=p["seed"])
    pts = gen_spiral(config)
    x, y = pts[:, :1], pts[:, 1:]
    r2 = pearson_r2(x, y)
    report = correlate(x, y, n_shuffles=p["shuffles"],
                       discard_fraction=p["discard"], seed=p["seed"])
    report.config = run_config

    _write_csv(out / "spiral.csv",
               ["r2", "id", "id_shuffle_mean", "id_shuffle_std", "z", "p"],
               [[r2, report.id_observed, report.shuffled_mean,
                 report.shuffled_std, report.z_score, report.p_value]],
               run_config)
    _write_json(out / "report.json", {**report.to_dict(), "r2": r2})
    shuffled_cloud = np.concatenate(
        [x, y[np.random.default_rng([p["seed"], 0]).permutation(len(y))]], axis=1)
    _svg_scatter(out / "scatter.svg",
                 [("original pairing", pts), ("one shuffle of y", shuffled_cloud)],
                 run_config)
    print(f"r2={r2:.4g} id={report.id_observed:.3f} "
          f"shuffled={report.shuffled_mean:.3f}+-{report.shuffled_std:.3f} "
          f"z={report.z_score:.2f} p={report.p_value:.3g}")
    return 0


PIPELINE_DEFAULTS = {
    "n_train": 500, "n_test": 200, "classes": 4, "size": 16,
    "amplitude": 1.0, "data_noise": 2.8, "signatures": None,
    "epochs": 150, "batch_size": 64, "learning_rate": 0.005, "hidden": 64,
    "attack_method": "pgd", "epsilon": 0.05, "attack_steps": 40,
    "l1_weight": 0.01, "mask_lr": 0.01, "min_steps": 500, "max_steps": 3000,
    "shuffles": 50, "discard": 0.0, "seed": 0, "workers": None,
}


def cmd_pipeline(args) -> int:
    p = _resolve(args, PIPELINE_DEFAULTS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_config = _run_config("pipeline", p)
    status = {"stages": {}, "ok": False}

    def run_stage(name, fn):
        try:
            result = fn()
        except Exception as exc:
            status["stages"][name] = f"failed: {exc}"
            _write_json(out / "status.json", status)
            raise
        status["stages"][name] = "ok"
        return result

    def stage_data():
        kwargs = {
            "n_train": p["n_train"], "n_test": p["n_test"],
            "n_classes": p["classes"], "shape": (1, p["size"], p["size"]),
            "amplitude": p["amplitude"], "noise": p["data_noise"],
            "seed": p["seed"],
        }
        if p["signatures"] is not None:
            kwargs["signatures"] = tuple(
                tuple(tuple(bin_) for bin_ in sig) for sig in p["signatures"])
        config = SpectralDatasetConfig(**kwargs)
        train, test = gen_spectral_dataset(config)
        _save_dataset(out / "dataset.npz", train, test, run_config)
        _write_json(out / "manifest.json",
                    {"config": run_config, "files": ["dataset.npz"],
                     "n_train": len(train), "n_test": len(test)})
        return train, test

    train, test = run_stage("gen-data", stage_data)

    def stage_model():
        config = TrainConfig(epochs=p["epochs"], batch_size=p["batch_size"],
                             learning_rate=p["learning_rate"], seed=p["seed"])
        model = train_classifier(train.images, train.labels, config,
                                 test.images, test.labels, hidden_dim=p["hidden"])
        save_classifier(model, out / "model.ckpt")
        _write_json(out / "model.json", {
            "config": run_config,
            "train_accuracy": accuracy(model, train.images, train.labels),
            "test_accuracy": accuracy(model, test.images, test.labels),
            "parameter_checksum": parameter_checksum(model),
        })
        return model

    model = run_stage("train-model", stage_model)

    def stage_attack():
        config = AttackConfig(epsilon=p["epsilon"], steps=p["attack_steps"],
                              seed=p["seed"])
        adv = _run_attack(model, test, p["attack_method"], config)
        correct = predict(model, test.images) == test.labels
        np.savez(out / "adversarial.npz", images=adv.images,
                 original_labels=adv.original_labels,
                 adversarial_labels=adv.adversarial_labels,
                 success=adv.success, norms=adv.norms,
                 config=json.dumps(run_config))
        _write_json(out / "adversarial.json", {
            "config": run_config,
            "attack": p["attack_method"],
            **adv.summary(),
            "success_rate_on_correct":
                float(adv.success[correct].mean()) if correct.any() else 0.0,
        })
        return adv, config

    adv, attack_config = run_stage("attack", stage_attack)

    def stage_masks():
        mask_config = MaskTrainConfig(l1_weight=p["l1_weight"],
                                      learning_rate=p["mask_lr"],
                                      min_steps=p["min_steps"],
                                      max_steps=p["max_steps"], seed=p["seed"])
        workers = _workers(p["workers"])
        af = train_mask_set(model, test.images, test.labels, "AF", mask_config,
                            attack_config=attack_config,
                            attack_method=p["attack_method"],
                            adversarial=adv, workers=workers)
        ef = train_mask_set(model, test.images, test.labels, "EF", mask_config,
                            restrict_ids=af.image_ids, workers=workers)
        if not np.array_equal(ef.image_ids, af.image_ids):
            raise RuntimeError("EF and AF mask sets failed to align on image ids")
        ef.config = {**ef.config, "run": run_config}
        af.config = {**af.config, "run": run_config}
        save_mask_set(ef, out / "ef.fmsk")
        save_mask_set(af, out / "af.fmsk")
        _write_csv(out / "mask_density.csv",
                   ["image_id", "ef_density", "af_density"],
                   [[int(i), float(de), float(da)] for i, de, da in
                    zip(ef.image_ids, ef.densities, af.densities)],
                   run_config)
        _svg_hist(out / "mask_density.svg",
                  {"EF": ef.densities, "AF": af.densities},
                  "mask density", run_config)
        return ef, af

    ef, af = run_stage("train-masks", stage_masks)

    def stage_correlate():
        report = correlate(ef.masks.astype(np.float64),
                           af.masks.astype(np.float64),
                           n_shuffles=p["shuffles"],
                           discard_fraction=p["discard"], seed=p["seed"])
        report.config = run_config
        _write_json(out / "correlation.json", report.to_dict())
        _write_csv(out / "summary.csv",
                   ["attack", "cosine_mean", "cosine_std", "id",
                    "id_shuffle_mean", "id_shuffle_std", "z", "p"],
                   [[p["attack_method"], report.cosine_mean, report.cosine_std,
                     report.id_observed, report.shuffled_mean,
                     report.shuffled_std, report.z_score, report.p_value]],
                   run_config)
        return report

    report = run_stage("correlate", stage_correlate)

    status["ok"] = True
    _write_json(out / "status.json", status)
    print(f"pipeline done: {len(ef)} aligned mask pairs, "
          f"id={report.id_observed:.3f} vs shuffled "
          f"{report.shuffled_mean:.3f}+-{report.shuffled_std:.3f}, "
          f"z={report.z_score:.2f} p={report.p_value:.3g}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqmask",
        description="Frequency-mask training and intrinsic-dimension "
                    "correlation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, out_kind=None):
        sp.add_argument("--seed", type=int, help="master RNG seed")
        sp.add_argument("--config", help="JSON file with defaults for this command")
        if out_kind == "dir":
            sp.add_argument("--out", required=True, help="output directory")
        elif out_kind == "file":
            sp.add_argument("--out", required=True, help="output file")

    sp = sub.add_parser("gen-data", help="generate a synthetic dataset")
    add_common(sp, "dir")
    sp.add_argument("--kind", choices=["spectral", "spiral", "hypercube"])
    sp.add_argument("--n-train", type=int, dest="n_train")
    sp.add_argument("--n-test", type=int, dest="n_test")
    sp.add_argument("--classes", type=int)
    sp.add_argument("--size", type=int, help="image height and width")
    sp.add_argument("--amplitude", type=float)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--n", type=int, help="point count (spiral, hypercube)")
    sp.add_argument("--turns", type=float)
    sp.add_argument("--radial-rate", type=float, dest="radial_rate")
    sp.add_argument("--dim", type=int, help="hypercube dimension")
    sp.set_defaults(fn=cmd_gen_data)

    sp = sub.add_parser("train-model", help="train the classifier on a dataset")
    add_common(sp, "dir")
    sp.add_argument("--data", required=True, help="dataset .npz from gen-data")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int, dest="batch_size")
    sp.add_argument("--learning-rate", type=float, dest="learning_rate")
    sp.add_argument("--hidden", type=int)
    sp.set_defaults(fn=cmd_train_model)

    sp = sub.add_parser("attack", help="run an adversarial attack on a split")
    add_common(sp, "dir")
    sp.add_argument("--model", required=True, help="classifier checkpoint")
    sp.add_argument("--data", required=True)
    sp.add_argument("--method", choices=["pgd", "min-norm"])
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--eps-max", type=float, dest="eps_max")
    sp.add_argument("--split", choices=["train", "test"])
    sp.set_defaults(fn=cmd_attack)

    sp = sub.add_parser("train-masks", help="train a family of frequency masks")
    add_common(sp, "file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--kind", choices=["EF", "AF"])
    sp.add_argument("--method", choices=["pgd", "min-norm"],
                    help="attack used for AF masks")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--lambda", type=float, dest="l1_weight",
                    help="l1 sparsity weight")
    sp.add_argument("--learning-rate", type=float, dest="learning_rate")
    sp.add_argument("--min-steps", type=int, dest="min_steps")
    sp.add_argument("--max-steps", type=int, dest="max_steps")
    sp.add_argument("--split", choices=["train", "test"])
    sp.add_argument("--workers", type=int)
    sp.add_argument("--restrict", help="JSON file with source image ids to keep")
    sp.set_defaults(fn=cmd_train_masks)

    sp = sub.add_parser("id", help="estimate the intrinsic dimension of a file")
    sp.add_argument("input", help="numeric CSV or mask-set file")
    sp.add_argument("--discard", type=float, default=0.0,
                    help="fraction of largest neighbor ratios to drop")
    sp.add_argument("--method", choices=["mle", "fit"], default="mle")
    sp.set_defaults(fn=cmd_id)

    sp = sub.add_parser("correlate", help="shuffle test between two row files")
    sp.add_argument("a", help="numeric CSV or mask-set file")
    sp.add_argument("b", help="numeric CSV or mask-set file")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--config", help="JSON file with defaults for this command")
    sp.add_argument("--shuffles", type=int)
    sp.add_argument("--discard", type=float)
    sp.add_argument("--method", choices=["mle", "fit"])
    sp.add_argument("--out", help="write the full report JSON here")
    sp.set_defaults(fn=cmd_correlate)

    sp = sub.add_parser("spiral-demo",
                        help="spiral benchmark: R^2 vs the shuffle test")
    add_common(sp, "dir")
    sp.add_argument("--n", type=int)
    sp.add_argument("--turns", type=float)
    sp.add_argument("--radial-rate", type=float, dest="radial_rate")
    sp.add_argument("--noise", type=float)
    sp.add_argument("--shuffles", type=int)
    sp.add_argument("--discard", type=float)
    sp.set_defaults(fn=cmd_spiral_demo)

    sp = sub.add_parser("pipeline",
                        help="dataset -> classifier -> attack -> masks -> "
                             "correlation, all artifacts in one directory")
    add_common(sp, "dir")
    sp.add_argument("--n-train", type=int, dest="n_train")
    sp.add_argument("--n-test", type=int, dest="n_test")
    sp.add_argument("--classes", type=int)
    sp.add_argument("--size", type=int)
    sp.add_argument("--amplitude", type=float)
    sp.add_argument("--data-noise", type=float, dest="data_noise")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int, dest="batch_size")
    sp.add_argument("--learning-rate", type=float, dest="learning_rate")
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--attack-method", choices=["pgd", "min-norm"],
                    dest="attack_method")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--attack-steps", type=int, dest="attack_steps")
    sp.add_argument("--lambda", type=float, dest="l1_weight")
    sp.add_argument("--mask-lr", type=float, dest="mask_lr")
    sp.add_argument("--min-steps", type=int, dest="min_steps")
    sp.add_argument("--max-steps", type=int, dest="max_steps")
    sp.add_argument("--shuffles", type=int)
    sp.add_argument("--discard", type=float)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(fn=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
