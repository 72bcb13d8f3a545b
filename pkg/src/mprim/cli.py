"""Command-line entry point.

Subcommands:
  generate   synthesize a demonstration dataset (JSONL + manifest)
  train      fit a model on a dataset (checkpoint + loss CSV + manifest)
  eval       grouped metrics and plot artifacts for a checkpoint

Every command writes a JSON run manifest listing its arguments, resolved
configuration, seed and the sha256 of every input and output file, so a
run can be reproduced from the manifest alone. Exit codes: 0 success,
2 usage error, 1 runtime failure. The seed falls back to the MPRIM_SEED
environment variable when --seed is not given.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from mprim import checkpoint, plots, training
from mprim.dataset import (RTP_DEFAULT_COUNTS, WPP_DEFAULT_TRIALS, WPP_SPLITS,
                           apply_split, generate_rtp, generate_wpp,
                           load_jsonl, save_jsonl)
from mprim.kinematics import default_chain, fk_positions, load_chain


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, command, argv, config, seed, inputs, outputs):
    doc = {
        "schema": 1,
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_seed(value):
    if value is not None:
        return value
    env = os.environ.get("MPRIM_SEED")
    return int(env) if env else 0


def _parse_hidden(text):
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad hidden layer list {text!r}, expected e.g. 64,64")


def _parse_counts(text):
    parts = [int(tok) for tok in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("counts must be 4 integers a,b,c,d")
    return parts


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mprim",
        description="movement-primitives learning pipeline")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file with default values for the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize a demo dataset")
    gen.add_argument("--kind", choices=("rtp", "wpp"), required=True)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--counts", type=_parse_counts, default=None,
                     help="rtp region counts a,b,c,d")
    gen.add_argument("--trials", type=int, default=WPP_DEFAULT_TRIALS,
                     help="wpp trials per pattern/configuration cell")
    gen.add_argument("--noise", type=float, default=0.0,
                     help="rtp joint noise standard deviation (rad)")

    tr = sub.add_parser("train", help="train a model on a dataset")
    tr.add_argument("--data", type=Path, required=True)
    tr.add_argument("--method", choices=("deep-mp", "residual", "ddmp"),
                    required=True)
    tr.add_argument("--task", choices=("rtp", "wpp"), default=None,
                    help="attractor head variant (defaults to dataset kind)")
    tr.add_argument("--split", default=None,
                    help="WPP1..WPP10 pattern split (default: random)")
    tr.add_argument("--epochs", type=int, default=None,
                    help="default 150 for rtp data, 200 for wpp")
    tr.add_argument("--batch-size", type=int, default=32)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--hidden", type=_parse_hidden,
                    default=training.DEFAULT_HIDDEN)
    tr.add_argument("--n-basis", type=int, default=None,
                    help="default 8 for rtp data, 10 for wpp")
    tr.add_argument("--n-basis-dmp", type=int,
                    default=training.DEFAULT_N_BASIS_DMP)
    tr.add_argument("--tau", type=float, default=training.DEFAULT_DMP_TAU)
    tr.add_argument("--patience", type=int, default=20)
    tr.add_argument("--out", type=Path, required=True)

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    ev.add_argument("--data", type=Path, required=True)
    ev.add_argument("--checkpoint", type=Path, required=True)
    ev.add_argument("--outdir", type=Path, required=True)
    ev.add_argument("--plot-samples", type=int, default=2)
    ev.add_argument("--chain", type=Path, default=None,
                    help="kinematic chain config (default: built-in chain)")
    return parser


def cmd_generate(args, argv):
    seed = _resolve_seed(args.seed)
    if args.kind == "rtp":
        dataset = generate_rtp(seed, counts=args.counts,
                               noise_std=args.noise)
    else:
        dataset = generate_wpp(seed, trials_per_cell=args.trials)
    save_jsonl(dataset, args.out)
    config = {"kind": args.kind,
              "counts": args.counts or list(RTP_DEFAULT_COUNTS.values()),
              "trials": args.trials, "noise": args.noise}
    _write_manifest(args.out.with_suffix(args.out.suffix + ".manifest.json"),
                    "generate", argv, config, seed, [], [args.out])
    print(f"wrote {len(dataset)} samples to {args.out}")
    return 0


def cmd_train(args, argv):
    seed = _resolve_seed(args.seed)
    dataset = load_jsonl(args.data)
    epochs = args.epochs
    if epochs is None:
        epochs = (training.DEFAULT_EPOCHS_WPP if dataset.kind == "wpp"
                  else training.DEFAULT_EPOCHS_RTP)
    cfg = training.TrainConfig(epochs=epochs, batch_size=args.batch_size,
                               learning_rate=args.lr, seed=seed,
                               early_stop_patience=args.patience)
    split = None
    if args.split is not None:
        if args.split not in WPP_SPLITS:
            raise ValueError(f"unknown split {args.split!r}; expected one of "
                             f"{', '.join(WPP_SPLITS)}")
        split = apply_split(dataset, WPP_SPLITS[args.split], seed)
    model, report = training.train(
        args.method, dataset, cfg, n_basis=args.n_basis, hidden=args.hidden,
        task=args.task, n_basis_dmp=args.n_basis_dmp, tau=args.tau,
        split=split)

    config = {"method": args.method, "epochs": epochs,
              "batch_size": args.batch_size, "lr": args.lr,
              "hidden": list(args.hidden), "n_basis": args.n_basis,
              "n_basis_dmp": args.n_basis_dmp, "tau": args.tau,
              "split": args.split, "patience": args.patience,
              "data": str(args.data)}
    meta = {"config": config, "seed": seed,
            "stopping_reason": report.stopping_reason,
            "best_epoch": report.best_epoch,
            "final_epoch": report.final_epoch,
            "final_train_loss": (report.train_loss[-1]
                                 if report.train_loss else None),
            "final_val_loss": (report.val_loss[-1]
                               if report.val_loss else None)}
    checkpoint.save(model, args.out, meta=meta)
    curve_path = args.out.with_name(args.out.stem + "_losses.csv")
    report.write_csv(curve_path)
    _write_manifest(args.out.with_suffix(args.out.suffix + ".manifest.json"),
                    "train", argv, config, seed, [args.data],
                    [args.out, curve_path])
    print(f"trained {args.method} for {report.final_epoch} epochs "
          f"({report.stopping_reason}); checkpoint at {args.out}")
    return 0


def cmd_eval(args, argv):
    dataset = load_jsonl(args.data)
    model = checkpoint.load(args.checkpoint)
    if not isinstance(model, training.TrainedModel):
        raise ValueError(f"{args.checkpoint} is not a trained-model checkpoint")
    chain = load_chain(args.chain) if args.chain else default_chain()
    indices = np.asarray(model.test_indices, dtype=int)
    if len(indices) == 0:
        print("checkpoint has no held-out samples; evaluating full dataset",
              file=sys.stderr)
        indices = np.arange(len(dataset))

    records, overall = training.evaluate(model, dataset, indices, chain)
    seen = {rec.group for rec in records}
    everywhere = {training._group_key(s) for s in dataset.samples}
    for missing in sorted(everywhere - seen):
        print(f"warning: group {missing!r} has no test samples, row omitted",
              file=sys.stderr)

    args.outdir.mkdir(parents=True, exist_ok=True)
    metrics_path = args.outdir / "metrics.csv"
    plots.write_metrics_csv(metrics_path, records + [overall])

    outputs = [metrics_path]
    for k, i in enumerate(indices[:max(args.plot_samples, 0)]):
        sample = dataset.samples[int(i)]
        pred = model.predict_trajectory(sample.context,
                                        training._group_key(sample))
        gt_values = sample.trajectory.values
        joints_path = args.outdir / f"sample_{int(i)}_joints.csv"
        ee_path = args.outdir / f"sample_{int(i)}_ee_path.csv"
        svg_path = args.outdir / f"sample_{int(i)}_overlay.svg"
        plots.write_joint_csv(joints_path, gt_values, pred.values)
        plots.write_ee_path_csv(ee_path, fk_positions(chain, gt_values),
                                fk_positions(chain, pred.values))
        plots.write_overlay_svg(svg_path, gt_values, pred.values)
        outputs += [joints_path, ee_path, svg_path]

    config = {"data": str(args.data), "checkpoint": str(args.checkpoint),
              "plot_samples": args.plot_samples,
              "chain": str(args.chain) if args.chain else None}
    _write_manifest(args.outdir / "manifest.json", "eval", argv, config,
                    None, [args.data, args.checkpoint], outputs)
    for rec in records + [overall]:
        print(f"{rec.group}: ave_mse={rec.ave_mse:.6f} rad^2  "
              f"ave_ed={rec.ave_ed_mm:.2f} mm  (n={rec.count})")
    return 0


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    # a config file supplies defaults; explicit flags still win
    probe, _ = parser.parse_known_args(argv)
    if probe.config is not None:
        with open(probe.config) as fh:
            overrides = json.load(fh)
        for action in parser._subparsers._group_actions:
            for sub in action.choices.values():
                known = {a.dest: a for a in sub._actions}
                for key, value in overrides.items():
                    if key in known:
                        sub.set_defaults(**{key: value})
                        known[key].required = False
    args = parser.parse_args(argv)
    handler = {"generate": cmd_generate, "train": cmd_train,
               "eval": cmd_eval}[args.command]
    try:
        return handler(args, argv)
    except Exception as err:   # runtime failure -> exit 1, usage is argparse's 2
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
