"""Command-line entry point.

Every subcommand accepts ``--config FILE`` plus one flag per config key
(``--alpha 2``, ``--use-low true``, ``--seeds 1,2,3``); flags override the
file. Exit status: 0 success, 2 invalid input or config, 3 training diverged.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hfdistill.data import save_csv
from hfdistill.errors import InvalidInputError, TrainingDivergedError
from hfdistill.geometry import factorize_grid, reshape_logits
from hfdistill.harness.config import FIELD_TYPES, TrainConfig, dump_config, load_config
from hfdistill.harness.experiments import SCHEMA_VERSION, run_ablation, run_weight_sweep, summarize
from hfdistill.harness.report import check_report, dumps, emit_report, load_report, render_table
from hfdistill.harness.training import (
    analyze_frequency_logits,
    distill_student,
    load_datasets,
    save_run,
    train_teacher,
)
from hfdistill.nn import load_checkpoint, predict
from hfdistill.wavelet import dump_bands_csv, dwt2_haar

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3

log = logging.getLogger("hfdistill")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    group = p.add_argument_group("config overrides")
    for key in FIELD_TYPES:
        group.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key, metavar="VALUE")


def _config(args) -> TrainConfig:
    overrides = {
        k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None
    }
    return load_config(args.config, overrides)


def _runs_summary(kind: str, cfg: TrainConfig, runs: list[dict]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "report_type": kind,
        "config": cfg.to_dict(),
        "runs": runs,
        **summarize([r["accuracy"] for r in runs]),
    }


def cmd_gen_data(args) -> None:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, test = load_datasets(cfg)
    save_csv(train, out / "train.csv")
    save_csv(test, out / "test.csv")
    (out / "config.txt").write_text(dump_config(cfg), encoding="utf-8")
    print(f"wrote {len(train)} train / {len(test)} test rows to {out}")


def cmd_train_teacher(args) -> None:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for run in train_teacher(cfg):
        path = out / f"teacher_seed{run.seed}.json"
        save_run(run, path)
        runs.append({"seed": run.seed, "accuracy": run.accuracy,
                     "checkpoint": path.name, "checkpoint_sha256": run.checkpoint_sha256})
    emit_report(_runs_summary("teacher", cfg, runs), out / "teacher_report.json")
    print((out / "teacher_report.txt").read_text(encoding="utf-8"), end="")


def cmd_distill(args) -> None:
    cfg = _config(args)
    teacher = args.teacher or cfg.teacher_ckpt
    if not teacher and cfg.variant != "ce":
        raise InvalidInputError(f"variant {cfg.variant} needs a teacher checkpoint (--teacher)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = load_datasets(cfg)
    runs = []
    for seed in cfg.seeds:
        run = distill_student(cfg, teacher or None, seed, data)
        path = out / f"student_{cfg.variant}_seed{seed}.json"
        save_run(run, path)
        runs.append({"seed": seed, "accuracy": run.accuracy,
                     "checkpoint": path.name, "checkpoint_sha256": run.checkpoint_sha256})
    emit_report(_runs_summary("distill", cfg, runs), out / "distill_report.json")
    print((out / "distill_report.txt").read_text(encoding="utf-8"), end="")


def cmd_ablate(args) -> None:
    cfg = _config(args)
    report = run_ablation(cfg, ckpt_dir=args.ckpt_dir)
    check_report(report)
    _, text = emit_report(report, args.out)
    print(text.read_text(encoding="utf-8"), end="")


def cmd_sweep(args) -> None:
    cfg = _config(args)
    report = run_weight_sweep(cfg)
    check_report(report)
    _, text = emit_report(report, args.out)
    print(text.read_text(encoding="utf-8"), end="")


def cmd_analyze_logits(args) -> None:
    cfg = _config(args)
    params, _ = load_checkpoint(args.ckpt)
    _, test = load_datasets(cfg)
    fa = analyze_frequency_logits(params, test, args.tag)
    text = json.dumps(json.loads(dumps(fa.to_dict())), sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    if args.dump_bands:
        if not 0 <= args.sample < len(test):
            raise InvalidInputError(f"--sample must lie in [0, {len(test)})")
        logits = predict(params, test.features[args.sample])
        bands = dwt2_haar(reshape_logits(logits, factorize_grid(test.num_classes)))
        for path in dump_bands_csv(bands, args.dump_bands, prefix=f"sample{args.sample}_"):
            print(f"wrote {path}")


def cmd_report(args) -> None:
    report = load_report(args.input)
    check_report(report)
    print(render_table(report), end="")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hfdistill", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write the configured dataset as train/test CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-teacher", help="CE-train one teacher per seed")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.set_defaults(func=cmd_train_teacher)

    p = sub.add_parser("distill", help="train students with the configured variant")
    p.add_argument("--teacher", help="teacher checkpoint (overrides teacher_ckpt)")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("ablate", help="low/high band ablation plus CE and KD baselines")
    p.add_argument("--out", required=True, help="report JSON path (a .txt table is written beside it)")
    p.add_argument("--ckpt-dir", help="also save every checkpoint here")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="one-dimensional alpha and beta sweeps")
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze-logits", help="argmax agreement of LL-only / HF-only logits")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tag", default="model")
    p.add_argument("--out", help="write the agreement JSON here")
    p.add_argument("--dump-bands", metavar="DIR", help="dump one test sample's bands as CSV")
    p.add_argument("--sample", type=int, default=0, help="test sample for --dump-bands")
    p.set_defaults(func=cmd_analyze_logits)

    p = sub.add_parser("report", help="render a report JSON as a text table")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_report)

    for name, sp in sub.choices.items():
        if name != "report":
            _add_config_flags(sp)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
