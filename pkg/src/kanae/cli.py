"""Command-line entry point.

Commands:
  train      run one (task, family, seed) combination from a config file
  bench      run families x tasks x seeds, emit the efficiency table
  gradcheck  finite-difference validation of every layer type
  inspect    print a checkpoint's header JSON

Any config key can be overridden with ``--section.key=value``.  The
``KANAE_OUT`` environment variable overrides the output root.  Exit
codes: 0 success, 1 run failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import ConfigError, RunConfig, parse_overrides
from .data import load_dataset
from .tasks import (
    TaskConfig,
    efficiency_table,
    run_dir,
    run_task,
    write_efficiency_table,
)


def _task_config(cfg: RunConfig, task, family, seed, out_root):
    corruption = None
    if task == "denoising":
        corruption = cfg.corruption("gaussian_noise", seed)
    elif task == "inpainting":
        corruption = cfg.corruption("mask", seed)
    effective = cfg.effective()
    effective["run.seeds"] = str(seed)
    effective["run.task"] = task
    effective["model.family"] = family
    return TaskConfig(
        task=task,
        family=family,
        seed=seed,
        epochs=cfg["train.epochs"],
        batch_size=cfg["train.batch_size"],
        lr=cfg["train.lr"],
        precision=cfg["run.precision"],
        corruption=corruption,
        model_overrides=cfg.model_overrides(),
        out_dir=out_root,
        flat_config=effective,
    )


def _load_split(cfg: RunConfig):
    split = load_dataset(cfg["data.train"], cfg["data.test"],
                         normal_label=cfg["data.normal_label"])
    expected = cfg["data.input_length"]
    if split.length != expected:
        print(f"note: observed series length {split.length} != configured "
              f"{expected}; proceeding with {split.length}", file=sys.stderr)
    return split


def _execute(cfg_values, task, family, seed, out_root):
    """One benchmark run; top-level so process pools can pickle it."""
    cfg = RunConfig(cfg_values)
    split = _load_split(cfg)
    tc = _task_config(cfg, task, family, seed, out_root)
    return run_task(task, family, split, tc)


def cmd_train(args, overrides):
    try:
        cfg = RunConfig.load(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(exc, file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else cfg["run.seeds"][0]
    task = cfg["run.task"]
    family = cfg["model.family"]
    out_root = cfg.out_root()
    target = run_dir(out_root, task, family, seed)
    if os.path.exists(target) and not args.force:
        print(f"refusing to overwrite {target} (use --force)", file=sys.stderr)
        return 2
    try:
        report = _execute(cfg.values, task, family, seed, out_root)
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    from .models import save_model

    save_model(report._model, os.path.join(target, "model.ckpt"),
               extra_metadata={"effective_config": report.effective_config})
    print(f"{task}/{family}/seed{seed:02d}: train_mse={report.train_mse:.6g} "
          f"test_mse={report.test_mse:.6g} params={report.param_count:,} "
          f"-> {target}")
    return 0


def cmd_bench(args, overrides):
    try:
        cfg = RunConfig.load(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(exc, file=sys.stderr)
        return 2
    out_root = cfg.out_root()
    if os.path.isdir(out_root) and os.listdir(out_root) and not args.force:
        print(f"output directory {out_root} is not empty (use --force)",
              file=sys.stderr)
        return 2
    os.makedirs(out_root, exist_ok=True)

    runs = [(task, family, seed)
            for task in cfg["run.tasks"]
            for family in cfg["run.families"]
            for seed in cfg["run.seeds"]]
    reports = []
    failures = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_execute, cfg.values, t, f, s, out_root): (t, f, s)
                       for t, f, s in runs}
            for future, key in futures.items():
                try:
                    reports.append(future.result())
                except Exception as exc:
                    failures.append((key, str(exc)))
    else:
        for key in runs:
            try:
                reports.append(_execute(cfg.values, *key, out_root))
            except Exception as exc:
                failures.append((key, str(exc)))

    for (t, f, s), msg in failures:
        print(f"FAILED {t}/{f}/seed{s:02d}: {msg}", file=sys.stderr)
    if reports:
        rows = efficiency_table(reports)
        write_efficiency_table(rows, out_root)
        _write_summary(out_root, cfg, reports, failures)
    print(f"bench: {len(reports)} runs completed, {len(failures)} failed "
          f"-> {out_root}")
    return 1 if failures else 0


def _write_summary(out_root, cfg, reports, failures):
    lines = ["# Benchmark summary", ""]
    lines.append("| task | family | params | median test MSE | seeds |")
    lines.append("|---|---|---:|---:|---:|")
    groups = {}
    for r in reports:
        groups.setdefault((r.task, r.family), []).append(r)
    ordered = sorted(groups.items(),
                     key=lambda kv: (kv[0][0], -kv[1][0].param_count))
    for (task, family), rs in ordered:
        med = statistics.median(r.test_mse for r in rs)
        lines.append(f"| {task} | {family} | {rs[0].param_count:,} "
                     f"| {med:.6g} | {len(rs)} |")
    if failures:
        lines += ["", "## Failures", ""]
        lines += [f"- {t}/{f}/seed{s:02d}: {msg}" for (t, f, s), msg in failures]
    with open(os.path.join(out_root, "summary.md"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_gradcheck(args):
    from .gradcheck import gradcheck_suite

    results = gradcheck_suite(inject_error=args.inject_error)
    all_pass = True
    for name, report in results:
        print(f"{name:22s} {report.summary()}")
        all_pass &= report.passed
    return 0 if all_pass else 1


def cmd_inspect(args):
    from .checkpoint import read_header

    try:
        meta = read_header(args.checkpoint)
    except (OSError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return 1
    print(json.dumps(meta, indent=2, sort_keys=True))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kanae",
        description="Spline-edge autoencoder benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one (task, family, seed)")
    p_train.add_argument("config")
    p_train.add_argument("--seed", type=int, default=None,
                         help="override the first configured seed")
    p_train.add_argument("--force", action="store_true")

    p_bench = sub.add_parser("bench", help="run families x tasks x seeds")
    p_bench.add_argument("config")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--force", action="store_true")

    p_grad = sub.add_parser("gradcheck", help="validate layer gradients")
    p_grad.add_argument("--inject-error", action="store_true",
                        help=argparse.SUPPRESS)  # negative-control hook

    p_inspect = sub.add_parser("inspect", help="print checkpoint header")
    p_inspect.add_argument("checkpoint")
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args, unknown = parser.parse_known_args(argv)
    try:
        overrides = parse_overrides(unknown)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    if args.command == "train":
        return cmd_train(args, overrides)
    if args.command == "bench":
        return cmd_bench(args, overrides)
    if overrides:
        print(f"unexpected arguments: {' '.join(unknown)}", file=sys.stderr)
        return 2
    if args.command == "gradcheck":
        return cmd_gradcheck(args)
    if args.command == "inspect":
        return cmd_inspect(args)
    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
