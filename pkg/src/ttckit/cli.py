"""Command-line entry point tying the modules into reproducible pipelines.

Subcommands: synth, annotate, estimate, train, eval, report.  Exit codes:
0 success, 1 internal error, 2 usage/input error.  All outputs are
deterministic given the seeds in the run configuration; the only
environment knob is TTCKIT_THREADS (render worker count).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, config_hash
from .errors import DomainError, TtcKitError
from .estimate import ESTIMATOR_NAMES, ScaleSearchConfig, make_estimator
from .evaluation import (
    EvaluationReport,
    evaluate_dataset,
    format_report_table,
    reports_to_csv,
)
from .annotate import annotate_sequence
from .learn import TrainConfig, load_weights, save_weights, train_loop, write_loss_curve
from .manifest import (
    load_dataset,
    read_index,
    read_sequence_dir,
    write_index,
    write_sequence_dir,
)
from .scenarios import builtin_scripts, simulate_script
from .synth import generate_from_trajectory, project_size

USAGE_ERROR = 2
INTERNAL_ERROR = 1


def _thread_count() -> int:
    raw = os.environ.get("TTCKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _window_feasible(traj, camera, target, start: float, fps: float, length: int) -> bool:
    t_last = start + (length - 1) / fps
    if t_last > traj.t_end or (traj.contact_time is not None and t_last >= traj.contact_time):
        return False
    for k in range(length):
        t = start + k / fps
        y = traj.depth(t)
        if y <= 0:
            return False
        w = project_size(camera, target.physical_width, y)
        h = project_size(camera, target.physical_height, y)
        if w < 15.0 or h < 15.0:
            return False
        u = camera.cx + camera.f * (traj.lateral(t) + target.lateral_offset_x) / y
        v = camera.cy - camera.f * target.vertical_offset_z / y
        if u - w / 2 < 0 or u + w / 2 > camera.width or v - h / 2 < 0 or v + h / 2 > camera.height:
            return False
    return True


def cmd_synth(args) -> int:
    cfg = RunConfig.from_json_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = RunConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    camera = cfg.camera.to_model()

    scripts = builtin_scripts(list(cfg.synth.templates)) if cfg.synth.templates else []
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    horizon = 14.0

    # plan sequentially (deterministic), render in parallel, write sorted
    plan = []
    by_template: dict[int, list] = {}
    for script in scripts:
        by_template.setdefault(script.template, []).append(script)
    for template in sorted(by_template):
        variants = by_template[template]
        count = min(cfg.synth.variants_per_template, len(variants))
        picks = sorted(rng.choice(len(variants), size=count, replace=False).tolist())
        for pick in picks:
            script = variants[pick]
            target = cfg.target.to_target(
                seed_offset=script.script_id if cfg.synth.vary_texture else 0
            )
            traj = simulate_script(script, horizon)
            made = 0
            for attempt in range(24):
                if made >= cfg.synth.sequences_per_variant:
                    break
                span = max(traj.t_end - (cfg.synth.length - 1) / cfg.synth.fps - cfg.synth.start_min, 0.0)
                start = cfg.synth.start_min + float(rng.uniform(0.0, span)) if span > 0 else cfg.synth.start_min
                start = round(start, 3)
                if not _window_feasible(traj, camera, target, start, cfg.synth.fps, cfg.synth.length):
                    continue
                seq_id = f"t{template}v{script.script_id:05d}k{made}"
                plan.append((traj, target, start, seq_id, script))
                made += 1

    def render(item):
        traj, target, start, seq_id, script = item
        provenance = {
            "generator": "synth",
            "seed": cfg.noise.seed,
            "script_id": script.script_id,
            "template": script.template,
            "start_time": start,
        }
        return generate_from_trajectory(
            traj,
            camera,
            target,
            cfg.noise,
            fps=cfg.synth.fps,
            length=cfg.synth.length,
            start_time=start,
            sequence_id=seq_id,
            background=cfg.synth.background,
            provenance=provenance,
        )

    workers = _thread_count()
    if workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sequences = list(pool.map(render, plan))
    else:
        sequences = [render(item) for item in plan]

    sequences.sort(key=lambda s: s.sequence_id)
    for seq in sequences:
        write_sequence_dir(seq, out_dir)
    write_index(out_dir, [s.sequence_id for s in sequences], chash)
    print(f"wrote {len(sequences)} sequences to {out_dir} (config {chash})")
    return 0


def cmd_annotate(args) -> int:
    dataset_dir = Path(args.dataset)
    index = read_index(dataset_dir)
    deltas = []
    for seq_id in index["sequences"]:
        seq = read_sequence_dir(dataset_dir / seq_id)
        old_tau = seq.label.tau_s if seq.label else None
        new_label = annotate_sequence(seq, seed=args.seed or 0)
        seq.label = new_label
        if old_tau is not None:
            deltas.append(abs(new_label.tau_s - old_tau))
        from .manifest import canonical_json_bytes, sequence_to_manifest

        (dataset_dir / seq_id / "manifest.json").write_bytes(
            canonical_json_bytes(sequence_to_manifest(seq))
        )
    write_index(dataset_dir, list(index["sequences"]), index["config_hash"],
                extra={"annotated": True})
    worst = max(deltas) if deltas else 0.0
    print(f"annotated {len(index['sequences'])} sequences; max |d tau| vs prior labels {worst:.2e} s")
    return 0


def _search_config(cfg: RunConfig, estimator: str, gap: int | None) -> ScaleSearchConfig:
    base = cfg.search_feature if estimator == "feature_scale" else cfg.search_pixel
    return base.with_gap(gap) if gap else base


def _build_estimator(args, cfg: RunConfig):
    name = args.estimator
    if name not in ESTIMATOR_NAMES:
        raise DomainError(f"unknown estimator {name!r}; choose from {ESTIMATOR_NAMES}")
    search = _search_config(cfg, name, getattr(args, "gap", None))
    weights = None
    if getattr(args, "weights", None):
        path = Path(args.weights)
        if not path.is_file():
            raise DomainError(f"weights file not found: {path}")
        weights, meta = load_weights(path)
        return make_estimator(name, search, weights), search, meta
    if name == "feature_scale" and getattr(args, "require_weights", False):
        raise DomainError("feature_scale evaluation requires --weights")
    return make_estimator(name, search, weights), search, None


def cmd_estimate(args) -> int:
    cfg = RunConfig.from_json_file(args.config) if args.config else RunConfig()
    dataset_dir = Path(args.dataset)
    seq = read_sequence_dir(dataset_dir / args.seq)
    for frame in seq.frames:
        if frame.image_path and not Path(frame.image_path).is_absolute():
            frame.image_path = str(dataset_dir / frame.image_path)
    estimator, search, _ = _build_estimator(args, cfg)
    est = estimator(seq)
    print(f"sequence {args.seq}  estimator {est.estimator}  gap {search.frame_gap}")
    print(f"alpha_hat {est.alpha_hat:.6f}  alpha_10hz {est.alpha_hat_10hz:.6f}  tau_hat {est.tau_hat:.3f} s")
    if seq.label is not None:
        print(f"label     alpha_10hz {seq.label.alpha_10hz:.6f}  tau {seq.label.tau_s:.3f} s")
    if est.low_confidence:
        print("low-confidence profile (flat similarity)")
    if est.profile is not None:
        scores = est.profile.scores
        order = np.argsort(scores if est.profile.semantics == "mse" else -scores)[:5]
        bins = search.bins()
        print("top bins:")
        for i in order:
            dx, dy = est.profile.best_shift[i]
            print(f"  alpha {bins[i]:.4f}  score {scores[i]:.6g}  shift ({dx:+d},{dy:+d})")
    return 0


def cmd_train(args) -> int:
    cfg = RunConfig.from_json_file(args.config) if args.config else RunConfig()
    dataset_dir = Path(args.dataset)
    index = read_index(dataset_dir)
    sequences = load_dataset(dataset_dir)
    if not sequences:
        raise DomainError(f"dataset {dataset_dir} is empty")
    val = [s for i, s in enumerate(sequences) if i % 5 == 4]
    train = [s for i, s in enumerate(sequences) if i % 5 != 4]
    search = cfg.search_feature.with_gap(args.gap) if args.gap else cfg.search_feature
    tcfg = cfg.train if args.seed is None else TrainConfig(
        **{**cfg.train.__dict__, "seed": args.seed}
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = train_loop(train, val, search, tcfg, out_dir=out_dir / "checkpoints")
    save_weights(out_dir / "weights.bin", result.params,
                 extra={"dataset_config_hash": index["config_hash"]})
    write_loss_curve(out_dir / "loss_curve.csv", result.history)
    last = result.history[-1]
    print(f"trained {tcfg.epochs} epochs on {len(train)} sequences ({len(val)} validation)")
    print(f"val MiD untrained {result.val_mid_untrained:.2f} -> trained {last[2]:.2f}")
    print(f"weights: {out_dir / 'weights.bin'}")
    return 0


def cmd_eval(args) -> int:
    cfg = RunConfig.from_json_file(args.config) if args.config else RunConfig()
    dataset_dir = Path(args.dataset)
    index = read_index(dataset_dir)
    estimator, search, weights_meta = _build_estimator(args, cfg)
    if weights_meta is not None and not args.force:
        trained_on = weights_meta.get("dataset_config_hash")
        if trained_on is not None and trained_on != index["config_hash"]:
            raise DomainError(
                f"weights were trained on config {trained_on} but dataset has "
                f"{index['config_hash']}; pass --force to evaluate anyway"
            )
    sequences = load_dataset(dataset_dir)
    report = evaluate_dataset(sequences, estimator, args.estimator,
                              config_hash=index["config_hash"])
    out = Path(args.out) if args.out else dataset_dir / f"report_{args.estimator}.json"
    out.write_bytes(report.to_json_bytes())
    csv_path = Path(args.csv) if args.csv else out.with_suffix(".csv")
    csv_path.write_text(reports_to_csv([report]))
    print(format_report_table([report]))
    print(f"report: {out}")
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        p = Path(path)
        if not p.is_file():
            raise DomainError(f"report not found: {p}")
        reports.append(EvaluationReport.from_json(p))
    table = format_report_table(reports)
    if args.out:
        Path(args.out).write_text(reports_to_csv(reports))
    print(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttckit",
        description="Monocular time-to-contact estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    p.add_argument("--config", help="run-config JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("annotate", help="re-derive labels from depth tracks")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_annotate)

    p = sub.add_parser("estimate", help="run one estimator on one sequence")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seq", required=True, help="sequence id")
    p.add_argument("--estimator", required=True, choices=ESTIMATOR_NAMES)
    p.add_argument("--weights")
    p.add_argument("--gap", type=int)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("train", help="train the feature-scale head")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output directory for weights")
    p.add_argument("--config")
    p.add_argument("--gap", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate an estimator on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--estimator", required=True, choices=ESTIMATOR_NAMES)
    p.add_argument("--weights")
    p.add_argument("--gap", type=int)
    p.add_argument("--config")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--csv", help="report CSV path")
    p.add_argument("--force", action="store_true", help="ignore config-hash mismatches")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="merge evaluation reports into one grid")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", help="combined CSV path")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (TtcKitError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostics
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
