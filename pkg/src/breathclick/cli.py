"""Command-line entry point wiring the pipeline together.

Commands:
    gen      synthesize labeled series files (one per subject/scenario)
    augment  expand a series directory fivefold with the noise transforms
    train    train a classifier on a series directory
    eval     LOPO/LOSO cross-validation producing report JSON/CSV
    stream   replay a series through the real-time smoother
    report   render figures from eval/train artifacts

Exit codes: 0 success, 1 usage or config error, 2 data/format error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report as report_mod
from .augment import augment_set
from .config import RunConfig, derive_seed, load_config, strategy_flags
from .crossval import (
    run_cv,
    write_confusion_csv,
    write_report_csv,
    write_report_json,
)
from .errors import BreathClickError
from .gestures import GestureKind
from .net import load_weights, predict_timesteps, save_weights, train
from .net.training import (
    extract_window_matrix,
    step_labels,
    window_end_times,
    write_history,
)
from .postproc import smooth_stream
from .signals import make_cohort, set_scenario_noise, synth_session
from .storage import (
    file_sha256,
    load_series,
    load_series_dir,
    save_events,
    save_series,
    series_filename,
    write_manifest,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _parse_strategies(text: str) -> tuple[bool, bool, bool]:
    if text == "none":
        return (False, False, False)
    parts = {p.strip() for p in text.split(",") if p.strip()}
    unknown = parts - {"s1", "s2", "s3"}
    if unknown:
        raise ValueError(f"unknown strategies: {sorted(unknown)}")
    return ("s1" in parts, "s2" in parts, "s3" in parts)


def cmd_gen(config: RunConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.gen.noise:
        set_scenario_noise(config.gen.noise)
    profiles = make_cohort(config.gen.subjects, config.master_seed)
    entries = []
    for profile in profiles:
        for scenario in config.gen.scenarios:
            series = synth_session(
                profile, scenario, config.gen.trials_per_gesture
            )
            path = out_dir / series_filename(series)
            save_series(series, path)
            entries.append(
                {
                    "file": path.name,
                    "subject": profile.subject_id,
                    "scenario": scenario.value,
                    "seed": profile.rng_seed,
                    "n_samples": len(series),
                    "n_spans": len(series.gesture_spans),
                    "sha256": file_sha256(path),
                }
            )
    manifest = {
        "master_seed": config.master_seed,
        "subjects": config.gen.subjects,
        "scenarios": [s.value for s in config.gen.scenarios],
        "trials_per_gesture": config.gen.trials_per_gesture,
        "series": entries,
    }
    digest = write_manifest(out_dir / "manifest.json", manifest)
    print(f"wrote {len(entries)} series to {out_dir} (manifest {digest[:12]})")
    return EXIT_OK


def cmd_augment(config: RunConfig, data_dir: Path, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    series_list = load_series_dir(data_dir)
    expanded = augment_set(series_list, config.augment)
    for series in expanded:
        save_series(series, out_dir / series_filename(series))
    print(f"expanded {len(series_list)} series to {len(expanded)} in {out_dir}")
    return EXIT_OK


def cmd_train(config: RunConfig, data_dir: Path, out_dir: Path,
              resume: Path | None) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    series_list = load_series_dir(data_dir)
    if not series_list:
        raise FileNotFoundError(f"no series files in {data_dir}")
    x = np.concatenate(
        [extract_window_matrix(s, config.model.window) for s in series_list]
    )
    y = np.concatenate([step_labels(s, config.model.window) for s in series_list])
    cap = config.pipeline.max_windows_per_class
    if cap is not None:
        rng = np.random.default_rng(derive_seed(config.master_seed, "train/subsample"))
        keep = np.sort(np.concatenate(
            [rng.permutation(np.flatnonzero(y == c))[:cap] for c in np.unique(y)]
        ))
        x, y = x[keep], y[keep]

    init_model = None
    if resume is not None:
        init_model = load_weights(resume, expected_config=config.model)
    model, history = train((x, y), config.model, config.train, init_model=init_model)
    weights_path = out_dir / "weights.bcnw"
    save_weights(model, weights_path)
    write_history(history, out_dir / "history.csv")
    print(
        f"trained on {len(y)} windows for {len(history)} epochs "
        f"(best val loss {model.meta.get('best_val_loss', float('nan')):.4f}); "
        f"weights at {weights_path}"
    )
    return EXIT_OK


def cmd_eval(config: RunConfig, data_dir: Path, mode: str, out_dir: Path,
             strategies: tuple[bool, bool, bool] | None) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    series_list = load_series_dir(data_dir)
    if not series_list:
        raise FileNotFoundError(f"no series files in {data_dir}")
    flags = strategies if strategies is not None else strategy_flags(
        config.pipeline.strategies
    )
    report = run_cv(
        series_list,
        mode,
        config.model,
        config.train,
        augment_cfg=config.augment if config.pipeline.augment_enabled else None,
        strategies=flags,
        max_windows_per_class=config.pipeline.max_windows_per_class,
        seed=config.master_seed,
        n_jobs=config.pipeline.n_jobs,
    )
    write_report_json(report, out_dir / f"report_{mode}.json")
    write_report_csv(report, out_dir / f"report_{mode}.csv")
    write_confusion_csv(report.joint_timestep_cm, out_dir / f"cm_{mode}_timestep.csv")
    write_confusion_csv(report.joint_event_cm, out_dir / f"cm_{mode}_event.csv")
    agg = report.aggregates
    print(
        f"{mode} over {len(report.folds)} folds: "
        f"time-step macro F1 {agg['timestep']['macro_f1']:.4f} "
        f"± {agg['timestep']['macro_f1_std']:.4f}, "
        f"event macro F1 {agg['event']['macro_f1']:.4f} "
        f"± {agg['event']['macro_f1_std']:.4f}"
    )
    return EXIT_OK


def cmd_stream(weights: Path, series_path: Path, out_dir: Path,
               strategies: tuple[bool, bool, bool]) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    model = load_weights(weights)
    series = load_series(series_path)
    raw = predict_timesteps(model, series)
    smoothed, events = smooth_stream(raw, *strategies)
    times = window_end_times(series, len(raw))

    save_events(
        events,
        out_dir / "events.jsonl",
        meta={"series": series_path.name, "strategies": list(strategies)},
    )
    with (out_dir / "trace.jsonl").open("w") as fh:
        header = {
            "format": "breathclick-trace",
            "version": 1,
            "series": series_path.name,
        }
        fh.write(json.dumps(header) + "\n")
        for step, (r, s) in enumerate(zip(raw, smoothed)):
            fh.write(
                json.dumps(
                    {
                        "step": step,
                        "t": float(times[step]),
                        "raw": int(r),
                        "smoothed": int(s),
                    }
                )
                + "\n"
            )
    kinds = ", ".join(GestureKind(int(e.kind)).name for e in events) or "none"
    print(f"{len(events)} events ({kinds}); trace in {out_dir}")
    return EXIT_OK


def cmd_report(source_dir: Path, out_dir: Path) -> int:
    written = report_mod.render_report_figures(source_dir, out_dir)
    if not written:
        raise FileNotFoundError(f"no report/history artifacts found in {source_dir}")
    print(f"rendered {len(written)} figures to {out_dir}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="breathclick", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", type=Path, default=None,
                           help="YAML run configuration")
            p.add_argument("--seed", type=int, default=None,
                           help="override the master seed")
        p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("gen", help="generate synthetic labeled series")
    common(p)

    p = sub.add_parser("augment", help="fivefold-expand a series directory")
    common(p)
    p.add_argument("--data", type=Path, required=True, help="input series directory")

    p = sub.add_parser("train", help="train a classifier on a series directory")
    common(p)
    p.add_argument("--data", type=Path, required=True, help="input series directory")
    p.add_argument("--resume", type=Path, default=None,
                   help="existing weights to continue from")

    p = sub.add_parser("eval", help="cross-validated evaluation")
    common(p)
    p.add_argument("--data", type=Path, required=True, help="input series directory")
    p.add_argument("--mode", choices=("lopo", "loso"), required=True)
    p.add_argument("--strategies", type=str, default=None,
                   help="comma list of s1,s2,s3 or 'none'")

    p = sub.add_parser("stream", help="replay a series through the smoother")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--series", type=Path, required=True)
    p.add_argument("--strategies", type=str, default="s1,s2,s3",
                   help="comma list of s1,s2,s3 or 'none'")
    common(p, config=False)

    p = sub.add_parser("report", help="render figures from artifacts")
    p.add_argument("--from", dest="source", type=Path, required=True,
                   help="directory holding report_*.json / history.csv")
    common(p, config=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("gen", "augment", "train", "eval"):
            config = load_config(args.config, seed_override=args.seed)
        if args.command == "gen":
            return cmd_gen(config, args.out)
        if args.command == "augment":
            return cmd_augment(config, args.data, args.out)
        if args.command == "train":
            return cmd_train(config, args.data, args.out, args.resume)
        if args.command == "eval":
            strategies = (
                _parse_strategies(args.strategies) if args.strategies else None
            )
            return cmd_eval(config, args.data, args.mode, args.out, strategies)
        if args.command == "stream":
            return cmd_stream(
                args.weights, args.series, args.out,
                _parse_strategies(args.strategies),
            )
        if args.command == "report":
            return cmd_report(args.source, args.out)
        parser.error(f"unknown command {args.command}")
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BreathClickError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
