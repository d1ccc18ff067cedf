"""Command-line front end: run scenarios, compare metric sets, validate configs.

Exit codes: 0 success, 2 configuration/input error, 3 invariant halt,
4 refusal to overwrite existing outputs (pass --force to allow).
"""

from __future__ import annotations

import argparse
import csv
import glob
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .config import ConfigError, default_config_text, load_config
from .engine import CSV_HEADER, InvariantViolation, metrics_to_csv, run
from .landscape import TerrainError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_REFUSED = 4


@dataclass(frozen=True)
class RunManifest:
    config_path: Path
    out_dir: Path
    seeds: tuple[int, ...]
    force: bool
    frame_every: int | None


def _parse_seeds(raw: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(part) for part in raw.split(",") if part.strip() != "")
    except ValueError:
        raise ConfigError(f"--seeds must be a comma-separated integer list, got {raw!r}") from None
    if not seeds:
        raise ConfigError("--seeds must name at least one seed")
    return seeds


def _refuse_existing(paths: list[Path], force: bool) -> bool:
    if force:
        return False
    existing = [p for p in paths if p.exists()]
    if existing:
        print(
            f"refusing to overwrite {existing[0]} (and {len(existing) - 1} more); "
            "pass --force to allow",
            file=sys.stderr,
        )
        return True
    return False


def cmd_run(manifest: RunManifest) -> int:
    try:
        config = load_config(manifest.config_path)
    except (ConfigError, TerrainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if manifest.frame_every is not None:
        config = replace(config, frame_every=manifest.frame_every)

    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    prepark = config.scenario == "prepark"
    targets: list[Path] = []
    for seed in manifest.seeds:
        targets.append(out / f"metrics_{seed}.csv")
        if prepark:
            targets.append(out / f"buildlog_{seed}.csv")
        if config.frame_every:
            targets.append(out / f"frames_{seed}")
    if _refuse_existing(targets, manifest.force):
        return EXIT_REFUSED

    for seed in manifest.seeds:
        seeded = replace(config, seed=seed)
        try:
            result = run(seeded)
        except InvariantViolation as exc:
            print(f"invariant halt (seed {seed}): {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        except (ConfigError, TerrainError) as exc:
            print(f"config error (seed {seed}): {exc}", file=sys.stderr)
            return EXIT_CONFIG

        metrics_path = out / f"metrics_{seed}.csv"
        metrics_path.write_text(metrics_to_csv(result.metrics), encoding="utf-8")
        if prepark:
            lines = ["tick,x,y,score"]
            lines += [
                f"{rec.tick},{rec.x},{rec.y},{rec.score:.6f}"
                for rec in result.state.build_log
            ]
            (out / f"buildlog_{seed}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        if config.frame_every:
            frame_dir = out / f"frames_{seed}"
            frame_dir.mkdir(exist_ok=True)
            for tick, text in result.frames:
                (frame_dir / f"frame_{tick}.txt").write_text(text, encoding="utf-8")
        print(f"seed {seed}: wrote {metrics_path}")
    return EXIT_OK


def _read_metrics_csv(path: Path) -> list[dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise ConfigError(f"{path} does not look like a metrics CSV")
        rows = []
        for record in reader:
            rows.append({key: float(value) for key, value in record.items()})
    if not rows:
        raise ConfigError(f"{path} has no metric rows")
    return rows


@dataclass(frozen=True)
class ScenarioStats:
    n_files: int
    mean_delta_dirtiness: float
    mean_garbage_per_capita: float
    total_littering: int


def summarize_metrics(files: list[list[dict[str, float]]]) -> ScenarioStats:
    deltas = []
    per_capita = []
    littering = 0
    for rows in files:
        ticks = len(rows) - 1
        if ticks > 0:
            deltas.append((rows[-1]["dirtiness"] - rows[0]["dirtiness"]) / ticks)
        else:
            deltas.append(0.0)
        per_capita.append(sum(r["garbage_per_capita"] for r in rows) / len(rows))
        littering += int(sum(r["littering_events"] for r in rows))
    return ScenarioStats(
        n_files=len(files),
        mean_delta_dirtiness=sum(deltas) / len(deltas),
        mean_garbage_per_capita=sum(per_capita) / len(per_capita),
        total_littering=littering,
    )


def damping_ratio(pre: ScenarioStats, post: ScenarioStats) -> float:
    """post/pre dirtiness growth; 0/0 counts as 1 (nothing changed)."""
    if pre.mean_delta_dirtiness == 0.0:
        return 1.0 if post.mean_delta_dirtiness == 0.0 else math.inf
    return post.mean_delta_dirtiness / pre.mean_delta_dirtiness


def cmd_compare(pre_glob: str, post_glob: str, out_dir: Path, force: bool) -> int:
    pre_paths = sorted(Path(p) for p in glob.glob(pre_glob))
    post_paths = sorted(Path(p) for p in glob.glob(post_glob))
    if not pre_paths or not post_paths:
        print("compare needs at least one CSV per scenario", file=sys.stderr)
        return EXIT_CONFIG
    try:
        pre_files = [_read_metrics_csv(p) for p in pre_paths]
        post_files = [_read_metrics_csv(p) for p in post_paths]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    lengths = {len(rows) for rows in pre_files} | {len(rows) for rows in post_files}
    if len(lengths) != 1:
        print(f"mismatched tick counts across CSVs: {sorted(lengths)}", file=sys.stderr)
        return EXIT_CONFIG

    pre = summarize_metrics(pre_files)
    post = summarize_metrics(post_files)
    ratio = damping_ratio(pre, post)

    report = "\n".join([
        f"scenario comparison over {pre.n_files} pre / {post.n_files} post runs",
        f"  mean dirtiness growth per tick: pre {pre.mean_delta_dirtiness:.6f}, "
        f"post {post.mean_delta_dirtiness:.6f}",
        f"  mean garbage per capita:        pre {pre.mean_garbage_per_capita:.6f}, "
        f"post {post.mean_garbage_per_capita:.6f}",
        f"  total littering events:         pre {pre.total_littering}, "
        f"post {post.total_littering}",
        f"  damping ratio (post/pre dirtiness growth): {ratio:.6f}",
    ]) + "\n"

    csv_lines = [
        "metric,pre,post",
        f"mean_delta_dirtiness_per_tick,{pre.mean_delta_dirtiness:.6f},{post.mean_delta_dirtiness:.6f}",
        f"mean_garbage_per_capita,{pre.mean_garbage_per_capita:.6f},{post.mean_garbage_per_capita:.6f}",
        f"total_littering_events,{pre.total_littering},{post.total_littering}",
        f"damping_ratio,,{ratio:.6f}",
    ]

    out_dir.mkdir(parents=True, exist_ok=True)
    targets = [out_dir / "comparison.txt", out_dir / "comparison.csv"]
    if _refuse_existing(targets, force):
        return EXIT_REFUSED
    targets[0].write_text(report, encoding="utf-8")
    targets[1].write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    print(report, end="")
    return EXIT_OK


def cmd_validate(config_path: Path | None, print_defaults: bool) -> int:
    if print_defaults:
        print(default_config_text(), end="")
    if config_path is not None:
        try:
            config = load_config(config_path)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"config OK: scenario={config.scenario}, ticks={config.ticks}, "
              f"terrain={config.terrain_file}")
    elif not print_defaults:
        print("validate needs --config and/or --print-defaults", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riversim",
        description="Riverbank settlement / city-park waste simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario for a list of seeds")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--out", required=True, type=Path)
    p_run.add_argument("--seeds", default="0", help="comma-separated seed list")
    p_run.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p_run.add_argument("--frame-every", type=int, default=None,
                       help="write a frame snapshot every N ticks")

    p_cmp = sub.add_parser("compare", help="before/after comparison of metrics CSVs")
    p_cmp.add_argument("--pre", required=True, help="glob of pre-park metrics CSVs")
    p_cmp.add_argument("--post", required=True, help="glob of park metrics CSVs")
    p_cmp.add_argument("--out", required=True, type=Path)
    p_cmp.add_argument("--force", action="store_true")

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("--config", type=Path, default=None)
    p_val.add_argument("--print-defaults", action="store_true",
                       help="print the full default configuration")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            seeds = _parse_seeds(args.seeds)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        manifest = RunManifest(
            config_path=args.config,
            out_dir=args.out,
            seeds=seeds,
            force=args.force,
            frame_every=args.frame_every,
        )
        return cmd_run(manifest)
    if args.command == "compare":
        return cmd_compare(args.pre, args.post, args.out, args.force)
    return cmd_validate(args.config, args.print_defaults)


def entry() -> None:
    sys.exit(main())
