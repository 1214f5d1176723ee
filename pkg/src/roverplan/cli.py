"""Command-line front end for seeded mission scenarios.

Subcommands cover each pipeline stage (terrain-stats, gen-pdm, plan-targets)
plus whole missions (plan-mission, report, plot) and seeded batches (batch).
Exit codes: 0 success, 1 configuration error, 2 planning failure, 3 I/O
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .config import ConfigError, MissionConfig, load_config, save_config
from .coordination import SegmentFailure
from .mission import (MissionError, prepare_pdm, prepare_terrain, plan_targets,
                      run_mission)
from .pdm import save_grid_csv, save_pdm
from .rrt import NoPathFound
from .search import save_targets_csv
from .terrain import save_dem, terrain_stats


def _build_config(args) -> MissionConfig:
    config = load_config(args.config) if args.config else MissionConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    rovers = getattr(args, "rovers", None)
    if rovers is not None:
        config = dataclasses.replace(config, n_rovers=rovers)
    return config


def _cmd_terrain_stats(args) -> int:
    config = _build_config(args)
    dem, trav = prepare_terrain(config)
    pct = terrain_stats(trav)
    print(f"blocks: {trav.shape[0]} x {trav.shape[1]} "
          f"at {trav.cell_size} m")
    print(f"traversable: {pct.traversable_pct:.2f}%")
    print(f"high-risk:   {pct.high_risk_pct:.2f}%")
    print(f"impassable:  {pct.impassable_pct:.2f}%")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_dem(dem, os.path.join(args.out, "dem.txt"))
    return 0


def _cmd_gen_pdm(args) -> int:
    config = _build_config(args)
    dem, _ = prepare_terrain(config)
    pdm, grid, _ = prepare_pdm(config, dem)
    print(f"mixture of {pdm.g} components; grid {grid.n_rows} x {grid.n_cols} "
          f"at {grid.cell_size} m; in-bounds mass {grid.total_mass:.6f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_pdm(pdm, os.path.join(args.out, "pdm.json"))
        save_grid_csv(grid, os.path.join(args.out, "grid.csv"))
    return 0


def _cmd_plan_targets(args) -> int:
    config = _build_config(args)
    dem, _ = prepare_terrain(config)
    _, grid, _ = prepare_pdm(config, dem)
    targets = plan_targets(config, grid)
    print(f"{len(targets.waypoints) - 1} target segments, "
          f"score {targets.score:.6f}, warming step {targets.warming_step}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_targets_csv(targets, os.path.join(args.out, "targets.csv"))
    return 0


def _cmd_plan_mission(args) -> int:
    config = _build_config(args)
    result = run_mission(config, out_dir=args.out)
    r = result.report
    print(f"seed {r.seed}: {r.n_rovers} rovers, {r.n_targets} segments")
    print(f"mean distance {r.mean_distance_m:.2f} m, "
          f"mission time {r.total_time_s:.1f} s")
    print(f"compliance {r.compliance:.6f} "
          f"({r.exceedances} exceedances in {r.samples} samples)")
    print(f"min separation {r.min_separation_m:.3f} m "
          f"(d_safe {r.d_safe_m} m)")
    print(f"accumulated mass {r.curve_terminal_mass:.6f} "
          f"of {r.total_mass:.6f} in bounds")
    return 0


def _cmd_report(args) -> int:
    config = _build_config(args)
    result = run_mission(config, out_dir=args.out)
    print(json.dumps(result.report.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_plot(args) -> int:
    from .plots import render_plots

    config = _build_config(args)
    out = args.out or "."
    result = run_mission(config, out_dir=args.out)
    for path in render_plots(result, out):
        print(path)
    return 0


def _cmd_batch(args) -> int:
    config = _build_config(args)
    reports = []
    for i in range(args.count):
        seed = config.seed + i
        sub = dataclasses.replace(config, seed=seed)
        out = os.path.join(args.out, f"seed_{seed}") if args.out else None
        result = run_mission(sub, out_dir=out)
        reports.append(result.report)
        r = result.report
        print(f"seed {seed}: compliance {r.compliance:.6f}, "
              f"mean distance {r.mean_distance_m:.2f} m, "
              f"mass {r.curve_terminal_mass:.6f}")
    agg = {
        "count": len(reports),
        "seeds": [r.seed for r in reports],
        "mean_compliance": float(np.mean([r.compliance for r in reports])),
        "total_exceedances": int(sum(r.exceedances for r in reports)),
        "total_samples": int(sum(r.samples for r in reports)),
        "mean_distance_m": float(np.mean([r.mean_distance_m for r in reports])),
        "mean_duration_s": float(np.mean([r.mean_duration_s for r in reports])),
        "min_separation_m": float(min(r.min_separation_m for r in reports)),
    }
    print(f"batch mean compliance {agg['mean_compliance']:.6f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "aggregate.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(agg, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_init_config(args) -> int:
    path = args.out or "mission.json"
    if args.out and os.path.isdir(args.out):
        path = os.path.join(args.out, "mission.json")
    save_config(MissionConfig(), path)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roverplan",
        description="seeded multi-rover exploration planning and simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, rovers=False, count=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="mission config JSON file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="output directory")
        if rovers:
            p.add_argument("--rovers", type=int, help="override rover count")
        if count:
            p.add_argument("--count", type=int, default=10,
                           help="number of consecutive seeds (default 10)")
        p.set_defaults(fn=fn)
        return p

    add("terrain-stats", _cmd_terrain_stats, "classify terrain and print the split")
    add("gen-pdm", _cmd_gen_pdm, "sample the belief map and rasterize it")
    add("plan-targets", _cmd_plan_targets, "generate the team target chain")
    add("plan-mission", _cmd_plan_mission, "run one full seeded mission",
        rovers=True)
    add("report", _cmd_report, "run a mission and print its report JSON",
        rovers=True)
    add("plot", _cmd_plot, "run a mission and write SVG figures", rovers=True)
    add("batch", _cmd_batch, "run several seeds and aggregate", rovers=True,
        count=True)
    add("init-config", _cmd_init_config, "write a default config file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (MissionError, SegmentFailure, NoPathFound) as err:
        print(f"planning failure: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
