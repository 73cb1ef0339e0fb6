"""Command-line front end.

    popdyn simulate|solve|compare [config.json] [--preset NAME] [--out DIR]
                                  [--seed U64] [--tolerance F]
    popdyn --list-presets

A preset with several learner arms writes each arm into its own
subdirectory of the output directory.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path
import sys
import time

from . import abm, analysis, config, export, pde
from .errors import ConfigError, DomainError

EXIT_OK = 0
EXIT_GAP = 1
EXIT_USAGE = 2


def _abm_trace(cfg: config.ScenarioConfig):
    grid = cfg.resolved_grid() if cfg.snapshot_times else None
    return abm.run_ensemble(
        cfg.game, cfg.learner, cfg.initial, cfg.n, cfg.horizon, cfg.runs, cfg.seed,
        histogram_grid=grid, snapshot_times=cfg.snapshot_times,
    )


def _pde_trace(cfg: config.ScenarioConfig):
    s = cfg.solver
    return pde.solve(
        cfg.game, cfg.learner, cfg.initial, grid=cfg.resolved_grid(), horizon=cfg.horizon,
        snapshot_times=cfg.snapshot_times, cfl=s.cfl, max_dt=s.max_dt, coupling=s.coupling,
    )


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("output_dir", f"cannot create {out}: {exc.strerror}") from None
    return out


def cmd_simulate(cfg: config.ScenarioConfig, out_dir=None):
    out = _prepare(out_dir or cfg.output_dir)
    trace = _abm_trace(cfg)
    export.write_abm_trace(out, trace)
    return trace


def cmd_solve(cfg: config.ScenarioConfig, out_dir=None):
    out = _prepare(out_dir or cfg.output_dir)
    trace = _pde_trace(cfg)
    export.write_pde_trace(out, trace)
    return trace


@dataclass
class CompareResult:
    report: analysis.ComparisonReport
    pde: pde.PdeTrace
    abm: abm.AbmTrace
    pde_seconds: float


def cmd_compare(cfg: config.ScenarioConfig, out_dir=None, plot: bool = True) -> CompareResult:
    """Run both solvers and write both traces, the report and the plot."""
    out = _prepare(out_dir or cfg.output_dir)
    t0 = time.perf_counter()
    ptrace = _pde_trace(cfg)
    seconds = time.perf_counter() - t0
    atrace = _abm_trace(cfg)
    report = analysis.compare(ptrace, atrace)
    # all writes happen after both solvers finish
    export.write_pde_trace(out, ptrace)
    export.write_abm_trace(out, atrace)
    export.write_report(out, report)
    if plot:
        export.plot_compare(out / "compare.svg", report, title=cfg.name)
    return CompareResult(report, ptrace, atrace, seconds)


def _scenarios(args) -> list[tuple[config.ScenarioConfig, Path]]:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("", "give exactly one of a config file or --preset")
    if args.config is not None:
        try:
            cfgs = (config.load(args.config),)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
    else:
        cfgs = config.preset(args.preset)
    scen = []
    for cfg in cfgs:
        cfg = cfg.with_overrides(seed=args.seed, tolerance=args.tolerance)
        if args.out is None:
            out = Path(cfg.output_dir)
        elif len(cfgs) > 1:
            out = Path(args.out) / cfg.name
        else:
            out = Path(args.out)
        scen.append((cfg, out))
    return scen


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= config.U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="popdyn",
        description="Population learning dynamics: agent-based simulation vs. density PDE.",
    )
    p.add_argument("--list-presets", action="store_true", help="list preset names and exit")
    p.add_argument("command", nargs="?", choices=("simulate", "solve", "compare"))
    p.add_argument("config", nargs="?", help="scenario JSON file")
    p.add_argument("--preset", help="named scenario instead of a config file")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=_u64, help="base seed (overrides the config)")
    p.add_argument("--tolerance", type=float, help="max ABM-vs-PDE gap for compare")
    p.add_argument("--dump-config", action="store_true", help="print the resolved scenario JSON and exit")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        for name, arms in config.PRESETS.items():
            labels = ", ".join(a.learner.family for a in arms)
            print(f"{name:20s} {type(arms[0].game).__name__:12s} {labels}")
        return EXIT_OK
    if args.command is None:
        parser.error("a command is required unless --list-presets is given")
    if args.tolerance is not None and not args.tolerance >= 0.0:
        parser.error("--tolerance must be non-negative")
    try:
        scenarios = _scenarios(args)
        if args.dump_config:
            for cfg, _ in scenarios:
                sys.stdout.write(config.dumps(cfg))
            return EXIT_OK
        status = EXIT_OK
        for cfg, out in scenarios:
            if args.command == "simulate":
                tr = cmd_simulate(cfg, out)
                print(f"{cfg.name}: final mean prob a1 {tr.prob[-1]:.6f} -> {out}")
            elif args.command == "solve":
                tr = cmd_solve(cfg, out)
                print(f"{cfg.name}: final expected prob a1 {tr.prob[-1]:.6f} -> {out}")
            else:
                rep = cmd_compare(cfg, out).report
                ok = rep.max_gap <= cfg.tolerance
                print(f"[{cfg.name}] {'ok' if ok else 'GAP EXCEEDED'} (tolerance {cfg.tolerance}) -> {out}")
                print(rep.summary())
                if not ok:
                    status = EXIT_GAP
        return status
    except (ConfigError, DomainError) as exc:
        print(f"popdyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"popdyn: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
