"""Command-line front end: list presets, run simulations, export CSV/JSON.

Exports are plain-text and lossless: comma-separated CSVs with 17
significant digits, a meta.json that fully reconstructs the run (it is
written even when the run fails, carrying a machine-readable error), and
optional standalone gnuplot scripts.  Exit codes: 0 success, 2 usage,
3 validation problem, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .closed import FockTruncation, NumericalFailure, simulate_closed
from .heom import heom_evolve
from .scenarios import (ConfigError, RunConfig, load_config, preset,
                        preset_names, serialize)
from .wigner import WignerGrid, grid_normalization, wigner_function
from .closed import reduced_phonon_state

__all__ = ["ExportBundle", "main", "cmd_list", "cmd_run"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4


@dataclass
class ExportBundle:
    """Paths of everything a run wrote."""

    directory: Path
    populations: Path | None = None
    observables: Path | None = None
    coherences: Path | None = None
    wigner_frames: list[Path] = field(default_factory=list)
    meta: Path | None = None
    plots: list[Path] = field(default_factory=list)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]):
    rows = len(columns[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(float(col[i])) for col in columns) + "\n")


def cmd_list(stream=None) -> str:
    """One line per preset: name, regime, and source label (alphabetical)."""
    lines = []
    for name in preset_names():
        p = preset(name)
        lines.append(f"{name:<8} {p.regime:<6} {p.source:<16} "
                     f"{p.description}")
    text = "\n".join(lines)
    print(text, file=stream or sys.stdout)
    return text


def _resolve_config(args) -> RunConfig:
    if bool(args.scenario) == bool(args.config):
        raise UsageError("exactly one of --scenario or --config is required")
    if args.scenario:
        try:
            cfg = preset(args.scenario).to_config()
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    else:
        cfg = load_config(args.config)

    overrides = {}
    if args.tmax is not None:
        cfg.tmax = args.tmax
        overrides["tmax"] = args.tmax
    if args.dt_out is not None:
        cfg.dt_out = args.dt_out
        overrides["dt_out"] = args.dt_out
    if args.fock_max is not None:
        cfg.n_max = args.fock_max
        overrides["fock_max"] = args.fock_max
    if args.heom_cutoff is not None:
        cfg.heom_cutoff = args.heom_cutoff
        overrides["heom_cutoff"] = args.heom_cutoff
    if args.wigner_frames is not None:
        cfg.wigner_frames = args.wigner_frames
        overrides["wigner_frames"] = args.wigner_frames
    cfg.applied_overrides = overrides
    if cfg.wigner_frames and cfg.regime != "closed":
        raise ConfigError("wigner frames require the closed regime "
                          "(the open solver tracks no phonon state)")
    return cfg


class UsageError(Exception):
    pass


def _versions() -> dict:
    return {
        "package": "dretsim",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }


def _limit_threads(count: int):
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(limits=count)
    except ImportError:                        # pragma: no cover
        os.environ["OMP_NUM_THREADS"] = str(count)
        return None


def _run_closed(cfg: RunConfig, bundle: ExportBundle, meta: dict):
    trunc = FockTruncation(n_max=cfg.n_max)
    result = simulate_closed(cfg.chain, cfg.mode, cfg.start_site,
                             cfg.tmax, cfg.dt_out, trunc)
    n = cfg.chain.n_sites
    bundle.populations = bundle.directory / "populations.csv"
    _write_csv(bundle.populations,
               ["t"] + [f"P_{k}" for k in range(1, n + 1)],
               [result.times] + [result.populations[:, k]
                                 for k in range(n)])
    norms = np.linalg.norm(result.states, axis=1)
    bundle.observables = bundle.directory / "observables.csv"
    _write_csv(bundle.observables, ["t", "delta", "energy", "norm"],
               [result.times, result.delta, result.energy, norms])
    meta["convergence"] = {
        "n_max": result.n_max,
        "escalations": result.escalations,
        "truncation_error": result.truncation_error,
        "norm_error": result.norm_error,
    }
    if cfg.wigner_frames:
        _render_wigner(cfg, result, bundle, meta)
    return result


def _render_wigner(cfg: RunConfig, result, bundle: ExportBundle, meta: dict):
    frames = cfg.wigner_frames
    count = len(result.times)
    if frames > count:
        raise ConfigError(f"{frames} wigner frames requested but only "
                          f"{count} output times exist")
    grid = WignerGrid(extent=cfg.wigner_extent, points=cfg.wigner_points)
    qq, pp = grid.mesh()
    q_col = qq.reshape(-1)
    p_col = pp.reshape(-1)
    picks = np.unique(np.round(np.linspace(0, count - 1, frames)).astype(int))
    frame_meta = []
    width = max(4, len(str(count - 1)))
    for idx in picks:
        rho_ph = reduced_phonon_state(result.states[idx], cfg.chain.n_sites)
        field_vals = wigner_function(rho_ph, qq, pp)
        path = bundle.directory / f"wigner_{idx:0{width}d}.csv"
        _write_csv(path, ["Q", "P", "W"],
                   [q_col, p_col, field_vals.reshape(-1)])
        bundle.wigner_frames.append(path)
        frame_meta.append({
            "file": path.name,
            "time": float(result.times[idx]),
            "normalization": grid_normalization(field_vals, grid),
        })
    meta["wigner"] = {
        "extent": grid.extent,
        "points": grid.points,
        "frames": frame_meta,
    }


def _run_heom(cfg: RunConfig, bundle: ExportBundle, meta: dict):
    rho0 = np.zeros((cfg.chain.n_sites,) * 2, dtype=complex)
    rho0[cfg.start_site - 1, cfg.start_site - 1] = 1.0
    result = heom_evolve(cfg.chain, cfg.bath, rho0, cfg.tmax, cfg.dt_out,
                         cfg.heom_cutoff, start_site=cfg.start_site,
                         rtol=cfg.rtol if cfg.rtol else 1e-7,
                         atol=cfg.atol if cfg.atol else 1e-10)
    n = cfg.chain.n_sites
    bundle.populations = bundle.directory / "populations.csv"
    _write_csv(bundle.populations,
               ["t"] + [f"P_{k}" for k in range(1, n + 1)],
               [result.times] + [result.populations[:, k]
                                 for k in range(n)])
    trace = result.populations.sum(axis=1)
    bundle.observables = bundle.directory / "observables.csv"
    _write_csv(bundle.observables, ["t", "delta", "trace"],
               [result.times, result.delta, trace])
    pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
    bundle.coherences = bundle.directory / "coherences.csv"
    _write_csv(bundle.coherences,
               ["t"] + [f"abs_rho_{j + 1}_{k + 1}" for j, k in pairs],
               [result.times] + [np.abs(result.rho[:, j, k])
                                 for j, k in pairs])
    meta["convergence"] = {
        "heom_cutoff": result.cutoff,
        "method": result.method,
        "rtol": result.rtol,
        "atol": result.atol,
        "trace_error": result.trace_error,
        "hermiticity_error": result.hermiticity_error,
        "min_eigenvalue": result.min_eigenvalue,
    }
    return result


_GNUPLOT_HEADER = """\
# standalone gnuplot script; run from the directory holding the CSVs
set datafile separator ','
set key autotitle columnhead
set grid
"""


def _emit_plots(cfg: RunConfig, bundle: ExportBundle):
    n = cfg.chain.n_sites
    pop = bundle.directory / "populations.gp"
    pop.write_text(
        _GNUPLOT_HEADER
        + "set xlabel 't [1/J]'\nset ylabel 'population'\n"
        + f"plot for [i=2:{n + 1}] 'populations.csv' using 1:i with lines\n"
        + "pause -1\n")
    bundle.plots.append(pop)
    obs = bundle.directory / "observables.gp"
    obs.write_text(
        _GNUPLOT_HEADER
        + "set xlabel 't [1/J]'\nset ylabel 'rms displacement'\n"
        + "plot 'observables.csv' using 1:2 with lines\n"
        + "pause -1\n")
    bundle.plots.append(obs)
    if bundle.wigner_frames:
        wig = bundle.directory / "wigner.gp"
        first = bundle.wigner_frames[0].name
        wig.write_text(
            _GNUPLOT_HEADER
            + "set view map\nset xlabel 'Q'\nset ylabel 'P'\n"
            + "set size square\n"
            + f"splot '{first}' using 1:2:3 with points pt 5 ps 0.4 "
            + "palette\npause -1\n")
        bundle.plots.append(wig)


def cmd_run(args) -> tuple[int, ExportBundle]:
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = ExportBundle(directory=out_dir)
    bundle.meta = out_dir / "meta.json"
    meta = {
        "status": "error",
        "error": {"type": "Incomplete", "message": "run did not finish"},
        "tool": _versions(),
        "threads": args.threads,
        "config": None,
        "overrides": {},
        "warnings": [],
        "outputs": {},
    }
    code = EXIT_OK
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = _resolve_config(args)
            meta["config"] = serialize(cfg)
            meta["config"]["name"] = cfg.name or (args.scenario or "")
            if cfg.regime == "closed":
                meta["config"].setdefault("wigner", {})
                meta["config"]["wigner"] = {
                    "frames": cfg.wigner_frames,
                    "extent": cfg.wigner_extent,
                    "points": cfg.wigner_points,
                }
            meta["overrides"] = getattr(cfg, "applied_overrides", {})
            meta["defaults_applied"] = cfg.applied_defaults
            limiter = _limit_threads(args.threads)
            try:
                if cfg.regime == "closed":
                    _run_closed(cfg, bundle, meta)
                else:
                    _run_heom(cfg, bundle, meta)
            finally:
                if limiter is not None:
                    limiter.unregister()
            if args.emit_plots:
                _emit_plots(cfg, bundle)
            meta["warnings"] = [str(w.message) for w in caught]
        for text in meta["warnings"]:
            print(f"warning: {text}", file=sys.stderr)
        meta["status"] = "ok"
        meta["error"] = None
    except UsageError as exc:
        meta["error"] = {"type": "UsageError", "message": str(exc)}
        print(f"usage error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (ConfigError, ValueError, KeyError, IndexError) as exc:
        meta["error"] = {"type": type(exc).__name__, "message": str(exc)}
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_VALIDATION
    except (NumericalFailure, MemoryError, ArithmeticError) as exc:
        meta["error"] = {"type": type(exc).__name__, "message": str(exc)}
        print(f"numeric failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC

    meta["outputs"] = {
        "populations": bundle.populations.name if bundle.populations else None,
        "observables": bundle.observables.name if bundle.observables else None,
        "coherences": bundle.coherences.name if bundle.coherences else None,
        "wigner_frames": [p.name for p in bundle.wigner_frames],
        "plots": [p.name for p in bundle.plots],
    }
    with open(bundle.meta, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return code, bundle


def _default_threads() -> int:
    env = os.environ.get("DRET_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dret",
        description="Simulate exciton transport through shared phonons: "
                    "closed chain+mode dynamics or hierarchy-based open "
                    "dynamics, exported as CSV.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list available presets")
    run = sub.add_parser("run", help="run a preset or a config file")
    run.add_argument("--scenario", help="preset name (see 'dret list')")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--tmax", type=float, help="override final time")
    run.add_argument("--dt-out", type=float, help="override output interval")
    run.add_argument("--fock-max", type=int,
                     help="override starting Fock truncation (closed)")
    run.add_argument("--heom-cutoff", type=int,
                     help="override hierarchy depth (open)")
    run.add_argument("--wigner-frames", type=int,
                     help="number of phase-space frames to export (closed)")
    run.add_argument("--out", help="output directory (default: cwd)")
    run.add_argument("--threads", type=int, default=_default_threads(),
                     help="BLAS/OpenMP thread cap (default: DRET_THREADS "
                          "or 1); results are byte-identical at 1")
    run.add_argument("--emit-plots", action="store_true",
                     help="write standalone gnuplot scripts next to the CSVs")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    if args.command == "list":
        cmd_list()
        return EXIT_OK
    code, _bundle = cmd_run(args)
    return code


if __name__ == "__main__":                     # pragma: no cover
    sys.exit(main())
