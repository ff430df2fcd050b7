"""Command-line front end: load a system file, run analyses, write reports.

Exit codes: 0 analysis completed (whatever the verdict), 1 usage error,
2 numerical failure (unresolved cells, non-finite simulation), 3 I/O error.
Diagnostics go to stderr as single-line JSON records; results are written as
JSON/CSV files plus a short human summary on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ContourError,
    NeutralSysError,
    NoChainsError,
    SimulationBlowUpError,
    SystemParseError,
    SystemValidationError,
)
from .rootfinder import (
    Rect,
    RootFindOptions,
    find_roots_in_region,
    verify_cluster_multiplicity,
)
from .charmatrix import chain_grid
from .simulate import HistorySegment, norm_profile, simulate
from .reachability import rank_profile
from .stability import ScanOptions, classify_asymptotic
from .structural import check_stabilizability, controllability_report
from .sysmodel import NeutralSystem, load_system

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


@dataclass
class RunConfig:
    command: str
    input_path: str
    output_dir: str = "."
    re_min: float = -1.0
    re_max: float = 1.0
    im_max: float = 40.0
    tol_rank: float | None = None
    tol_root: float | None = None
    T: float = 10.0
    grid_m: int = 200
    seed: int = 0
    k_range: tuple[int, int] = (5, 20)
    basis_policy: str = "permutations"
    control: str = "zero"
    control_amplitude: float = 1.0
    control_frequency: float = 1.0
    control_table: str | None = None
    history: str = "random"
    T_list: tuple[float, ...] = ()
    control_intervals: int = 400
    rank_tau: float = 1e-6


def _diag(level: str, event: str, **detail) -> None:
    print(json.dumps({"level": level, "event": event, **detail}, sort_keys=True),
          file=_sys.stderr)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _root_options(cfg: RunConfig) -> RootFindOptions:
    if cfg.tol_root is None:
        return RootFindOptions(seed=cfg.seed)
    return RootFindOptions(localization_tol=cfg.tol_root, seed=cfg.seed)


def _scan_options(cfg: RunConfig) -> ScanOptions:
    return ScanOptions(im_cap=cfg.im_max, root_options=_root_options(cfg))


def _control_function(cfg: RunConfig, sys_: NeutralSystem):
    if sys_.r == 0 or cfg.control == "zero":
        return None
    if cfg.control == "sine":
        amp, freq = cfg.control_amplitude, cfg.control_frequency
        return lambda t: amp * np.sin(2.0 * np.pi * freq * t) * np.ones(sys_.r)
    if cfg.control == "table":
        if not cfg.control_table:
            raise ValueError("control 'table' needs --control-table FILE")
        rows = np.loadtxt(cfg.control_table, delimiter=",", ndmin=2)
        times, values = rows[:, 0], rows[:, 1:]
        if values.shape[1] != sys_.r:
            raise ValueError(f"control table has {values.shape[1]} channels, need {sys_.r}")

        def table(t):
            i = int(np.searchsorted(times, t, side="right")) - 1
            return values[min(max(i, 0), len(times) - 1)]

        return table
    raise ValueError(f"unknown control spec '{cfg.control}'")


def _history(cfg: RunConfig, sys_: NeutralSystem) -> HistorySegment:
    if cfg.history == "zero":
        return HistorySegment.zero(sys_, cfg.grid_m)
    if cfg.history == "ones":
        return HistorySegment.constant(sys_, np.ones(sys_.n), cfg.grid_m)
    if cfg.history == "random":
        return HistorySegment.random(sys_, cfg.grid_m, cfg.seed)
    raise ValueError(f"unknown history spec '{cfg.history}'")


def _cmd_spectrum(cfg: RunConfig, sys_: NeutralSystem, out: Path) -> int:
    grid = None
    try:
        k_span = int(np.ceil((cfg.im_max * sys_.h + np.pi) / (2 * np.pi))) + 1
        k_span = max(k_span, abs(cfg.k_range[0]), abs(cfg.k_range[1]))
        grid = chain_grid(sys_, -k_span, k_span)
    except NoChainsError:
        pass
    report = find_roots_in_region(
        sys_, Rect(cfg.re_min, cfg.re_max, -cfg.im_max, cfg.im_max), _root_options(cfg), grid
    )
    doc = report.to_json_dict()
    if grid is not None:
        k_lo, k_hi = cfg.k_range
        checks = []
        for m_idx in range(len(grid.eigenvalues)):
            for k in range(k_lo, k_hi + 1):
                count, expected, match = verify_cluster_multiplicity(
                    sys_, grid, k, m_idx, _root_options(cfg)
                )
                checks.append(
                    {"m": m_idx, "k": k, "count": count, "expected": expected, "match": match}
                )
        doc["cluster_checks"] = checks
    _write_json(out / "spectrum.json", doc)
    (out / "roots.csv").write_text(report.to_csv())
    roots = report.all_roots()
    print(f"{len(roots)} root(s), total multiplicity {report.total_count} in window; "
          f"{len(report.unresolved_cells)} unresolved cell(s)")
    for r in roots[:20]:
        print(f"  {r.lam.real:+.9g} {r.lam.imag:+.9g}i  multiplicity {r.multiplicity}")
    if report.unresolved_cells:
        _diag("warning", "unresolved_cells", count=len(report.unresolved_cells))
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_stability(cfg: RunConfig, sys_: NeutralSystem, out: Path) -> int:
    verdict = classify_asymptotic(sys_, _scan_options(cfg))
    _write_json(out / "stability.json", verdict.to_json_dict())
    print(f"exponential: {verdict.exponential}; asymptotic: {verdict.asymptotic_case}")
    if verdict.evidence["scan"]["unresolved_cells"]:
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_stabilizability(cfg: RunConfig, sys_: NeutralSystem, out: Path) -> int:
    report = check_stabilizability(sys_, _scan_options(cfg), cfg.tol_rank)
    _write_json(out / "stabilizability.json", report.to_json_dict())
    print(f"stabilizability: {report.verdict}")
    return EXIT_OK


def _cmd_controllability(cfg: RunConfig, sys_: NeutralSystem, out: Path) -> int:
    report = controllability_report(
        sys_, _scan_options(cfg), policy=cfg.basis_policy, seed=cfg.seed,
        rank_tol=cfg.tol_rank,
    )
    _write_json(out / "controllability.json", report.to_json_dict())
    print(report.summary())
    return EXIT_OK


def _cmd_simulate(cfg: RunConfig, sys_: NeutralSystem, out: Path) -> int:
    phi = _history(cfg, sys_)
    traj = simulate(sys_, phi, _control_function(cfg, sys_), T=cfg.T, m=cfg.grid_m)
    (out / "trajectory.csv").write_text(traj.to_csv())
    prof = norm_profile(traj)
    print(f"simulated to T={traj.times[-1]:.6g} with m={cfg.grid_m}; "
          f"norm start {prof[0, 1]:.6g}, end {prof[-1, 1]:.6g}")
    return EXIT_OK


def _cmd_reach(cfg: RunConfig, sys_: NeutralSystem, out: Path) -> int:
    T_list = cfg.T_list or tuple(sys_.h * f for f in (0.5, 1.5, 2.5, 3.5))
    profile, sigmas = rank_profile(
        sys_, T_list, m=cfg.grid_m, q=cfg.control_intervals, tau=cfg.rank_tau
    )
    (out / "rank_profile.csv").write_text(profile.to_csv(sigmas))
    _write_json(out / "rank_profile.json", profile.to_json_dict())
    marks = ", ".join(f"T={e.T:.6g}: rank {e.effective_rank}" for e in profile.entries)
    print(f"effective ranks ({'monotone' if profile.monotone else 'NOT monotone'}): {marks}")
    return EXIT_OK


def _cmd_report(cfg: RunConfig, sys_: NeutralSystem, out: Path) -> int:
    codes = [_cmd_spectrum(cfg, sys_, out), _cmd_stability(cfg, sys_, out)]
    if sys_.r >= 1:
        codes.append(_cmd_stabilizability(cfg, sys_, out))
        codes.append(_cmd_controllability(cfg, sys_, out))
        codes.append(_cmd_reach(cfg, sys_, out))
    codes.append(_cmd_simulate(cfg, sys_, out))

    stability_doc = json.loads((out / "stability.json").read_text())
    consistency = {
        "exponential_stable_implies_exp_regime": (
            stability_doc["exponential"] != "stable"
            or stability_doc["asymptotic_case"] == "exp_regime"
        )
    }
    files = sorted(
        p.name
        for p in out.iterdir()
        if p.suffix in (".json", ".csv") and p.name not in ("index.json", "run_meta.json")
    )
    _write_json(out / "index.json", {"files": files, "consistency": consistency})
    if not all(consistency.values()):
        _diag("error", "inconsistent_verdicts", detail=consistency)
        return EXIT_NUMERICAL
    return max(codes)


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "stability": _cmd_stability,
    "stabilizability": _cmd_stabilizability,
    "controllability": _cmd_controllability,
    "simulate": _cmd_simulate,
    "reach": _cmd_reach,
    "report": _cmd_report,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        sys_ = load_system(cfg.input_path)
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        _diag("error", "io_error", path=cfg.input_path, detail=str(exc))
        return EXIT_IO
    except SystemParseError as exc:
        _diag("error", "parse_error", path=cfg.input_path, detail=str(exc))
        return EXIT_IO
    except SystemValidationError as exc:
        _diag("error", "validation_error", path=cfg.input_path,
              issues=[list(i) for i in exc.report.issues])
        return EXIT_USAGE

    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _diag("error", "io_error", path=str(out), detail=str(exc))
        return EXIT_IO

    started = time.time()
    try:
        code = _COMMANDS[cfg.command](cfg, sys_, out)
    except SimulationBlowUpError as exc:
        _diag("error", "simulation_blowup", t=exc.t_blowup)
        return EXIT_NUMERICAL
    except ContourError as exc:
        _diag("error", "contour_failure", detail=str(exc))
        return EXIT_NUMERICAL
    except ValueError as exc:
        _diag("error", "usage_error", detail=str(exc))
        return EXIT_USAGE
    except NeutralSysError as exc:
        _diag("error", "analysis_failure", detail=str(exc))
        return EXIT_NUMERICAL
    except OSError as exc:
        _diag("error", "io_error", detail=str(exc))
        return EXIT_IO

    # wall-clock and provenance live outside the deterministic outputs
    _write_json(out / "run_meta.json", {
        "command": cfg.command,
        "input": str(cfg.input_path),
        "seed": cfg.seed,
        "elapsed_s": round(time.time() - started, 3),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    })
    return code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neutralsys",
        description="Spectrum, stability and controllability analysis of "
                    "linear neutral-type delay systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", required=True, help="system description JSON")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--re-min", type=float, default=-1.0)
        p.add_argument("--re-max", type=float, default=1.0)
        p.add_argument("--im-max", type=float, default=40.0)
        p.add_argument("--tol-rank", type=float, default=None)
        p.add_argument("--tol-root", type=float, default=None)
        p.add_argument("--T", type=float, default=10.0)
        p.add_argument("--grid-m", type=int, default=None,
                       help="grid intervals per delay (default: 200 simulate, 100 reach)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--k-range", default="5:20", help="chain index range, MIN:MAX")
        p.add_argument("--basis-policy", default="permutations",
                       help="permutations | random:K")
        p.add_argument("--control", default="zero", help="zero | sine | table")
        p.add_argument("--control-amplitude", type=float, default=1.0)
        p.add_argument("--control-frequency", type=float, default=1.0)
        p.add_argument("--control-table", default=None)
        p.add_argument("--history", default="random", help="zero | ones | random")
        p.add_argument("--T-list", default=None,
                       help="comma-separated horizons for reach")
        p.add_argument("--control-intervals", type=int, default=400)
        p.add_argument("--rank-tau", type=float, default=1e-6)
    return parser


def _config_from_args(args) -> RunConfig:
    k_lo, _, k_hi = args.k_range.partition(":")
    T_list = ()
    if args.T_list:
        T_list = tuple(float(x) for x in args.T_list.split(","))
    grid_m = args.grid_m
    if grid_m is None:
        grid_m = 100 if args.command == "reach" else 200
    return RunConfig(
        command=args.command,
        input_path=args.input,
        output_dir=args.out,
        re_min=args.re_min,
        re_max=args.re_max,
        im_max=args.im_max,
        tol_rank=args.tol_rank,
        tol_root=args.tol_root,
        T=args.T,
        grid_m=grid_m,
        seed=args.seed,
        k_range=(int(k_lo or 5), int(k_hi or 20)),
        basis_policy=args.basis_policy,
        control=args.control,
        control_amplitude=args.control_amplitude,
        control_frequency=args.control_frequency,
        control_table=args.control_table,
        history=args.history,
        T_list=T_list,
        control_intervals=args.control_intervals,
        rank_tau=args.rank_tau,
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return run(_config_from_args(args))


if __name__ == "__main__":
    raise SystemExit(main())
