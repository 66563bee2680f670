"""Command-line front end: ``bosemc {optimize,scan,time-scan,haar-stats,verify}``.

Exit codes: 0 success, 2 usage error, 3 capacity error, 4 verification
failure, 5 some scan points failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .basis import DEFAULT_MAX_ENUMERATE, CapacityError
from .moments import cantelli_lower, cantelli_upper, delta_phi, qfi_statistics, qfi_variance_routes
from .montecarlo import (
    DEFAULT_STEPS,
    OptimizationConfig,
    default_workers,
    haar_qfi_samples,
    optimize,
    scan_evolution_time,
    scan_system_sizes,
    tail_fraction,
)

log = logging.getLogger("bosemc")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_VERIFY, EXIT_PARTIAL = 0, 2, 3, 4, 5

SCAN_COLUMNS = ["N", "L", "F_opt", "mu_exact", "sigma_exact", "sql", "hl", "delta_phi"]
TIME_SCAN_COLUMNS = ["T", "N", "L", "F_opt", "mu_exact", "sigma_exact"]

CONVENTIONS = {
    "time_unit": "1/J, inverse of the typical hopping rate",
    "qfi": "4 Var(sum_i i n_i), 1-based sites",
    "basis_order": "descending lexicographic, index 0 = (N,0,...,0)",
    "step_order": "diagonal, then even bonds (2,3),(4,5)..., then odd bonds (1,2),(3,4)...",
    "dt": "total_time / (3 n_steps)",
    "n_steps_default": DEFAULT_STEPS,
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    """``"10,20,40"`` or inclusive ranges ``"10:50:10"`` (mixable)."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            bits = [int(x) for x in part.split(":")]
            if len(bits) not in (2, 3):
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1
            if step <= 0:
                raise argparse.ArgumentTypeError("range step must be positive")
            values.extend(range(start, stop + 1, step))
        elif part:
            values.append(int(part))
    return values


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser, grid: bool = False) -> None:
    if grid:
        p.add_argument("-N", "--particles", type=_int_list, required=True,
                       help="particle counts, e.g. 10,20,40 or 10:50:10")
        p.add_argument("-L", "--modes", type=_int_list, required=True, help="mode counts")
    else:
        p.add_argument("-N", "--particles", type=int, required=True)
        p.add_argument("-L", "--modes", type=int, required=True)
    p.add_argument("-T", "--time", type=float, default=20.0, help="preparation time in 1/J")
    p.add_argument("-n", "--steps", type=int, default=DEFAULT_STEPS, help="control steps")
    p.add_argument("-v", "--trials", type=int, default=10, help="random trajectories")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hop-range", type=_float_list, default=[0.0, 1.0])
    p.add_argument("--detuning-range", type=_float_list, default=[-1.0, 1.0])
    p.add_argument("--interaction-range", type=_float_list, default=[-1.0, 1.0])
    p.add_argument("--swap-parity", action="store_true",
                   help="exchange the odd/even hop layers (sensitivity check)")
    p.add_argument("--max-dim", type=int, default=DEFAULT_MAX_ENUMERATE,
                   help="refuse bases larger than this (memory guard, about 100 bytes per state)")
    _runtime(p)


def _runtime(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: $BOSEMC_WORKERS or CPU count)")
    p.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto")
    p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--config", type=Path, default=None,
                   help="JSON file of flag values; explicit flags are overridden by it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosemc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="Monte-Carlo search for one (N, L)")
    _common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("scan", help="optimize over an (N, L) grid, CSV rows")
    _common(p, grid=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("time-scan", help="optimized QFI versus preparation time")
    _common(p)
    p.add_argument("--times", type=_float_list, required=True, help="e.g. 0.5,1,2,5,10,20")
    p.set_defaults(func=cmd_time_scan)

    p = sub.add_parser("haar-stats", help="exact and sampled Haar statistics of the QFI")
    p.add_argument("-N", "--particles", type=int, required=True)
    p.add_argument("-L", "--modes", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--f0", type=_float_list, default=None,
                   help="thresholds for the Cantelli bounds (default mu-sigma, mu, mu+sigma)")
    _runtime(p)
    p.set_defaults(func=cmd_haar_stats)

    p = sub.add_parser("verify", help="run the self-verification oracle suite")
    p.add_argument("--quick", action="store_true", help="small-d subset")
    p.add_argument("--inject-fault", action="store_true", help="corrupt a block table (negative test)")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.set_defaults(func=cmd_verify)
    return parser


# -- helpers ---------------------------------------------------------------------


def _apply_config_file(args) -> None:
    if getattr(args, "config", None) is None:
        return
    try:
        data = json.loads(args.config.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {args.config}: {exc}") from exc
    for key, value in data.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r}")
        setattr(args, dest, value)


def _make_config(args, N=None, L=None) -> OptimizationConfig:
    for name in ("hop_range", "detuning_range", "interaction_range"):
        if len(getattr(args, name)) != 2:
            raise UsageError(f"--{name.replace('_', '-')} needs two values lo,hi")
    try:
        return OptimizationConfig(
            n_particles=args.particles if N is None else N,
            n_modes=args.modes if L is None else L,
            total_time=args.time,
            n_steps=args.steps,
            n_trials=args.trials,
            seed=args.seed,
            hop_range=tuple(args.hop_range),
            detuning_range=tuple(args.detuning_range),
            interaction_range=tuple(args.interaction_range),
            swap_parity=args.swap_parity,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _workers(args) -> int:
    try:
        workers = default_workers() if args.workers is None else args.workers
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if workers < 1:
        raise UsageError("--workers must be positive")
    return workers


def _write(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _runtime_meta(args, started: float) -> dict:
    return {
        "elapsed_seconds": time.perf_counter() - started,
        "workers": _workers(args) if hasattr(args, "workers") else 1,
        "kernel_backend": kernels.backend_name(kernels.get_backend(getattr(args, "backend", None))),
    }


def _finite(x: float):
    return x if math.isfinite(x) else None


# -- subcommands -----------------------------------------------------------------


def run_record(result, args, started: float) -> dict:
    stats = result.statistics
    return {
        "schema_version": SCHEMA_VERSION,
        "artifact": {"name": "bosemc", "version": __version__},
        "command": "optimize",
        "config": result.config.to_dict(),
        "conventions": CONVENTIONS,
        "results": {
            "best_qfi": result.best_qfi,
            "best_trial_index": result.best_trial_index,
            "all_qfi": result.all_qfi.tolist(),
            "mu_exact": stats.mean_exact,
            "sigma_exact": stats.std_exact,
            "mu_minus_sigma": stats.intermediate,
            "sql": stats.sql,
            "hl": stats.hl,
            "delta_phi": _finite(delta_phi(result.best_qfi)),
            "dimension": stats.dimension,
        },
        "best_trajectory": result.best_trajectory.to_dict(),
        "timing": _runtime_meta(args, started),
    }


def cmd_optimize(args) -> int:
    started = time.perf_counter()
    config = _make_config(args)
    result = optimize(config, workers=_workers(args), backend=args.backend, max_dim=args.max_dim)
    if args.format == "csv":
        rows = [[r, repr(float(F))] for r, F in enumerate(result.all_qfi)]
        _write(args, _csv(["trial", "qfi"], rows))
    else:
        _write(args, _json(run_record(result, args, started)))
    return EXIT_OK


def _report_failures(args, rows) -> int:
    failed = [r for r in rows if not r.ok]
    if not failed:
        return EXIT_OK
    lines = [f"N={r.n_particles} L={r.n_modes} T={r.total_time}: {r.error}" for r in failed]
    if args.out is not None:
        sidecar = args.out.with_name(args.out.name + ".errors.log")
        sidecar.write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        log.error("scan point failed: %s", line)
    return EXIT_PARTIAL


def _num(x):
    return repr(float(x)) if math.isfinite(x) else ""


def cmd_scan(args) -> int:
    template = _make_config(args, N=max(args.particles, default=0), L=max(args.modes, default=1))
    rows = scan_system_sizes(args.modes, args.particles, template,
                             workers=_workers(args), backend=args.backend, max_dim=args.max_dim)
    if args.format == "json":
        _write(args, _json([{
            "N": r.n_particles, "L": r.n_modes, "F_opt": _finite(r.f_opt),
            "mu_exact": _finite(r.mu_exact), "sigma_exact": _finite(r.sigma_exact),
            "sql": _finite(r.sql), "hl": _finite(r.hl), "delta_phi": _finite(r.delta_phi),
            "seed": r.seed, "error": r.error,
        } for r in rows]))
    else:
        _write(args, _csv(SCAN_COLUMNS, [
            [r.n_particles, r.n_modes, _num(r.f_opt), _num(r.mu_exact), _num(r.sigma_exact),
             _num(r.sql), _num(r.hl), _num(r.delta_phi)]
            for r in rows
        ]))
    return _report_failures(args, rows)


def cmd_time_scan(args) -> int:
    template = _make_config(args)
    rows = scan_evolution_time(args.particles, args.modes, args.times, template,
                               workers=_workers(args), backend=args.backend, max_dim=args.max_dim)
    if args.format == "json":
        _write(args, _json([{
            "T": r.total_time, "N": r.n_particles, "L": r.n_modes, "F_opt": _finite(r.f_opt),
            "mu_exact": _finite(r.mu_exact), "sigma_exact": _finite(r.sigma_exact),
            "seed": r.seed, "error": r.error,
        } for r in rows]))
    else:
        _write(args, _csv(TIME_SCAN_COLUMNS, [
            [_num(r.total_time), r.n_particles, r.n_modes, _num(r.f_opt),
             _num(r.mu_exact), _num(r.sigma_exact)]
            for r in rows
        ]))
    return _report_failures(args, rows)


def haar_report(N: int, L: int, n_samples: int, seed: int, thresholds=None) -> dict:
    stats = qfi_statistics(N, L)
    closed, second = qfi_variance_routes(N, L)
    samples = haar_qfi_samples(N, L, n_samples, seed)
    M = samples.size
    mean, var = float(samples.mean()), float(samples.var(ddof=1))
    # standard error of the sample variance from the fourth central moment
    m4 = float(np.mean((samples - mean) ** 4))
    var_se = math.sqrt(max(m4 - var**2, 0.0) / M)
    mu, sigma = stats.mean_exact, stats.std_exact
    if thresholds is None:
        thresholds = [mu - sigma, mu, mu + sigma]
    bounds = []
    for F0 in thresholds:
        tail = tail_fraction(samples, F0)
        entry = {"F0": F0, "empirical_tail": tail.probability, "stderr": tail.stderr}
        if sigma > 0 and F0 >= mu:
            entry["cantelli_upper"] = cantelli_upper(F0, mu, sigma)
        if sigma > 0 and F0 <= mu:
            entry["cantelli_lower"] = cantelli_lower(F0, mu, sigma)
        bounds.append(entry)
    tail_ms = tail_fraction(samples, mu - sigma)
    return {
        "schema_version": SCHEMA_VERSION,
        "artifact": {"name": "bosemc", "version": __version__},
        "command": "haar-stats",
        "config": {"n_particles": N, "n_modes": L, "n_samples": n_samples, "seed": seed},
        "exact": {
            **stats.to_dict(),
            "variance_closed_form": closed,
            "variance_second_moment": second,
        },
        "sampled": {
            "mean": mean,
            "mean_stderr": float(samples.std(ddof=1) / math.sqrt(M)),
            "variance": var,
            "variance_stderr": var_se,
            "tail_above_mu_minus_sigma": tail_ms.probability,
            "tail_stderr": tail_ms.stderr,
        },
        "cantelli": bounds,
    }


def cmd_haar_stats(args) -> int:
    started = time.perf_counter()
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    report = haar_report(args.particles, args.modes, args.samples, args.seed, args.f0)
    report["timing"] = _runtime_meta(args, started)
    if args.format == "csv":
        rows = [[b["F0"], b["empirical_tail"], b["stderr"], b.get("cantelli_lower", ""),
                 b.get("cantelli_upper", "")] for b in report["cantelli"]]
        _write(args, _csv(["F0", "empirical_tail", "stderr", "cantelli_lower", "cantelli_upper"], rows))
    else:
        _write(args, _json(report))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(quick=args.quick, inject_fault=args.inject_fault)
    ok = all(r.passed for r in results)
    if args.format == "json":
        text = _json({
            "schema_version": SCHEMA_VERSION,
            "command": "verify",
            "passed": ok,
            "checks": [vars(r) for r in results],
        })
    else:
        lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<18} {r.detail}  ({r.seconds:.2f}s)"
                 for r in results]
        lines.append("all checks passed" if ok else "verification FAILED")
        text = "\n".join(lines) + "\n"
    _write(args, text)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_config_file(args)
        if getattr(args, "backend", "auto") != "auto":
            kernels.get_backend(args.backend)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bosemc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"bosemc: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ValueError as exc:
        print(f"bosemc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
