"""Command-line entry point: ``fbm-lab <command> [options]``.

Exit codes: 0 success (all checks pass for ``verify``), 1 a check failed,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import filecmp
import json
import platform
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy

from . import __version__
from ._backend import NAME as BACKEND
from .acceptance import (
    RUNNERS,
    TAIL_COLUMNS,
    TIME_BUDGET,
    CriterionResult,
    checks_table,
    merge_tables,
    run_criterion,
)
from .bounds import growth_exponent, sum_psi_squared
from .config import ExperimentConfig, build_config, load_config
from .diagnostics import check_g_holder_bound, sup_bm_moment, sup_bm_samples, sup_bm_tail
from .errors import FbmLabError
from .harness import choose_method, fit_scaling_exponent, run_occupation, stream_blocks
from .parallel import get_threads, set_threads
from .report import build_report
from .sampler import RngStream, TimeGrid, sample_batch
from .sde import integrate_batch
from .tables import FORMATS, Table, find_tables, write_table

COMMANDS = ("sample", "integrate", "bounds", "diagnose", "run", "verify", "report")
SUP_LEVELS = (0.5, 1.0, 1.5, 2.0, 3.0)
SUP_STEPS = 1024


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit code 2 without SystemExit noise
        raise UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fbm-lab", description="Simulate and verify fBm-driven SDE concentration bounds.")
    p.add_argument("--version", action="version", version=f"fbm-lab {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="TOML experiment configuration")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--threads", type=int, help="worker threads (overrides FBM_LAB_THREADS)")
        s.add_argument("--out", type=Path, help="run directory")
        s.add_argument("--format", choices=FORMATS, default="csv")
        if name in ("sample", "integrate"):
            s.add_argument("--paths", type=int, default=1, help="number of replicas to write")
        if name == "verify":
            s.add_argument("--criteria", default="all", help="comma-separated criterion numbers, or 'all'")
            s.add_argument("--no-repro", action="store_true", help="skip the rerun with another thread count")
    return p


# ---------------------------------------------------------------- helpers


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else build_config({})
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _out_dir(args, seed: int) -> Path:
    return args.out if args.out is not None else Path("runs") / f"{args.command}-seed{seed}"


def _versions() -> dict[str, str]:
    return {
        "fbm_lab": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _write_manifest(out: Path, args, seed: int, config: dict[str, Any] | None, streams: dict, wall: float,
                    tables: list[Path], extra: dict[str, Any] | None = None) -> Path:
    manifest = {
        "command": args.command,
        "seed": seed,
        "threads": get_threads(),
        "format": args.format,
        "config": config,
        "versions": _versions(),
        "streams": {k: list(v) for k, v in streams.items()},
        "wall_time_seconds": wall,
        "tables": sorted(p.name for p in tables),
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def _horizon_steps(cfg: ExperimentConfig) -> int:
    m = cfg.steps_per(cfg.burn_in, "burn_in")
    spans = [max(cfg.n_list, default=0) * cfg.steps_per(cfg.delta, "delta")]
    spans += [cfg.steps_per(t, "t_list entry") for t in cfg.t_list]
    return m + max(max(spans), 1)


def _path_table(name: str, grid: TimeGrid, ids: range, paths: np.ndarray) -> Table:
    d = paths.shape[2]
    tab = Table(name, ("stream", "t", *[f"comp_{k}" for k in range(d)]))
    times = grid.times
    for r, sid in enumerate(ids):
        for j, t in enumerate(times):
            tab.add(stream=sid, t=float(t), **{f"comp_{k}": float(paths[r, j, k]) for k in range(d)})
    return tab


# --------------------------------------------------------------- commands


def cmd_sample(args, cfg: ExperimentConfig) -> tuple[list[Table], dict, int]:
    if args.paths < 1:
        raise UsageError("--paths must be >= 1")
    steps = _horizon_steps(cfg)
    grid = TimeGrid.from_step(cfg.dt, steps)
    ids = range(cfg.stream_base, cfg.stream_base + args.paths)
    method = choose_method(cfg, steps)
    fbm = sample_batch(method, cfg.kernel, grid, cfg.dim, cfg.seed, ids)
    tables = [_path_table("fbm_paths", grid, ids, fbm)]
    if args.command == "integrate":
        y = integrate_batch(cfg.sde, cfg.dt, fbm)
        tables.append(_path_table("sde_paths", grid, ids, y))
    return tables, {"paths": (ids.start, ids.stop)}, 0


def cmd_bounds(args, cfg: ExperimentConfig) -> tuple[list[Table], dict, int]:
    h = cfg.hurst.h
    cp = cfg.get("bounds.c_prime")
    tab = Table("bounds", ("mode", "H", "n_or_T", "k", "psi", "psi_sq_cumsum", "growth_exponent"))
    e = growth_exponent(h)
    jobs = [("discrete", n, dict(n=n)) for n in cfg.n_list if n >= 2]
    jobs += [("continuous", t, dict(t_horizon=t)) for t in cfg.t_list]
    for mode, hz, kw in jobs:
        prof = sum_psi_squared(h, c_prime=cp, **kw)
        cum = np.cumsum(prof.psi_values**2)
        for k, (psi, c) in enumerate(zip(prof.psi_values, cum), start=1):
            tab.add(mode=mode, H=h, n_or_T=hz, k=k, psi=float(psi), psi_sq_cumsum=float(c), growth_exponent=e)
    return [tab], {}, 0


def cmd_diagnose(args, cfg: ExperimentConfig) -> tuple[list[Table], dict, int]:
    h = cfg.hurst.h
    rep = check_g_holder_bound(cfg.kernel)
    holder = Table("holder", ("v", "v_prime", "k", "H", "second_moment", "bound_ratio"))
    for row in rep.rows:
        holder.add(v=row.v, v_prime=row.v_prime, k=row.k, H=h, second_moment=row.second_moment,
                   bound_ratio=row.bound_ratio)
    ids = (cfg.stream_base, cfg.stream_base + cfg.replicas)
    rng = RngStream(cfg.seed, ids[0])
    samples = sup_bm_samples(cfg.dim, cfg.replicas, SUP_STEPS, rng, cfg.chunk)
    sup = Table("sup_tails", ("x", "p", "estimate", "stderr", "comparator"))
    for r in sup_bm_tail(list(SUP_LEVELS), cfg.dim, cfg.replicas, SUP_STEPS, rng, samples=samples):
        sup.add(x=r.x, p=None, estimate=r.norm.value, stderr=r.norm.stderr, comparator=r.gaussian_comparator)
    for p in (2, 4, 6, 8, 10, 12):
        m = sup_bm_moment(p, cfg.dim, cfg.replicas, SUP_STEPS, rng, samples=samples)
        sup.add(x=None, p=p, estimate=m.estimate.value, stderr=m.estimate.stderr, comparator=m.comparator)
    code = 0 if rep.passed else 1
    return [holder, sup], {"sup paths": ids}, code


def cmd_run(args, cfg: ExperimentConfig) -> tuple[list[Table], dict, int]:
    occ = run_occupation(cfg)
    tables: list[Table] = []
    for mode, tab in occ.items():
        t = Table(f"tails_{mode}", TAIL_COLUMNS)
        for row in tab.rows:
            t.add(H=row.h, n_or_T=row.horizon, delta=row.delta, r=row.r, estimate=row.estimate.value,
                  stderr=row.estimate.stderr, envelope=row.envelope, censored=row.censored)
        tables.append(t)
    spans = sorted(cfg.n_list)
    if len(spans) >= 2 and spans[-1] / spans[0] >= 8:
        rep = fit_scaling_exponent(cfg, occ)
        ex = Table("exponents", ("H", "quantity", "slope", "slope_stderr", "target"))
        for r in rep.rows:
            ex.add(H=r.h, quantity=r.quantity, slope=r.slope, slope_stderr=r.slope_stderr, target=r.target)
        tables.append(ex)
        ov = Table("oracle_variance", ("H", "mode", "n_or_T", "variance"))
        for mode, pairs in rep.oracle_variances.items():
            for hz, v in pairs:
                ov.add(H=cfg.hurst.h, mode=mode, n_or_T=hz, variance=v)
        if ov.rows:
            tables.append(ov)
    return tables, stream_blocks(cfg), 0


def _criteria(spec: str) -> list[int]:
    if spec == "all":
        return sorted(RUNNERS)
    try:
        nums = sorted({int(x) for x in spec.split(",") if x.strip()})
    except ValueError:
        raise UsageError(f"--criteria: cannot parse {spec!r}") from None
    bad = [n for n in nums if n not in RUNNERS]
    if bad or not nums:
        raise UsageError(f"--criteria: unknown criteria {bad}; choose from {sorted(RUNNERS)} or 'all'")
    return nums


def _run_suite(nums: list[int], seed: int) -> tuple[list[CriterionResult], list[Table]]:
    results = [run_criterion(n, seed) for n in nums]
    return results, [checks_table(results), *merge_tables(results)]


def cmd_verify(args, seed: int, out: Path) -> int:
    nums = _criteria(args.criteria)
    t0 = time.perf_counter()
    results, tables = _run_suite(nums, seed)
    wall = time.perf_counter() - t0
    written = [write_table(t, out, args.format) for t in tables]
    for r in results:
        print(r.line(), flush=True)

    # criterion 10: same tables from another thread count, and the time budget
    repro = CriterionResult(10, "reproducibility across thread counts and wall-time budget")
    repro.add("verify wall time [s]", wall, f"< {TIME_BUDGET:g}", wall < TIME_BUDGET)
    if args.no_repro:
        repro.add("rerun with another thread count", float("nan"), "skipped", True, gating=False)
    else:
        threads = get_threads()
        other = 8 if threads != 8 else 1
        rdir = out / f"repro_threads_{other}"
        set_threads(other)
        try:
            _, again = _run_suite(nums, seed)
        finally:
            set_threads(threads)
        rewritten = [write_table(t, rdir, args.format) for t in again]
        same = [filecmp.cmp(a, b, shallow=False) for a, b in zip(written, rewritten)]
        identical = len(written) == len(rewritten) and all(same)
        repro.add(f"tables byte-identical with {threads} and {other} threads", float(sum(same)),
                  f"{len(written)} of {len(written)} files", identical)
    print(repro.line(), flush=True)
    results.append(repro)

    streams = {f"criterion {r.number} {k}": v for r in results for k, v in r.streams.items()}
    summary = {str(r.number): {"passed": r.passed, "seconds": r.seconds,
                               "checks": [[c.label, c.value, c.target, c.passed, c.gating] for c in r.checks]}
               for r in results}
    _write_manifest(out, args, seed, None, streams, wall, written, {"criteria": summary})
    build_report(out)
    return 0 if all(r.passed for r in results) else 1


def cmd_report(args) -> int:
    if args.out is None:
        raise UsageError("report needs --out <run directory>")
    if not args.out.is_dir():
        raise UsageError(f"run directory not found: {args.out}")
    if not find_tables(args.out):
        raise UsageError(f"no result tables in {args.out}")
    for p in build_report(args.out):
        print(p)
    return 0


HANDLERS = {"sample": cmd_sample, "integrate": cmd_sample, "bounds": cmd_bounds,
            "diagnose": cmd_diagnose, "run": cmd_run}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError("fbm-lab: choose a command: " + ", ".join(COMMANDS))
        if args.threads is not None:
            if args.threads < 1:
                raise UsageError("--threads must be >= 1")
            set_threads(args.threads)
        if args.command == "report":
            return cmd_report(args)
        cfg = _config(args)
        out = _out_dir(args, cfg.seed)
        if args.command == "verify":
            return cmd_verify(args, cfg.seed, out)
        t0 = time.perf_counter()
        tables, streams, code = HANDLERS[args.command](args, cfg)
        wall = time.perf_counter() - t0
        written = [write_table(t, out, args.format) for t in tables]
        _write_manifest(out, args, cfg.seed, cfg.values, streams, wall, written)
        build_report(out)
        print(out)
        return code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FbmLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
