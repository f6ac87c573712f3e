"""Plots and a summary table rebuilt from the tables of a run directory.

Nothing here simulates; every figure is drawn from persisted CSV/JSON
tables, so a report can be regenerated at any time.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .tables import Table, find_tables, read_table  # noqa: E402

_SVG_META = {"Date": None}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "fbm-lab"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def _groups(table: Table, *keys: str) -> dict[tuple, list[dict]]:
    out: dict[tuple, list[dict]] = defaultdict(list)
    for row in table.rows:
        out[tuple(row[k] for k in keys)].append(row)
    return dict(out)


def _loglog(table: Table, x: str, y: str, keys: tuple[str, ...], title: str, ylabel: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, rows in sorted(_groups(table, *keys).items(), key=lambda kv: str(kv[0])):
        xs = np.array([r[x] for r in rows], dtype=float)
        ys = np.array([r[y] for r in rows], dtype=float)
        order = np.argsort(xs)
        label = ", ".join(f"{k}={v}" for k, v in zip(keys, key))
        ax.loglog(xs[order], ys[order], marker="o", ms=3, label=label)
    ax.set_xlabel(x)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_tails(table: Table, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for (h, hz), rows in sorted(_groups(table, "H", "n_or_T").items()):
        rows = sorted(rows, key=lambda r: r["r"])
        r = np.array([row["r"] for row in rows], dtype=float)
        est = np.array([row["estimate"] for row in rows], dtype=float)
        se = np.array([row["stderr"] for row in rows], dtype=float)
        line = ax.errorbar(r, est, yerr=2 * se, marker="o", ms=3, capsize=2, label=f"H={h}, N={hz:g}")
        env = np.array([row["envelope"] for row in rows], dtype=float)
        ax.plot(r, env, ls="--", color=line[0].get_color(), lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("P(statistic > r)")
    ax.set_title(f"{table.name}: estimates (markers) and envelopes (dashed)")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_holder(table: Table, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for (h,), rows in sorted(_groups(table, "H").items()):
        by_k: dict[int, float] = defaultdict(float)
        for row in rows:
            by_k[row["k"]] = max(by_k[row["k"]], row["bound_ratio"])
        ks = sorted(by_k)
        ax.semilogx(ks, [by_k[k] for k in ks], marker="o", base=2, label=f"H={h}")
    ax.set_xlabel("k")
    ax.set_ylabel("sup of Holder ratio")
    ax.set_title("uniform-in-k Holder ratio")
    ax.legend()
    return _save(fig, path)


def plot_envelope(table: Table, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for (h,), rows in sorted(_groups(table, "H").items()):
        rows = [r for r in rows if r["r"] > 0]
        rows.sort(key=lambda r: r["r"])
        r = [row["r"] for row in rows]
        line = ax.plot(r, [row["estimate"] for row in rows], marker="o", label=f"H={h} estimate")
        ax.plot(r, [row["envelope"] for row in rows], ls="--", color=line[0].get_color(), label=f"H={h} envelope")
    ax.set_yscale("log")
    ax.set_xlabel("r")
    ax.set_title("calibrated envelope vs evaluation tails")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_sup(table: Table, path: Path) -> Path:
    rows = [r for r in table.rows if r["p"] is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    p = [r["p"] for r in rows]
    ax.semilogy(p, [r["estimate"] for r in rows], marker="o", label="E sup|W|^p (MC)")
    ax.semilogy(p, [r["comparator"] for r in rows], ls="--", label="sub-Gaussian comparator")
    ax.set_xlabel("p")
    ax.set_title("Brownian supremum moments")
    ax.legend()
    return _save(fig, path)


def summary_markdown(tables: dict[str, Table]) -> str:
    lines = ["# Run summary", ""]
    acc = tables.get("acceptance")
    if acc is not None:
        lines += ["| criterion | gating checks | passed | status |", "|---|---|---|---|"]
        for (num,), rows in sorted(_groups(acc, "criterion").items()):
            gating = [r for r in rows if r["gating"]]
            ok = sum(1 for r in gating if r["passed"])
            status = "PASS" if ok == len(gating) else "FAIL"
            lines.append(f"| {num} | {len(gating)} | {ok} | {status} |")
        lines.append("")
    exps = tables.get("exponents")
    if exps is not None:
        lines += ["| H | quantity | slope | stderr | target |", "|---|---|---|---|---|"]
        for r in exps.rows:
            lines.append(f"| {r['H']} | {r['quantity']} | {r['slope']:.4f} | {r['slope_stderr']:.2g} | {r['target']} |")
        lines.append("")
    lines.append("Tables: " + ", ".join(sorted(tables)))
    return "\n".join(lines) + "\n"


def build_report(run_dir: "str | Path") -> list[Path]:
    """Regenerate ``plots/*.svg`` and ``summary.md`` from the tables in ``run_dir``."""
    run = Path(run_dir)
    if not run.is_dir():
        raise FileNotFoundError(f"run directory not found: {run}")
    tables = {name: read_table(p) for name, p in find_tables(run).items()}
    if not tables:
        raise FileNotFoundError(f"no result tables in {run}")
    plots = run / "plots"
    out: list[Path] = []
    for name, tab in tables.items():
        if not tab.rows:
            continue
        if name == "oracle_variance":
            out.append(_loglog(tab, "n_or_T", "variance", ("H", "mode"), "Gaussian-oracle variance",
                               "Var", plots / f"{name}.svg"))
        elif name == "bounds_sums":
            out.append(_loglog(tab, "n_or_T", "sum_psi_sq", ("H", "mode"), "sum of squared psi",
                               "sum psi^2", plots / f"{name}.svg"))
        elif name == "bounds":
            out.append(_loglog(tab, "k", "psi", ("H", "n_or_T"), "psi by k", "psi", plots / f"{name}.svg"))
        elif name.startswith("tails"):
            out.append(plot_tails(tab, plots / f"{name}.svg"))
        elif name == "holder":
            out.append(plot_holder(tab, plots / f"{name}.svg"))
        elif name == "envelope":
            out.append(plot_envelope(tab, plots / f"{name}.svg"))
        elif name == "sup_tails" and any(r["p"] is not None for r in tab.rows):
            out.append(plot_sup(tab, plots / f"{name}.svg"))
    summary = run / "summary.md"
    summary.write_text(summary_markdown(tables))
    out.append(summary)
    return out
