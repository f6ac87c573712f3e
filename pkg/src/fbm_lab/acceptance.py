"""Acceptance suite: one runner per criterion, shared by ``fbm-lab verify`` and the tests.

Every runner takes the master seed and returns a :class:`CriterionResult`
holding its checks, the tables it produced and the replica ranges it used.
Stream ranges of different criteria never overlap, so any criterion can be
rerun on its own and reproduce the same numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special
from scipy import stats as sps

from .bounds import check_lemma_integral, growth_exponent, moment_to_expmoment_bound, sum_psi_squared
from .config import build_config
from .diagnostics import (
    check_g_holder_bound,
    g_increment_second_moment,
    GProcessSpec,
    sup_abs_bm_tail_exact,
    sup_bm_moment,
    sup_bm_samples,
    sup_bm_tail,
    sup_constant,
)
from .harness import check_envelope_domination, gaussian_oracle_variance, run_occupation, stream_blocks
from .kernel import KernelSpec, kernel_variance
from .sampler import TimeGrid, fbm_covariance, sample_batch, RngStream
from .stats import loglog_slope
from .tables import Table

TAIL_COLUMNS = ("H", "n_or_T", "delta", "r", "estimate", "stderr", "envelope", "censored")
EXPONENT_COLUMNS = ("H", "quantity", "slope", "slope_stderr", "target")
HOLDER_COLUMNS = ("v", "v_prime", "k", "H", "second_moment", "bound_ratio")
SUP_COLUMNS = ("x", "p", "estimate", "stderr", "comparator")

# first stream id of each criterion; blocks are 10^6 wide
_STREAM_BASE = {2: 2_000_000, 4: 4_000_000, 7: 7_000_000, 8: 8_000_000}
TIME_BUDGET = 600.0


@dataclass(frozen=True)
class Check:
    """One comparison inside a criterion; only gating checks decide pass/fail."""

    label: str
    value: float
    target: str
    passed: bool
    gating: bool = True


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    tables: list[Table] = field(default_factory=list)
    streams: dict[str, tuple[int, int]] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def add(self, label: str, value: float, target: str, passed: bool, gating: bool = True) -> None:
        self.checks.append(Check(label, float(value), target, bool(passed), gating))

    def line(self) -> str:
        worst = [c.label for c in self.checks if c.gating and not c.passed]
        status = "PASS" if self.passed else "FAIL"
        tail = f" (failing: {'; '.join(worst)})" if worst else ""
        return f"criterion {self.number:2d} {status}  {self.title}{tail}"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


# ------------------------------------------------------------------ criteria


def criterion_1(seed: int) -> CriterionResult:
    res = CriterionResult(1, "kernel normalization: kernel_variance(t) = t^2H to 1e-5")
    for h in (0.3, 0.7):
        spec = KernelSpec.volterra(h)
        for t in (0.5, 1.0, 2.0):
            err = _rel(kernel_variance(spec, t), t ** (2 * h))
            res.add(f"H={h} t={t} relative error", err, "< 1e-05", err < 1e-5)
    return res


def criterion_2(seed: int, paths: int = 10_000, n_steps: int = 64) -> CriterionResult:
    res = CriterionResult(2, "Volterra sampler vs closed-form covariance and Cholesky marginals")
    grid = TimeGrid(1.0, n_steps)
    times = grid.times[1:]
    ks_times = (0.25, 0.5, 1.0)
    alpha = 0.01 / len(ks_times)
    tab = Table("sampler_check", ("H", "check", "t", "statistic", "threshold", "passed"))
    base = _STREAM_BASE[2]
    for i, h in enumerate((0.3, 0.5, 0.7)):
        spec = KernelSpec.volterra(h)
        vol_ids = (base + 2 * i * paths, base + (2 * i + 1) * paths)
        chol_ids = (vol_ids[1], vol_ids[1] + paths)
        res.streams[f"H={h} volterra"] = vol_ids
        res.streams[f"H={h} cholesky"] = chol_ids
        xv = sample_batch("volterra", spec, grid, 1, seed, range(*vol_ids))[:, 1:, 0]
        xc = sample_batch("cholesky", spec, grid, 1, seed, range(*chol_ids))[:, 1:, 0]
        # mean zero is known exactly, so use raw second moments
        prod = xv[:, :, None] * xv[:, None, :]
        emp = prod.mean(axis=0)
        se = prod.std(axis=0, ddof=1) / math.sqrt(paths)
        tol = np.maximum(4.0 * se, 2.0 * grid.dt ** (2 * h))
        ratio = float(np.max(np.abs(emp - fbm_covariance(h, times)) / tol))
        res.add(f"H={h} max |cov error| / tolerance", ratio, "<= 1", ratio <= 1.0)
        tab.add(H=h, check="covariance_ratio", t=None, statistic=ratio, threshold=1.0, passed=ratio <= 1.0)
        for t in ks_times:
            j = int(round(t / grid.dt)) - 1
            p = float(sps.ks_2samp(xv[:, j], xc[:, j]).pvalue)
            res.add(f"H={h} KS p-value at t={t}", p, f"> {alpha:.4g} (1% over {len(ks_times)} times)", p > alpha)
            tab.add(H=h, check="ks_pvalue", t=t, statistic=p, threshold=alpha, passed=p > alpha)
    res.tables.append(tab)
    return res


def dyadic_exactness_grid() -> np.ndarray:
    """Ten points ``{0} + {2^-j : j = 0..8}`` of [0, 1]."""
    return np.concatenate([[0.0], 2.0 ** -np.arange(8, -1, -1)])


def criterion_3(seed: int) -> CriterionResult:
    res = CriterionResult(3, "G^(k) second moments: k=1 exactness and uniform-in-k Holder ratio")
    tab = Table("holder", HOLDER_COLUMNS)
    grid = dyadic_exactness_grid()
    for h in (0.3, 0.7):
        kern = KernelSpec.volterra(h)
        spec = GProcessSpec(kern, 1, grid)
        worst = 0.0
        for i, v in enumerate(grid):
            for vp in grid[:i]:
                m2 = g_increment_second_moment(spec, float(v), float(vp))
                worst = max(worst, abs(m2 - (v - vp) ** (2 * h)))
        res.add(f"H={h} k=1 max |E(G_v - G_v')^2 - |v - v'|^2H|", worst, "< 1e-06", worst < 1e-6)
        rep = check_g_holder_bound(kern)
        sups = ", ".join(f"k={k}: {s:.4g}" for k, s in rep.sup_by_k.items())
        res.add(f"H={h} Holder sups finite ({sups})", max(rep.sup_by_k.values()), "finite", rep.bounded)
        res.add(f"H={h} variation of sup for k >= 4", rep.variation_tail, "< 0.2", rep.variation_tail < 0.2)
        for row in rep.rows:
            tab.add(v=row.v, v_prime=row.v_prime, k=row.k, H=h, second_moment=row.second_moment,
                    bound_ratio=row.bound_ratio)
    res.tables.append(tab)
    return res


def criterion_4(seed: int, paths: int = 100_000, n_steps: int = 1024) -> CriterionResult:
    res = CriterionResult(4, "Brownian supremum tail at x=1 vs reflection value and sub-Gaussian comparator")
    ids = (_STREAM_BASE[4], _STREAM_BASE[4] + paths)
    res.streams["sup paths"] = ids
    rng = RngStream(seed, ids[0])
    samples = sup_bm_samples(1, paths, n_steps, rng)
    r = sup_bm_tail(1.0, 1, paths, n_steps, rng, samples=samples)
    ref = 0.31731
    tol = max(4.0 * r.one_sided.stderr, 0.01)
    gap = abs(r.one_sided.value - ref)
    res.add(f"P(sup W > 1) = {r.one_sided.value:.5f} vs 0.31731, |diff|", gap, f"<= {tol:.4g}", gap <= tol)
    comp = sup_constant(1) * math.exp(-0.25)
    res.add("P(sup |W| > 1) <= C_d exp(-1/4)", r.norm.value, f"<= {comp:.5f}", r.norm.value <= comp)
    res.add("P(sup W > 1) <= C_d exp(-1/4)", r.one_sided.value, f"<= {comp:.5f}", r.one_sided.value <= comp)
    exact = sup_abs_bm_tail_exact(1.0)
    res.add("P(sup |W| > 1) vs exact two-sided value (grid bias expected)", r.norm.value, f"~ {exact:.5f}",
            abs(r.norm.value - exact) <= max(4 * r.norm.stderr, 0.02), gating=False)
    tab = Table("sup_tails", SUP_COLUMNS)
    tab.add(x=1.0, p=None, estimate=r.norm.value, stderr=r.norm.stderr, comparator=comp)
    for p in (2, 4, 6, 8, 10, 12):
        m = sup_bm_moment(p, 1, paths, n_steps, rng, samples=samples)
        tab.add(x=None, p=p, estimate=m.estimate.value, stderr=m.estimate.stderr, comparator=m.comparator)
        res.add(f"E sup|W|^{p} <= comparator", m.estimate.value, f"<= {m.comparator:.5g}",
                m.estimate.value <= m.comparator, gating=False)
    res.tables.append(tab)
    return res


def criterion_5(seed: int) -> CriterionResult:
    res = CriterionResult(5, "exponential-convolution integral: finite sup and plateau over u = 2..1024")
    u = np.arange(2, 1025)
    for alpha, beta in ((1.0, 1.2), (0.5, 2.4)):
        rep = check_lemma_integral(alpha, beta, u)
        res.add(f"alpha={alpha} beta={beta} sup ratio", rep.sup_ratio, "finite", rep.passed)
        res.add(f"alpha={alpha} beta={beta} last-octave change", rep.last_octave_change, "< 0.05", rep.plateaued)
    return res


def criterion_6(seed: int) -> CriterionResult:
    res = CriterionResult(6, "growth exponent of sum_k psi^2 over n, T in 2^4..2^12")
    exps = Table("exponents", EXPONENT_COLUMNS)
    sums = Table("bounds_sums", ("H", "mode", "n_or_T", "sum_psi_sq", "growth_exponent"))
    ns = [2**k for k in range(4, 13)]
    for h, target in ((0.3, 1.0), (0.7, 1.4)):
        disc = [sum_psi_squared(h, n=n).sum_psi_sq for n in ns]
        cont = [sum_psi_squared(h, t_horizon=float(n)).sum_psi_sq for n in ns]
        for mode, vals, tol in (("discrete", disc, 0.05), ("continuous", cont, 0.07)):
            fit = loglog_slope(ns, vals)
            ok = abs(fit.slope - target) <= tol
            res.add(f"H={h} {mode} slope", fit.slope, f"{target} +/- {tol}", ok)
            exps.add(H=h, quantity=f"sum_psi_sq_{mode}", slope=fit.slope, slope_stderr=fit.stderr, target=target)
            for n, s in zip(ns, vals):
                sums.add(H=h, mode=mode, n_or_T=n, sum_psi_sq=s, growth_exponent=growth_exponent(h))
    res.tables += [exps, sums]
    return res


def criterion_7(seed: int, replicas: int = 10_000, mc_horizons=(16, 64)) -> CriterionResult:
    res = CriterionResult(7, "occupation-average variance exponent and MC tails vs Gaussian oracle")
    exps = Table("exponents", EXPONENT_COLUMNS)
    tails = {m: Table(f"tails_{m}", TAIL_COLUMNS) for m in ("discrete", "continuous")}
    oracle = Table("oracle_variance", ("H", "mode", "n_or_T", "variance"))
    ns = [2**k for k in range(4, 11)]
    for i, h in enumerate((0.3, 0.5, 0.7)):
        base = _STREAM_BASE[7] + i * 2 * replicas
        cfg = build_config({
            "hurst": h, "seed": seed, "stream_base": base, "replicas": replicas,
            "n_list": list(mc_horizons), "t_list": [float(t) for t in mc_horizons],
            "r_list": [0.5, 1.0, 2.0], "r_units": "oracle_sd",
        })
        var = [gaussian_oracle_variance(cfg, n=n) for n in ns]
        fit = loglog_slope(ns, var)
        target = growth_exponent(h) - 2.0
        res.add(f"H={h} oracle variance slope", fit.slope, f"{target:g} +/- 0.1", abs(fit.slope - target) <= 0.1)
        exps.add(H=h, quantity="oracle_variance_discrete", slope=fit.slope, slope_stderr=fit.stderr, target=target)
        for n, v in zip(ns, var):
            oracle.add(H=h, mode="discrete", n_or_T=n, variance=v)
        for k, blk in stream_blocks(cfg).items():
            res.streams[f"H={h} {k}"] = blk
        for mode, table in run_occupation(cfg).items():
            for row in table.rows:
                est = row.estimate
                truth = row.oracle_tail
                z = abs(est.value - truth) / est.stderr if est.stderr > 0 else float("inf")
                res.add(f"H={h} {mode} N={row.horizon:g} r={row.r_units:g} sd: {est.value:.4f} vs {truth:.4f}, z",
                        z, "<= 4", z <= 4.0)
                tails[mode].add(H=h, n_or_T=row.horizon, delta=row.delta, r=row.r, estimate=est.value,
                                stderr=est.stderr, envelope=row.envelope, censored=row.censored)
    res.tables += [exps, oracle, *tails.values()]
    return res


def criterion_8(seed: int, replicas: int = 2000, calibration: int = 4000) -> CriterionResult:
    res = CriterionResult(8, "envelope calibrated at n=2^6 dominates tails at n=2^10 (99% joint)")
    tab = Table("envelope", ("H", "n", "r", "estimate", "stderr", "envelope", "lower_confidence", "c_const",
                             "passed"))
    for i, h in enumerate((0.3, 0.7)):
        base = _STREAM_BASE[8] + i * (2 * replicas + 2 * calibration)
        cfg = build_config({
            "hurst": h, "seed": seed, "stream_base": base, "replicas": replicas, "dt": 0.25,
            "r_list": [0.0, 0.5, 1.0, 2.0], "r_units": "oracle_sd",
            "envelope": {"calibration_n": 64, "evaluation_n": [1024], "calibration_replicas": calibration},
        })
        cal = (base + 2 * replicas, base + 2 * replicas + calibration)
        rep = check_envelope_domination(cfg, cal)
        for k, blk in rep.streams.items():
            res.streams[f"H={h} {k}"] = blk
        res.add(f"H={h} calibrated constant C", rep.c_const, "finite, > 0",
                math.isfinite(rep.c_const) and rep.c_const > 0)
        for row in rep.evaluation:
            res.add(f"H={h} n={row.n} r={row.r_units:g} sd: lower bound {row.lower_confidence:.4f}",
                    row.lower_confidence, f"<= envelope {row.envelope:.4f}", row.passed)
            tab.add(H=h, n=row.n, r=row.r, estimate=row.estimate.value, stderr=row.estimate.stderr,
                    envelope=row.envelope, lower_confidence=row.lower_confidence, c_const=rep.c_const,
                    passed=row.passed)
    res.tables.append(tab)
    return res


def gaussian_moment_ratio(p: float) -> float:
    """``E|X|^p / (zeta^(p/2) p Gamma(p/2))`` for ``X ~ N(0, zeta)``; independent of ``zeta``."""
    return 2 ** (p / 2) * special.gamma((p + 1) / 2) / (math.sqrt(math.pi) * p * special.gamma(p / 2))


def criterion_9(seed: int) -> CriterionResult:
    res = CriterionResult(9, "Gaussian moments vs the sub-Gaussian moment hypothesis and exp-moment bound")
    ps = np.arange(2, 13)
    c_min = max(gaussian_moment_ratio(p) for p in ps)
    lams = np.linspace(0.0, 4.0, 100)
    for zeta in (0.5, 1.0, 2.0):
        exact = zeta ** (ps / 2) * 2 ** (ps / 2) * special.gamma((ps + 1) / 2) / math.sqrt(math.pi)
        needed = float(np.max(exact / (zeta ** (ps / 2) * ps * special.gamma(ps / 2))))
        res.add(f"zeta={zeta} smallest C over p=2..12", needed, "<= 2", needed <= 2.0)
        # same moments against the proxy 2 zeta
        proxy = float(np.max(exact / ((2 * zeta) ** (ps / 2) * ps * special.gamma(ps / 2))))
        res.add(f"zeta={zeta} smallest C with variance proxy 2 zeta", proxy, "<= 2", proxy <= 2.0, gating=False)
        gap = max(math.exp(zeta * l * l / 2) / moment_to_expmoment_bound(c_min, zeta, l) for l in lams)
        res.add(f"zeta={zeta} max exp(zeta l^2/2) / bound on l in [0,4]", gap, "<= 1", gap <= 1.0)
    return res


RUNNERS: dict[int, Callable[[int], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_criterion(number: int, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = RUNNERS[number](seed)
    res.seconds = time.perf_counter() - t0
    return res


def merge_tables(results: list[CriterionResult]) -> list[Table]:
    """Combine tables of the same name across criteria, keeping first-seen order."""
    merged: dict[str, Table] = {}
    for r in results:
        for t in r.tables:
            if t.name in merged:
                merged[t.name].extend(t)
            else:
                merged[t.name] = Table(t.name, t.columns, list(t.rows))
    return list(merged.values())


def checks_table(results: list[CriterionResult]) -> Table:
    tab = Table("acceptance", ("criterion", "check", "value", "target", "gating", "passed"))
    for r in results:
        for c in r.checks:
            tab.add(criterion=r.number, check=c.label, value=c.value, target=c.target, gating=c.gating,
                    passed=c.passed)
    return tab
