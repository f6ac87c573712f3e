"""End-to-end occupation-measure experiments.

The discrete statistic is ``(1/n) sum_{k=1}^n [f(Y_{t_k}) - E f(Y_{t_k})]`` with
``t_k = burn_in + k delta``; the continuous one is the time average of
``f(Y_t) - E f(Y_t)`` over ``[burn_in, burn_in + T]``. Expectations are
estimated on a replica block disjoint from the one used for tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .bounds import Mode, growth_exponent, occupation_envelope
from .config import ExperimentConfig
from .errors import CalibrationError, ConfigError, DomainError
from .kernel import KernelFamily, cell_weight_matrix
from .oracle import LinearFunctional, fbm_functional_variance
from .parallel import map_chunks
from .sampler import CHOLESKY_MAX_STEPS, TimeGrid, cholesky_factor, sample_batch
from .sde import DriftKind, integrate_batch
from .stats import McEstimate, bonferroni_z, loglog_slope, normal_sf

# ---------------------------------------------------------------- simulation


def choose_method(cfg: ExperimentConfig, n_steps: int) -> str:
    """Sampler for a fine grid of ``n_steps`` steps under the ``sampler`` setting."""
    s = cfg.sampler
    volterra = cfg.kernel.family is KernelFamily.VOLTERRA
    if s == "bm":
        if not (volterra and cfg.hurst.h == 0.5):
            raise ConfigError("sampler 'bm' requires H = 0.5 with the Volterra kernel")
        return "bm"
    if s == "cholesky" and not volterra:
        raise ConfigError("the Cholesky sampler produces standard fBm; use 'volterra' for Liouville")
    if s != "auto":
        return s
    if not volterra:
        return "volterra"
    if cfg.hurst.h == 0.5:
        return "bm"
    return "cholesky" if n_steps <= CHOLESKY_MAX_STEPS else "volterra"


@dataclass(frozen=True)
class OccupationSample:
    """Uncentered per-replica averages for one block of streams.

    ``discrete[:, i]`` belongs to ``n_list[i]`` and ``continuous[:, j]`` to
    ``t_list[j]``.
    """

    n_list: tuple[int, ...]
    t_list: tuple[float, ...]
    discrete: np.ndarray
    continuous: np.ndarray
    stream_range: tuple[int, int]
    method: str


def simulate_occupation(
    cfg: ExperimentConfig,
    start: int,
    stop: int,
    n_list=None,
    t_list=None,
) -> OccupationSample:
    """Simulate streams ``[start, stop)`` and reduce them to occupation averages."""
    n_list = tuple(int(n) for n in (cfg.n_list if n_list is None else n_list))
    t_list = tuple(float(t) for t in (cfg.t_list if t_list is None else t_list))
    m_delta = cfg.steps_per(cfg.delta, "delta")
    m_burn = cfg.steps_per(cfg.burn_in, "burn_in")
    m_t = [cfg.steps_per(t, "horizon") for t in t_list]
    n_max = max(n_list, default=0)
    steps = m_burn + max([n_max * m_delta] + m_t)
    if steps <= m_burn:
        raise ConfigError("nothing to simulate: n_list and t_list are empty")
    grid = TimeGrid.from_step(cfg.dt, steps)
    method = choose_method(cfg, steps)
    # build shared factors before workers start
    if method == "cholesky":
        cholesky_factor(cfg.hurst.h, grid)
    elif method == "volterra":
        cell_weight_matrix(cfg.kernel, steps, cfg.dt)
    obs_idx = m_burn + m_delta * np.arange(1, n_max + 1)
    n_idx = np.asarray(n_list, dtype=int) - 1
    f = cfg.f_spec
    dt = cfg.dt

    def run(a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        paths = sample_batch(method, cfg.kernel, grid, cfg.dim, cfg.seed, range(a, b))
        fy = f(integrate_batch(cfg.sde, dt, paths))
        disc = np.empty((b - a, len(n_list)))
        if n_list:
            cs = np.cumsum(fy[:, obs_idx], axis=1)
            disc = cs[:, n_idx] / np.asarray(n_list, dtype=float)
        cont = np.empty((b - a, len(t_list)))
        if t_list:
            seg = 0.5 * (fy[:, 1:] + fy[:, :-1]) * dt
            cum = np.concatenate([np.zeros((b - a, 1)), np.cumsum(seg, axis=1)], axis=1)
            for j, (t, m) in enumerate(zip(t_list, m_t)):
                cont[:, j] = (cum[:, m_burn + m] - cum[:, m_burn]) / t
        return disc, cont

    parts = map_chunks(run, start, stop, cfg.chunk)
    disc = np.concatenate([p[0] for p in parts]) if parts else np.empty((0, len(n_list)))
    cont = np.concatenate([p[1] for p in parts]) if parts else np.empty((0, len(t_list)))
    return OccupationSample(n_list, t_list, disc, cont, (start, stop), method)


# ------------------------------------------------------------ Gaussian oracle


def _require_gaussian(cfg: ExperimentConfig) -> None:
    if cfg.sde.drift.kind is not DriftKind.LINEAR:
        raise DomainError("the Gaussian oracle needs a linear drift")
    if cfg.f_spec.kind != "identity":
        raise DomainError("the Gaussian oracle needs f = identity")
    if cfg.kernel.family is not KernelFamily.VOLTERRA:
        raise DomainError("the Gaussian oracle uses the standard fBm covariance (Volterra kernel)")


class _ExpFamily:
    """``tau -> exp(-A tau)`` for many ``tau`` via an eigendecomposition of ``A``."""

    def __init__(self, a: np.ndarray):
        self.a = a
        self.scalar = a.shape == (1, 1)
        if not self.scalar:
            lam, vec = np.linalg.eig(a)
            if np.linalg.cond(vec) > 1e8:
                raise DomainError("drift matrix is too far from diagonalizable for the oracle")
            self.lam, self.vec, self.inv = lam, vec, np.linalg.inv(vec)

    def __call__(self, tau: np.ndarray) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        if self.scalar:
            return np.exp(-self.a[0, 0] * tau)[..., None, None]
        e = np.exp(-np.multiply.outer(tau, self.lam))
        return np.real(np.einsum("ij,...j,jk->...ik", self.vec, e, self.inv))


def _panel_width(cfg: ExperimentConfig, spans: list[float], a: np.ndarray) -> float:
    """Largest width dividing every span and at most ``min(1/2, 2/|A|)``."""
    g = 0
    for s in spans:
        g = math.gcd(g, cfg.steps_per(s, "oracle span"))
    unit = g * cfg.dt
    norm = float(np.linalg.norm(a, 2))
    cap = 0.5 if norm == 0 else min(0.5, 2.0 / norm)
    return unit / math.ceil(unit / cap - 1e-12)


def gaussian_oracle_variance(cfg: ExperimentConfig, n: int | None = None, T: float | None = None, nodes: int = 10) -> float:
    """Exact variance of the occupation average for linear drift and ``f`` = identity.

    Writing ``Z_t = Y_t - E Y_t = sigma B_t - int_0^t A exp(-A(t-u)) sigma B_u du``,
    each statistic is a linear functional of the fBm path. Its variance is
    evaluated by :func:`fbm_functional_variance` on uniform panels whose
    edges contain the burn-in point and every sampling time.
    """
    _require_gaussian(cfg)
    if (n is None) == (T is None):
        raise DomainError("give exactly one of n or T")
    a = np.asarray(cfg.sde.drift.matrix)
    d = cfg.dim
    e1 = np.zeros(d)
    e1[0] = 1.0
    sigma = np.asarray(cfg.sde.sigma)
    expm = _ExpFamily(a)
    b0 = cfg.burn_in
    h = cfg.hurst.h

    if n is not None:
        if int(n) != n or n < 1:
            raise DomainError("n must be a positive integer")
        n = int(n)
        dl = cfg.delta
        w = _panel_width(cfg, [dl, b0], a)
        q = int(round(dl / w))
        qb = int(round(b0 / w))
        tk = b0 + dl * np.arange(1, n + 1)
        # S_m = sum_{k >= m} exp(-A (t_k - t_m)), backwards
        step = expm(np.array([dl]))[0]
        s = np.empty((n, d, d))
        s[n - 1] = np.eye(d)
        for m in range(n - 2, -1, -1):
            s[m] = np.eye(d) + step @ s[m + 1]
        left = e1 @ a
        tail = s @ sigma  # S_m sigma

        def phi(panel: np.ndarray, u: np.ndarray) -> np.ndarray:
            # index of the first sampling time at or after the panel's right edge
            m = np.maximum(1, -((qb - panel - 1) // q)) - 1
            return -np.einsum("i,qij,qjk->qk", left, expm(tk[m] - u), tail[m]) / n

        fn = LinearFunctional(
            n_panels=qb + n * q,
            width=w,
            point_panels=qb + q * np.arange(1, n + 1),
            point_coef=np.tile(e1 @ sigma / n, (n, 1)),
            phi=phi,
            dim=d,
        )
        return fbm_functional_variance(h, fn, nodes)

    T = float(T)
    if not T > 0:
        raise DomainError("T must be positive")
    b1 = b0 + T
    w = _panel_width(cfg, [T, b0], a)
    qb = int(round(b0 / w))

    def psi(panel: np.ndarray, u: np.ndarray) -> np.ndarray:
        kern = expm(b1 - u)
        early = panel < qb
        if np.any(early):
            kern[early] -= expm(b0 - u[early])
        return np.einsum("i,qij,jk->qk", e1, kern, sigma) / T

    fn = LinearFunctional(qb + int(round(T / w)), w, np.zeros(0, int), np.zeros((0, d)), psi, d)
    return fbm_functional_variance(h, fn, nodes)


# ------------------------------------------------------------- tail tables


@dataclass(frozen=True)
class TailRow:
    """Tail probability ``P(statistic > r)`` at one horizon and threshold."""

    h: float
    mode: str
    horizon: float
    delta: float
    r: float
    r_units: float
    estimate: McEstimate
    envelope: float
    oracle_sd: float | None = None

    @property
    def censored(self) -> bool:
        return self.estimate.censored

    @property
    def oracle_tail(self) -> float | None:
        if self.oracle_sd is None:
            return None
        return float(normal_sf(self.r / self.oracle_sd))


@dataclass(frozen=True)
class OccupationTable:
    """Tail rows plus the centered per-replica statistics behind them.

    ``values[:, i]`` are the centered statistics at ``horizons[i]``.
    """

    mode: str
    rows: list[TailRow]
    horizons: tuple[float, ...]
    values: np.ndarray
    centers: np.ndarray
    tail_streams: tuple[int, int]
    centering_streams: tuple[int, int]
    method: str


def stream_blocks(cfg: ExperimentConfig) -> dict[str, tuple[int, int]]:
    base = cfg.stream_base
    r = cfg.replicas
    return {"tail": (base, base + r), "centering": (base + r, base + 2 * r)}


def _oracle_sd(cfg: ExperimentConfig, mode: str, horizon: float) -> float:
    if mode == "discrete":
        return math.sqrt(gaussian_oracle_variance(cfg, n=int(horizon)))
    return math.sqrt(gaussian_oracle_variance(cfg, T=horizon))


def _oracle_available(cfg: ExperimentConfig) -> bool:
    try:
        _require_gaussian(cfg)
    except DomainError:
        return False
    return True


def _tail_rows(cfg, mode, horizons, values, tail_streams, r_list=None, c_const=None) -> list[TailRow]:
    r_list = cfg.r_list if r_list is None else r_list
    c_const = cfg.get("bounds.c_const") if c_const is None else c_const
    oracle = _oracle_available(cfg)
    if cfg.r_units == "oracle_sd" and not oracle:
        raise ConfigError("r_units = 'oracle_sd' needs a linear drift with f = identity; use 'absolute'")
    m = Mode.DISCRETE if mode == "discrete" else Mode.CONTINUOUS
    rows = []
    for i, hz in enumerate(horizons):
        sd = _oracle_sd(cfg, mode, hz) if oracle else None
        for r in r_list:
            r_abs = r * sd if cfg.r_units == "oracle_sd" else r
            est = McEstimate.tail(values[:, i] > r_abs, cfg.seed, tail_streams)
            env = occupation_envelope(cfg.hurst, hz, cfg.f_spec.lipschitz, c_const, r_abs, m)
            rows.append(TailRow(cfg.hurst.h, mode, float(hz), cfg.delta, float(r_abs), float(r), est, env, sd))
    return rows


def run_occupation(cfg: ExperimentConfig) -> dict[str, OccupationTable]:
    """Both occupation statistics from one pair of replica blocks.

    The centering block estimates ``E f(Y_t)`` along the path; the tail
    block is centered by it, so no replica is used twice.
    """
    blocks = stream_blocks(cfg)
    tail = simulate_occupation(cfg, *blocks["tail"])
    cent = simulate_occupation(cfg, *blocks["centering"])
    out = {}
    for mode, raw, craw, hz in (
        ("discrete", tail.discrete, cent.discrete, tail.n_list),
        ("continuous", tail.continuous, cent.continuous, tail.t_list),
    ):
        if not hz:
            continue
        centers = craw.mean(axis=0)
        values = raw - centers
        rows = _tail_rows(cfg, mode, hz, values, blocks["tail"])
        out[mode] = OccupationTable(
            mode, rows, tuple(float(x) for x in hz), values, centers, blocks["tail"], blocks["centering"], tail.method
        )
    return out


def run_occupation_discrete(cfg: ExperimentConfig) -> OccupationTable:
    """Tail table of the discrete occupation average over ``n_list`` and ``r_list``."""
    if not cfg.n_list:
        raise ConfigError("n_list is empty")
    return run_occupation(cfg.replace(t_list=[]))["discrete"]


def run_occupation_continuous(cfg: ExperimentConfig) -> OccupationTable:
    """Tail table of the continuous occupation average over ``t_list`` and ``r_list``."""
    if not cfg.t_list:
        raise ConfigError("t_list is empty")
    return run_occupation(cfg.replace(n_list=[]))["continuous"]


# ------------------------------------------------------------ exponent fits


@dataclass(frozen=True)
class ExponentRow:
    h: float
    quantity: str
    slope: float
    slope_stderr: float
    target: float
    reliable: bool = True
    note: str = ""


@dataclass(frozen=True)
class ExponentReport:
    rows: list[ExponentRow]
    oracle_variances: dict[str, list[tuple[float, float]]] = field(default_factory=dict)


def _check_octaves(values, what: str) -> None:
    v = sorted(values)
    if len(v) < 2 or v[-1] / v[0] < 8:
        raise ConfigError(f"{what} must span at least 3 octaves")


def mgf_quadratic_coefficient(values: np.ndarray, n: float, lam: float) -> tuple[float, float]:
    """Estimate ``log E exp(l n S) / l^2`` with ``l = lam / sd(n S)``.

    Returns ``(coefficient, effective_sample_size)`` for the exponential
    weights. The standardization keeps the tilt at ``lam`` standard
    deviations so the estimate stays usable as ``n`` grows.
    """
    x = n * np.asarray(values, dtype=float)
    sd = float(np.std(x, ddof=1))
    lt = lam / sd
    z = lt * x
    log_m = float(special.logsumexp(z) - math.log(x.size))
    wts = np.exp(z - z.max())
    ess = float(wts.sum() ** 2 / np.sum(wts**2))
    return log_m / lt**2, ess


def fit_scaling_exponent(cfg: ExperimentConfig, occupation: dict[str, OccupationTable] | None = None) -> ExponentReport:
    """Oracle-variance and MGF growth exponents against their theoretical values.

    The oracle route (linear drift only) regresses ``log Var`` on ``log n``
    (target ``(2H v 1) - 2``) and likewise on ``log T`` when ``t_list`` spans
    three octaves. The MGF route fits ``log`` of the quadratic MGF coefficient of
    ``n S_n`` against ``log n`` (target ``2H v 1``); it is flagged unreliable when
    any effective sample size falls below ``mgf.min_ess``.
    """
    h = cfg.hurst.h
    e = growth_exponent(h)
    rows: list[ExponentRow] = []
    oracle_vals: dict[str, list[tuple[float, float]]] = {}
    _check_octaves(cfg.n_list, "n_list")
    if _oracle_available(cfg):
        ns = sorted(cfg.n_list)
        var = [gaussian_oracle_variance(cfg, n=n) for n in ns]
        fit = loglog_slope(ns, var)
        rows.append(ExponentRow(h, "oracle_variance_discrete", fit.slope, fit.stderr, e - 2))
        oracle_vals["discrete"] = list(zip(map(float, ns), var))
        ts = sorted(cfg.t_list)
        if len(ts) >= 2 and ts[-1] / ts[0] >= 8:
            var_t = [gaussian_oracle_variance(cfg, T=t) for t in ts]
            fit = loglog_slope(ts, var_t)
            rows.append(ExponentRow(h, "oracle_variance_continuous", fit.slope, fit.stderr, e - 2))
            oracle_vals["continuous"] = list(zip(ts, var_t))
    lams = [x for x in cfg.lambda_list if x > 0]
    if lams:
        if occupation is None or "discrete" not in occupation:
            occupation = {"discrete": run_occupation_discrete(cfg)}
        tab = occupation["discrete"]
        for lam in lams:
            coefs, ess = [], []
            for i, n in enumerate(tab.horizons):
                c, s = mgf_quadratic_coefficient(tab.values[:, i], n, lam)
                coefs.append(c)
                ess.append(s)
            ok = min(ess) >= cfg.get("mgf.min_ess")
            if min(coefs) <= 0:
                rows.append(ExponentRow(h, f"mgf_coefficient_lambda_{lam:g}", float("nan"), float("nan"), e, False,
                                        "non-positive MGF coefficient"))
                continue
            fit = loglog_slope(tab.horizons, coefs)
            note = "" if ok else f"effective sample size {min(ess):.0f} below {cfg.get('mgf.min_ess'):g}"
            rows.append(ExponentRow(h, f"mgf_coefficient_lambda_{lam:g}", fit.slope, fit.stderr, e, ok, note))
    return ExponentReport(rows, oracle_vals)


# ------------------------------------------------------- envelope domination


@dataclass(frozen=True)
class EnvelopeRow:
    n: int
    r: float
    r_units: float
    estimate: McEstimate
    envelope: float
    lower_confidence: float
    passed: bool


@dataclass(frozen=True)
class EnvelopeReport:
    """Calibrated constant and the evaluation-block comparison."""

    h: float
    c_const: float
    calibration_n: int
    calibration: list[TailRow]
    evaluation: list[EnvelopeRow]
    z: float
    streams: dict[str, tuple[int, int]]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.evaluation)


def _disjoint(blocks: dict[str, tuple[int, int]]) -> None:
    items = sorted(blocks.items(), key=lambda kv: kv[1])
    for (na, (a0, a1)), (nb, (b0, b1)) in zip(items[:-1], items[1:]):
        if a1 > b0:
            raise DomainError(f"replica blocks {na} {a0, a1} and {nb} {b0, b1} overlap")


def calibrate_constant(rows: list[TailRow], h: float, lip: float) -> float:
    """Smallest ``C`` with ``occupation_envelope >= p`` for every row.

    Censored rows enter with their upper confidence bound.
    """
    e = growth_exponent(h)
    best = 0.0
    for row in rows:
        if row.r <= 0:
            continue
        p = row.estimate.upper_bound if row.censored else row.estimate.value
        if p >= 1.0:
            raise CalibrationError(f"empirical tail is 1 at r={row.r}, horizon={row.horizon}")
        c = row.r**2 * row.horizon ** (2.0 - e) / (4.0 * lip**2 * (-math.log(p)))
        best = max(best, c)
    if not (best > 0 and math.isfinite(best)):
        raise CalibrationError("no positive threshold to calibrate against")
    return best


def check_envelope_domination(cfg: ExperimentConfig, calibration_block: tuple[int, int]) -> EnvelopeReport:
    """Calibrate the envelope constant at ``envelope.calibration_n`` and test it on fresh replicas.

    The calibration block and a centering block of the same size right after
    it produce the calibration tails; the evaluation uses the tail and
    centering blocks of :func:`stream_blocks` at every ``envelope.evaluation_n``.
    A row fails only when the lower one-sided Bonferroni confidence bound of
    the tail (joint level ``envelope.confidence``) exceeds the envelope.
    """
    c0, c1 = calibration_block
    if c1 <= c0:
        raise DomainError("empty calibration block")
    blocks = dict(stream_blocks(cfg))
    blocks["calibration"] = (c0, c1)
    blocks["calibration_centering"] = (c1, c1 + (c1 - c0))
    _disjoint(blocks)
    n_cal = cfg.get("envelope.calibration_n")
    n_eval = list(cfg.get("envelope.evaluation_n"))
    lip = cfg.f_spec.lipschitz

    cal = simulate_occupation(cfg, *blocks["calibration"], n_list=[n_cal], t_list=[])
    cal_c = simulate_occupation(cfg, *blocks["calibration_centering"], n_list=[n_cal], t_list=[])
    cal_vals = cal.discrete - cal_c.discrete.mean(axis=0)
    cal_rows = _tail_rows(cfg, "discrete", (n_cal,), cal_vals, blocks["calibration"])
    c_const = calibrate_constant(cal_rows, cfg.hurst.h, lip)
    cal_rows = _tail_rows(cfg, "discrete", (n_cal,), cal_vals, blocks["calibration"], c_const=c_const)

    ev = simulate_occupation(cfg, *blocks["tail"], n_list=n_eval, t_list=[])
    ev_c = simulate_occupation(cfg, *blocks["centering"], n_list=n_eval, t_list=[])
    ev_vals = ev.discrete - ev_c.discrete.mean(axis=0)
    ev_rows = _tail_rows(cfg, "discrete", tuple(n_eval), ev_vals, blocks["tail"], c_const=c_const)
    z = bonferroni_z(cfg.get("envelope.confidence"), len(ev_rows))
    out = []
    for row in ev_rows:
        est = row.estimate
        lower = est.value - z * est.stderr
        out.append(EnvelopeRow(int(row.horizon), row.r, row.r_units, est, row.envelope, lower,
                               est.censored or lower <= row.envelope))
    return EnvelopeReport(cfg.hurst.h, c_const, n_cal, cal_rows, out, z, blocks)
