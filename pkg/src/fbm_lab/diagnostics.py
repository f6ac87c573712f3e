"""Gaussian building blocks behind the concentration proofs.

* ``G^(k)_v = int_0^{min(1, v)} K(v + k - 1, s + k - 1) dW_s`` on ``v in [0, 2]``
  and the second moments of its increments.
* ``Gtilde_v = int_0^1 s^(1/2-H) (1 - v s)^(H-3/2) dW_s`` for ``v <= 1/2``.
* Sup-norm tails and moments of Brownian motion on [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._quadrature import gauss_jacobi, tanh_sinh_adaptive
from .errors import DomainError
from .kernel import HurstParameter, KernelFamily, KernelSpec, kernel_values
from .parallel import map_chunks
from .sampler import RngStream, brownian_increments
from .stats import McEstimate, normal_sf

DEFAULT_K_GRID = (1, 2, 4, 8, 16)


def alpha_h(h: float) -> float:
    """Holder exponent of the uniform increment bound: H if H < 1/2, else H/2."""
    h = HurstParameter.of(h).h
    return h if h < 0.5 else 0.5 * h


def alpha_prime_h(h: float) -> float:
    """Reporting convention for the smaller Holder exponent: 0.9 * alpha_h."""
    return 0.9 * alpha_h(h)


def dyadic_grid(lo: float = 0.0, hi: float = 2.0, level: int = 3) -> np.ndarray:
    """Points ``lo + i 2^-level`` up to ``hi``."""
    step = 2.0**-level
    return lo + step * np.arange(int(round((hi - lo) / step)) + 1)


@dataclass(frozen=True)
class GProcessSpec:
    """Block index ``k`` and evaluation grid for the ``G^(k)`` process."""

    kernel: KernelSpec
    k: int
    v_grid: np.ndarray = field(default_factory=dyadic_grid)

    def __post_init__(self) -> None:
        if self.kernel.family is not KernelFamily.VOLTERRA:
            raise DomainError("G processes are defined for the Volterra kernel")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"block index k must be a positive integer, got {self.k!r}")
        g = np.asarray(self.v_grid, dtype=float)
        if g.ndim != 1 or np.any(g < 0) or np.any(g > 2) or np.any(np.diff(g) <= 0):
            raise DomainError("v_grid must be increasing inside [0, 2]")
        g.setflags(write=False)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "v_grid", g)


def g_increment_second_moment(
    spec: GProcessSpec, v: float, v_prime: float, tol: float = 1e-11, return_error: bool = False
):
    """``E|G_v - G_v'|^2`` per coordinate for ``0 <= v' < v <= 2``.

    The moment splits into the squared kernel difference over the common
    support ``[0, min(1, v')]`` and the squared kernel over
    ``[min(1, v'), min(1, v)]``. Both pieces use tanh-sinh quadrature with the
    distance to the diagonal tracked exactly.
    """
    if not 0 <= v_prime < v <= 2:
        raise DomainError(f"need 0 <= v' < v <= 2, got v={v}, v'={v_prime}")
    ker = spec.kernel
    shift = spec.k - 1
    a = min(1.0, v_prime)
    b = min(1.0, v)

    def kern(vv, s, upper, d_upper):
        # K(vv + k - 1, s + k - 1) with the gap (vv - upper) + (upper - s)
        return kernel_values(ker, vv + shift, s + shift, gap=(vv - upper) + d_upper)

    total = 0.0
    err = 0.0
    if a > 0:
        def f1(s, d0, d1):
            return (kern(v, s, a, d1) - kern(v_prime, s, a, d1)) ** 2

        i1, e1 = tanh_sinh_adaptive(f1, 0.0, a, tol=tol, max_level=10)
        total += i1
        err += e1
    if b > a:
        def f2(s, d0, d1):
            return kern(v, s, b, d1) ** 2

        i2, e2 = tanh_sinh_adaptive(f2, a, b, tol=tol, max_level=10)
        total += i2
        err += e2
    return (total, err) if return_error else total


@dataclass(frozen=True)
class HolderRow:
    k: int
    v: float
    v_prime: float
    second_moment: float
    bound_ratio: float


@dataclass(frozen=True)
class HolderReport:
    """Ratios ``E|G_v - G_v'|^2 / |v - v'|^(2 alpha_H)`` over grids of pairs and ``k``."""

    h: float
    alpha: float
    alpha_prime: float
    rows: list[HolderRow]
    sup_by_k: dict[int, float]
    variation_tail: float

    @property
    def bounded(self) -> bool:
        return all(np.isfinite(list(self.sup_by_k.values())))

    @property
    def passed(self) -> bool:
        return self.bounded and self.variation_tail < 0.2


def check_g_holder_bound(
    kernel: KernelSpec,
    k_grid=DEFAULT_K_GRID,
    v_grid: np.ndarray | None = None,
    stable_from: int = 4,
) -> HolderReport:
    """Sup of the Holder ratio for each ``k`` and its relative spread for ``k >= stable_from``.

    ``variation_tail`` is ``max/min - 1`` of the per-``k`` sups over blocks
    ``k >= stable_from``.
    """
    h = kernel.h
    al = alpha_h(h)
    grid = dyadic_grid() if v_grid is None else np.asarray(v_grid, dtype=float)
    rows: list[HolderRow] = []
    sups: dict[int, float] = {}
    for k in k_grid:
        spec = GProcessSpec(kernel, k, grid)
        best = 0.0
        for i, v in enumerate(grid):
            for vp in grid[:i]:
                m2 = g_increment_second_moment(spec, float(v), float(vp))
                ratio = m2 / (v - vp) ** (2 * al)
                rows.append(HolderRow(k, float(v), float(vp), m2, ratio))
                best = max(best, ratio)
        sups[int(k)] = best
    tail = [s for kk, s in sups.items() if kk >= stable_from]
    variation = max(tail) / min(tail) - 1.0 if tail and min(tail) > 0 else float("inf")
    return HolderReport(h, al, alpha_prime_h(h), rows, sups, float(variation))


def gtilde_increment_second_moment(h: float, v: float, v_prime: float, nodes: int = 32) -> float:
    """``int_0^1 s^(1-2H) [(1 - v s)^(H-3/2) - (1 - v' s)^(H-3/2)]^2 ds`` for ``0 <= v' <= v <= 1/2``.

    Gauss-Jacobi with weight ``s^(1-2H)``; the remaining factor is analytic on
    a neighbourhood of [0, 1] because ``v s <= 1/2``.
    """
    hv = HurstParameter.of(h).h
    if not 0 <= v_prime <= v <= 0.5:
        raise DomainError(f"need 0 <= v' <= v <= 1/2, got v={v}, v'={v_prime}")
    if v == v_prime:
        return 0.0
    x, w = gauss_jacobi(nodes, 0.0, 1.0 - 2.0 * hv)
    s = 0.5 * (1.0 + x)
    e = hv - 1.5
    # (1 - v s)^e - (1 - v' s)^e without cancellation: expm1 of the log difference
    la = e * np.log1p(-v * s)
    lb = e * np.log1p(-v_prime * s)
    diff = np.exp(lb) * np.expm1(la - lb)
    return float(0.5 ** (2.0 - 2.0 * hv) * np.dot(w, diff**2))


def gtilde_small_v_limit(h: float) -> float:
    """Limit of the ``Gtilde`` second moment divided by ``v^2`` as ``v -> 0`` with ``v' = 0``."""
    hv = HurstParameter.of(h).h
    return (1.5 - hv) ** 2 / (4.0 - 2.0 * hv)


def _sup_chunk(seed: int, dim: int, n_steps: int):
    def run(a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        incr = brownian_increments(seed, range(a, b), n_steps, dim, 1.0 / n_steps)
        w = np.cumsum(incr, axis=1)
        norm_sup = np.sqrt(np.max(np.sum(w * w, axis=2), axis=1))
        first_sup = np.max(w[:, :, 0], axis=1)
        # the path starts at 0
        return np.maximum(norm_sup, 0.0), np.maximum(first_sup, 0.0)

    return run


def sup_bm_samples(dim: int, n_paths: int, n_steps: int, rng: RngStream, chunk: int = 2048):
    """Per-path ``sup |W_t|`` and ``sup W^1_t`` on the grid ``i/n_steps``.

    Path ``r`` uses stream ``rng.stream_id + r``.
    """
    if dim < 1 or n_paths < 1 or n_steps < 1:
        raise DomainError("dim, n_paths and n_steps must be positive")
    start = rng.stream_id
    parts = map_chunks(_sup_chunk(rng.seed, dim, n_steps), start, start + n_paths, chunk)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def sup_constant(dim: int) -> float:
    """``C_d = 2d``: since ``1 - Phi(x) <= exp(-x^2/2)/2``, ``4d(1 - Phi(x)) <= 2d exp(-x^2/4)``."""
    return 2.0 * dim


def sup_abs_bm_tail_exact(x: float, terms: int = 50) -> float:
    """``P(sup_[0,1] |W| > x)`` for one-dimensional Brownian motion (exit-time series)."""
    if not x > 0:
        return 1.0
    k = np.arange(terms)
    m = 2 * k + 1
    stay = 4.0 / math.pi * np.sum((-1.0) ** k / m * np.exp(-(m**2) * math.pi**2 / (8.0 * x * x)))
    return float(min(1.0, max(0.0, 1.0 - stay)))


@dataclass(frozen=True)
class SupTailResult:
    """Tail estimates of the discretized Brownian supremum at level ``x``.

    ``norm`` estimates ``P(sup |W| > x)`` and ``one_sided`` estimates
    ``P(sup W^1 > x)``, whose continuum value is ``2(1 - Phi(x))``.
    """

    x: float
    dim: int
    norm: McEstimate
    one_sided: McEstimate
    reflection: float
    union_comparator: float
    gaussian_comparator: float


def sup_bm_tail(x, dim: int, n_paths: int, n_steps: int, rng: RngStream, samples=None):
    """Monte Carlo tails of the Brownian supremum on [0, 1] with analytic comparators.

    ``x`` may be a scalar or an array; all levels share the same paths.
    ``samples`` may pass the output of :func:`sup_bm_samples` to reuse paths.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise DomainError("x must be non-negative")
    norm_sup, first_sup = samples if samples is not None else sup_bm_samples(dim, n_paths, n_steps, rng)
    sr = (rng.stream_id, rng.stream_id + len(norm_sup))
    out = []
    for xv in xs:
        out.append(
            SupTailResult(
                x=float(xv),
                dim=dim,
                norm=McEstimate.tail(norm_sup > xv, rng.seed, sr),
                one_sided=McEstimate.tail(first_sup > xv, rng.seed, sr),
                reflection=float(2.0 * normal_sf(xv)),
                union_comparator=float(4.0 * dim * normal_sf(xv)),
                gaussian_comparator=sup_constant(dim) * math.exp(-xv * xv / 4.0),
            )
        )
    return out[0] if np.ndim(x) == 0 else out


def sup_moment_comparator(p: float, dim: int, eta: float = 0.25, eta_prime: float | None = None) -> float:
    """``(eta'/2) (1/eta)^(p/2) p Gamma(p/2)`` with ``eta' = C_d`` by default."""
    ep = sup_constant(dim) if eta_prime is None else eta_prime
    return 0.5 * ep * (1.0 / eta) ** (p / 2.0) * p * special.gamma(p / 2.0)


@dataclass(frozen=True)
class SupMomentResult:
    p: float
    dim: int
    estimate: McEstimate
    comparator: float


def sup_bm_moment(p: int, dim: int, n_paths: int, n_steps: int, rng: RngStream, samples=None,
                  eta: float = 0.25, eta_prime: float | None = None) -> SupMomentResult:
    """Monte Carlo ``E[sup |W|^p]`` on [0, 1] against the sub-Gaussian moment comparator."""
    if p < 2:
        raise DomainError("p must be >= 2")
    norm_sup, _ = samples if samples is not None else sup_bm_samples(dim, n_paths, n_steps, rng)
    est = McEstimate.from_samples(norm_sup**p, rng.seed, (rng.stream_id, rng.stream_id + len(norm_sup)))
    return SupMomentResult(float(p), dim, est, sup_moment_comparator(p, dim, eta, eta_prime))


def simulate_g_paths(spec: GProcessSpec, n_paths: int, rng: RngStream, n_cells: int = 256) -> np.ndarray:
    """Monte Carlo ``G^(k)`` on ``spec.v_grid`` from cell-averaged kernel weights.

    Returns an array of shape (n_paths, len(v_grid)). Each path uses stream
    ``rng.stream_id + r``; the Brownian increments live on ``n_cells`` cells of [0, 1].
    """
    ker = spec.kernel
    shift = spec.k - 1
    ds = 1.0 / n_cells
    weights = np.zeros((len(spec.v_grid), n_cells))
    for row, v in enumerate(spec.v_grid):
        top = min(1.0, v)
        m = int(math.floor(top * n_cells + 1e-9))
        for i in range(m):
            lo, hi = i * ds, (i + 1) * ds

            def f(s, d0, d1, lo=lo, hi=hi):
                return kernel_values(ker, v + shift, s + shift, gap=(v - hi) + d1)

            weights[row, i], _ = tanh_sinh_adaptive(f, lo, hi, tol=1e-10)
            weights[row, i] /= ds
    incr = brownian_increments(rng.seed, range(rng.stream_id, rng.stream_id + n_paths), n_cells, 1, ds)
    return incr[:, :, 0] @ weights.T
