"""Fixed and level-refined quadrature rules shared across the package.

All rules return nodes on a reference interval together with the distances of
each node to both endpoints, so integrands with algebraic endpoint
singularities can be evaluated without cancellation near the ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .errors import QuadratureError

TANH_SINH_TMAX = 6.0


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the weight (1-x)^alpha (1+x)^beta on [-1, 1]."""
    x, w = special.roots_jacobi(n, alpha, beta)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class TanhSinhRule:
    """Double-exponential rule on [-1, 1].

    Attributes
    ----------
    lo, hi
        Distances ``1 + x`` and ``1 - x`` of every node to the two endpoints,
        computed without subtraction.
    weights
        Quadrature weights, already multiplied by the step length.
    """

    lo: np.ndarray
    hi: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def tanh_sinh_rule(level: int, t_max: float = TANH_SINH_TMAX) -> TanhSinhRule:
    """Tanh-sinh rule with step ``2**-level`` truncated at ``|t| <= t_max``."""
    h = 2.0 ** (-level)
    m = int(np.floor(t_max / h))
    t = h * np.arange(-m, m + 1, dtype=float)
    u = 0.5 * np.pi * np.sinh(t)
    e = np.exp(-2.0 * np.abs(u))
    # 1 - tanh|u| = 2e/(1+e); keep the small side exact for each sign of u
    small = 2.0 * e / (1.0 + e)
    big = 2.0 / (1.0 + e)
    lo = np.where(u < 0, small, big)
    hi = np.where(u < 0, big, small)
    w = h * 0.5 * np.pi * np.cosh(t) * 4.0 * e / (1.0 + e) ** 2
    keep = (lo > 0) & (hi > 0) & (w > 0)
    rule = TanhSinhRule(lo[keep], hi[keep], w[keep])
    for a in (rule.lo, rule.hi, rule.weights):
        a.setflags(write=False)
    return rule


Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def tanh_sinh(f: Integrand, a: float, b: float, level: int = 4) -> float:
    """Integrate ``f(x, x - a, b - x)`` over ``[a, b]`` with a fixed level."""
    rule = tanh_sinh_rule(level)
    half = 0.5 * (b - a)
    da = half * rule.lo
    db = half * rule.hi
    x = np.where(rule.lo <= rule.hi, a + da, b - db)
    return float(half * np.dot(rule.weights, f(x, da, db)))


def tanh_sinh_adaptive(
    f: Integrand,
    a: float,
    b: float,
    tol: float = 1e-9,
    min_level: int = 3,
    max_level: int = 8,
) -> tuple[float, float]:
    """Refine the tanh-sinh step until two successive levels agree.

    Returns
    -------
    value, error_estimate

    Raises
    ------
    QuadratureError
        If the level difference is still above ``tol`` (relative to the
        magnitude of the value, floored at 1) at ``max_level``.
    """
    prev = tanh_sinh(f, a, b, min_level)
    err = np.inf
    for level in range(min_level + 1, max_level + 1):
        cur = tanh_sinh(f, a, b, level)
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)):
            return cur, err
        prev = cur
    raise QuadratureError(
        f"tanh-sinh did not converge on [{a}, {b}]", value=prev, error=float(err)
    )


def gauss_legendre_panels(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panels."""
    x, w = gauss_legendre(n)
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
