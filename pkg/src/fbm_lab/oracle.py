"""Variance of linear functionals of fractional Brownian motion.

A functional ``S = sum_k a_k . B(t_k) + int_0^L phi(u) . B(u) du`` with
independent fBm coordinates has variance
``sum_l [M1_l M0_l - D_l / 2]`` where ``M0 = int dc``, ``M1 = int x^p dc`` and
``D = int int |x - y|^p dc(x) dc(y)`` for the signed measure ``c`` and
``p = 2H``. The weight ``phi`` is smooth on uniform panels whose edges
include every ``t_k``; the only non-smooth factors are ``x^p`` at 0 and
``|x - y|^p`` on the diagonal, which get dedicated rules:

* far panel pairs: tensor Gauss-Legendre, summed as block-Toeplitz
  correlations with the FFT;
* a panel with itself: ``tau = |x - y|`` with Gauss-Jacobi in ``tau``;
* neighbouring panels: Duffy split of the square at the shared corner;
* point masses: FFT correlations on the edge lattice, with Gauss-Jacobi
  rules (distance weight) on the two panels touching each point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._quadrature import gauss_jacobi, gauss_legendre
from .errors import DomainError

Weight = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LinearFunctional:
    """Point masses at panel edges plus a panel-wise smooth density.

    Attributes
    ----------
    n_panels, width
        The density lives on ``[0, n_panels * width]``.
    point_panels
        Edge index ``e`` of each point mass, located at ``e * width``.
    point_coef
        Coefficients of the point masses, shape (K, d).
    phi
        ``phi(panel, u)`` for arrays of panel indices and positions inside
        those panels; returns shape (len, d).
    """

    n_panels: int
    width: float
    point_panels: np.ndarray
    point_coef: np.ndarray
    phi: Weight
    dim: int


def _gl01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    return 0.5 * (1 + x), 0.5 * w


def _gj01(n: int, power: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0, 1] for the weight ``s^power``."""
    x, w = gauss_jacobi(n, 0.0, power)
    return 0.5 * (1 + x), w * 0.5 ** (power + 1)


def fbm_functional_variance(h: float, fn: LinearFunctional, nodes: int = 10) -> float:
    """Variance of ``fn`` applied to a ``fn.dim``-dimensional standard fBm."""
    p = 2.0 * h
    w = fn.width
    P = fn.n_panels
    if P < 1 or not w > 0:
        raise DomainError("functional needs at least one panel of positive width")
    xs, ws = _gl01(nodes)
    panel = np.repeat(np.arange(P), nodes)
    u = (panel + np.tile(xs, P)) * w
    dens = fn.phi(panel, u) * np.tile(ws, P)[:, None] * w  # (P*nodes, d)
    a = dens.reshape(P, nodes, fn.dim)
    pts = fn.point_panels.astype(float) * w
    pc = np.asarray(fn.point_coef, dtype=float).reshape(len(pts), fn.dim)

    # M0 and M1; the first panel carries u^p with a Jacobi rule
    m0 = pc.sum(axis=0) + dens.sum(axis=0)
    m1 = (pc * pts[:, None] ** p).sum(axis=0) + (dens[nodes:] * u[nodes:, None] ** p).sum(axis=0)
    sj, wj = _gj01(nodes, p)
    m1 += (fn.phi(np.zeros(nodes, int), sj * w) * (wj * w ** (p + 1))[:, None]).sum(axis=0)

    d_total = np.zeros(fn.dim)
    if len(pts):
        c_edges = np.zeros((P + 1, fn.dim))
        np.add.at(c_edges, np.asarray(fn.point_panels, dtype=int), pc)
        d_total += _points_points(c_edges, w, p)
        d_total += 2.0 * _points_density(fn, c_edges, a, xs, p, nodes)
    d_total += _density_far(a, xs, w, p)
    d_total += _density_near(fn, p, nodes)
    return float(np.sum(m1 * m0 - 0.5 * d_total))


def _lag(size: int, n_pos: int) -> np.ndarray:
    """Signed lag of each index of a length-``size`` circular correlation."""
    m = np.arange(size)
    return np.where(m < n_pos, m, m - size)


def _points_points(c_edges, w, p):
    """``sum_{e,e'} c_e c_e' |(e - e') w|^p`` as an FFT autocorrelation on the edge lattice."""
    n_edges, d = c_edges.shape
    size = 2 * n_edges
    spec = np.fft.rfft(c_edges, n=size, axis=0)
    corr = np.fft.irfft(spec * np.conj(spec), n=size, axis=0)
    ker = np.abs(_lag(size, n_edges) * w) ** p
    return ker @ corr


def _points_density(fn, c_edges, a, xs, p, nodes):
    """``sum_e c_e int phi(v) |e w - v|^p dv``; the two panels touching each edge use Jacobi rules."""
    w = fn.width
    P, nq, d = a.shape
    size = 2 * (P + 1)
    ce = np.fft.rfft(c_edges, n=size, axis=0)
    lag = _lag(size, P + 1)  # edge index minus panel index
    far = (lag != 0) & (lag != 1)
    total = np.zeros(d)
    for q in range(nq):
        corr = np.fft.irfft(ce * np.conj(np.fft.rfft(a[:, q, :], n=size, axis=0)), n=size, axis=0)
        total += np.abs((lag[far] - xs[q]) * w) ** p @ corr[far]
    sj, wj = _gj01(nodes, p)
    scale = (wj * w ** (p + 1))[None, :, None]
    panels = np.arange(P)
    # edge at the left end of the panel (lag 0) and at the right end (lag 1)
    for shift, offset in ((0, sj), (1, 1.0 - sj)):
        coef = c_edges[panels + shift]
        use = np.any(coef != 0, axis=1)
        if not np.any(use):
            continue
        pan = panels[use]
        u = (pan[:, None] + offset[None, :]) * w
        vals = fn.phi(np.repeat(pan, nodes), u.ravel()).reshape(len(pan), nodes, d)
        total += np.sum(coef[use] * np.sum(vals * scale, axis=1), axis=0)
    return total


def _density_far(a, xs, w, p):
    """Tensor Gauss-Legendre over panel pairs at index distance >= 2, via FFT correlations."""
    P, nq, d = a.shape
    if P < 3:
        return np.zeros(d)
    size = 2 * P
    spec = np.fft.rfft(a, n=size, axis=0)  # (size//2+1, nq, d)
    m = np.arange(size)
    m = np.where(m < P, m, m - size)  # signed panel lag
    far = np.abs(m) >= 2
    total = np.zeros(d)
    for q in range(nq):
        corr = np.fft.irfft(spec[:, q, None, :] * np.conj(spec), n=size, axis=0)  # (size, nq, d)
        for r in range(nq):
            ker = np.abs(m[far] * w + (xs[q] - xs[r]) * w) ** p
            total += ker @ corr[far, r, :]
    return total


def _density_near(fn, p, nodes):
    """Diagonal and neighbouring panel pairs with rules adapted to ``|x - y|^p``."""
    w = fn.width
    P = fn.n_panels
    d = fn.dim
    xs, ws = _gl01(nodes)
    tj, wtj = _gj01(nodes, p)  # tau^p on [0, 1]
    rj, wrj = _gj01(nodes, p + 1)  # r^(p+1) on [0, 1]
    total = np.zeros(d)
    panels = np.arange(P)

    # self pairs: 2 int_0^w tau^p int_{lo}^{hi - tau} phi(v) phi(v + tau) dv dtau
    for iq in range(nodes):
        tau = tj[iq] * w
        span = w - tau
        v = panels[:, None] * w + xs[None, :] * span
        pan = np.repeat(panels, nodes)
        f1 = fn.phi(pan, v.ravel())
        f2 = fn.phi(pan, v.ravel() + tau)
        inner = (f1 * f2).reshape(P, nodes, d) * (ws * span)[None, :, None]
        total += 2.0 * wtj[iq] * w ** (p + 1) * inner.sum(axis=(0, 1))

    if P >= 2:
        # neighbours (i, i+1) sharing the edge e = (i+1) w, counted twice
        left = panels[:-1]
        right = panels[1:]
        e = (left + 1) * w
        for ir in range(nodes):
            r = rj[ir] * w
            for it in range(nodes):
                t = xs[it]
                wt = ws[it] * (1 + t) ** p * wrj[ir] * w ** (p + 2)
                # triangle s <= r: u = e - r, v = e + r t
                f_a = fn.phi(left, e - r) * fn.phi(right, e + r * t)
                # triangle r <= s: u = e - s t, v = e + s (s takes the role of r)
                f_b = fn.phi(left, e - r * t) * fn.phi(right, e + r)
                total += 2.0 * wt * (f_a + f_b).sum(axis=0)
    return total
