"""Pure numpy implementations of the hot kernels.

The compiled module ``_core`` exposes the same functions with the same
signatures; ``_backend`` picks one at import time.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev

NAME = "python"


def inner_integral(h, x, xc, coef, upper, z0, cheb):
    """Integral of z^(-2h) (1-z)^(h-1/2) over [x, 1], with xc = 1 - x.

    For ``x <= z0`` the smooth factor is expanded in powers of ``z`` and
    integrated exactly against ``z^(-2h)``: the result is
    ``upper - x^(1-2h) * sum_m coef[m] x^m`` where ``upper`` already holds the
    ``[z0, 1]`` piece plus the series evaluated at ``z0``. Otherwise the
    result is ``xc^(h+1/2)`` times the Chebyshev series ``cheb`` on ``[z0, 1]``.
    """
    x = np.asarray(x, dtype=float)
    xc = np.asarray(xc, dtype=float)
    p = 1.0 - 2.0 * h
    out = np.empty(np.broadcast(x, xc).shape)
    x, xc = np.broadcast_arrays(x, xc)
    low = x <= z0
    if np.any(low):
        xl = x[low]
        acc = np.zeros_like(xl)
        for a in coef[::-1]:
            acc = acc * xl + a
        out[low] = upper - xl**p * acc
    high = ~low
    if np.any(high):
        xh = x[high]
        t = (2.0 * xh - 1.0 - z0) / (1.0 - z0)
        out[high] = xc[high] ** (h + 0.5) * chebyshev.chebval(t, cheb)
    return out


def unit_kernel(h, c, x, xc, coef, upper, z0, cheb):
    """Kernel at ``t = 1``: K(1, x) with ``xc = 1 - x`` supplied exactly."""
    x = np.asarray(x, dtype=float)
    xc = np.asarray(xc, dtype=float)
    beta = h - 0.5
    if beta == 0.0:
        return np.full(np.broadcast(x, xc).shape, c)
    L = inner_integral(h, x, xc, coef, upper, z0, cheb)
    return c * (x ** (-beta) * xc**beta - beta * x**beta * L)


def cell_weights(h, c, n, coef, upper, z0, cheb, ts, gl_near, gl_far):
    """Averages of K(1, .) over the cells of the row-``j`` partition.

    Entry ``[j-1, i]`` for ``0 <= i < j <= n`` is
    ``sum_q w_q K(1, (i + s_q)/j)``, i.e. the mean of the kernel over
    ``[i/j, (i+1)/j]``. The two end cells use the tanh-sinh rule ``ts``;
    interior cells use ``gl_near`` within 8 cells of either end and
    ``gl_far`` elsewhere. Each rule is a tuple ``(s, 1 - s, w)`` on [0, 1].
    """
    out = np.zeros((n, n))
    args = (coef, upper, z0, cheb)
    ts_s, ts_sb, ts_w = ts
    for j in range(1, n + 1):
        # first cell, then last cell (they coincide when j == 1)
        x = ts_s / j
        xc = (j - 1 + ts_sb) / j
        out[j - 1, 0] = unit_kernel(h, c, x, xc, *args) @ ts_w
        if j >= 2:
            x = (j - 1 + ts_s) / j
            xc = ts_sb / j
            out[j - 1, j - 1] = unit_kernel(h, c, x, xc, *args) @ ts_w
        if j >= 3:
            i = np.arange(1, j - 1)
            far = (i >= 8) & (j - 1 - i >= 8)
            for mask, (s, sb, w) in ((~far, gl_near), (far, gl_far)):
                ii = i[mask]
                if ii.size == 0:
                    continue
                x = (ii[:, None] + s[None, :]) / j
                xc = ((j - 1 - ii)[:, None] + sb[None, :]) / j
                vals = unit_kernel(h, c, x, xc, *args)
                out[j - 1, ii] = vals @ w
    return out


def euler_affine(base, neg_a, c, dt):
    """Explicit Euler for the drift ``neg_a @ y + c`` on top of a noise path.

    ``base`` holds ``x0 + sigma B_t`` on the grid, shape (R, n+1, d). The
    state is ``Y_j = base_j + D_j`` where ``D`` accumulates ``dt * b(Y)``,
    which is the recursion ``Y_{j+1} = Y_j + b(Y_j) dt + sigma dB_j``.
    """
    r, n1, d = base.shape
    out = np.empty((r, n1, d))
    acc = np.zeros((r, d))
    m_t = np.ascontiguousarray(neg_a.T)
    for j in range(n1):
        y = base[:, j] + acc
        out[:, j] = y
        acc = acc + dt * (y @ m_t + c)
    return out


def euler_perturbed(base, alpha0, eps, dt):
    """Same as :func:`euler_affine` for the drift ``-alpha0 y + eps sin(y)``."""
    r, n1, d = base.shape
    out = np.empty((r, n1, d))
    acc = np.zeros((r, d))
    for j in range(n1):
        y = base[:, j] + acc
        out[:, j] = y
        acc = acc + dt * (-alpha0 * y + eps * np.sin(y))
    return out
