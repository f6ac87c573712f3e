"""Volterra and Liouville kernels of fractional Brownian motion.

The Volterra kernel is

    K(t, s) = c_H [ (t/s)^(H-1/2) (t-s)^(H-1/2)
                    - (H-1/2) s^(1/2-H) int_s^t u^(H-3/2) (u-s)^(H-1/2) du ],

and it is homogeneous of degree H-1/2, so every evaluation reduces to the
unit kernel ``k(x) = K(1, x)`` on (0, 1). The inner integral becomes
``L(x) = int_x^1 z^(-2H) (1-z)^(H-1/2) dz`` after the change of variables
``z = s/u``. Near ``z = 0`` a power series is integrated exactly against
``z^(-2H)``. On ``[1/4, 1]`` we write ``L(x) = (1-x)^(H+1/2) F(x)`` with ``F``
analytic there; ``F`` is tabulated once per ``H`` as a Chebyshev series
from a Gauss-Jacobi rule with weight ``(1-z)^(H-1/2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev

from . import _backend
from ._quadrature import gauss_jacobi, gauss_legendre, tanh_sinh_adaptive, tanh_sinh_rule
from .errors import DomainError

GAP_EPS = 1e-12
DEFAULT_QUAD_TOL = 1e-9

_SERIES_Z0 = 0.25
_SERIES_TERMS = 40
_GJ_NODES = 24
_CHEB_DEGREE = 32


class Regime(enum.Enum):
    ROUGH = "rough"
    BROWNIAN = "brownian"
    SMOOTH = "smooth"


@dataclass(frozen=True)
class HurstParameter:
    """Hurst index ``h`` in (0, 1) with its regime tag."""

    h: float
    regime: Regime = field(init=False)

    def __post_init__(self) -> None:
        h = float(self.h)
        if not (0.0 < h < 1.0) or not np.isfinite(h):
            raise DomainError(f"Hurst parameter must lie in (0, 1), got {self.h!r}")
        object.__setattr__(self, "h", h)
        if h < 0.5:
            regime = Regime.ROUGH
        elif h > 0.5:
            regime = Regime.SMOOTH
        else:
            regime = Regime.BROWNIAN
        object.__setattr__(self, "regime", regime)

    @classmethod
    def of(cls, h: "float | HurstParameter") -> "HurstParameter":
        return h if isinstance(h, HurstParameter) else cls(h)

    def __float__(self) -> float:
        return self.h


class KernelFamily(enum.Enum):
    VOLTERRA = "volterra"
    LIOUVILLE = "liouville"


@dataclass(frozen=True)
class _Tables:
    coef: np.ndarray
    upper: float
    z0: float
    cheb: np.ndarray

    def args(self) -> tuple:
        return (self.coef, self.upper, self.z0, self.cheb)


@lru_cache(maxsize=64)
def _tables(h: float) -> _Tables:
    beta = h - 0.5
    p = 1.0 - 2.0 * h
    z0 = _SERIES_Z0
    # (1-z)^beta = sum_m c_m z^m, integrated against z^(-2h)
    c = np.empty(_SERIES_TERMS)
    c[0] = 1.0
    for m in range(_SERIES_TERMS - 1):
        c[m + 1] = c[m] * (m - beta) / (m + 1)
    coef = c / (np.arange(_SERIES_TERMS) + p) if beta != 0.0 else np.zeros(_SERIES_TERMS)
    gj_x, gj_w = gauss_jacobi(_GJ_NODES, beta, 0.0)

    def reduced(x):
        # L(x) / (1-x)^(h+1/2), analytic on [z0, 1] with its nearest singularity at 0
        x = np.atleast_1d(x)[:, None]
        z = x + 0.5 * (1.0 - x) * (1.0 + gj_x)
        return 0.5 ** (h + 0.5) * (z ** (-2.0 * h) @ gj_w)

    zc = 1.0 - z0
    cheb = chebyshev.chebinterpolate(lambda t: reduced(z0 + 0.5 * zc * (1.0 + t)), _CHEB_DEGREE)
    upper_piece = zc ** (h + 0.5) * float(reduced(z0)[0])
    series_at_z0 = float(np.dot(coef, z0 ** (np.arange(_SERIES_TERMS) + p)))
    coef.setflags(write=False)
    cheb.setflags(write=False)
    return _Tables(coef, upper_piece + series_at_z0, z0, cheb)


def _unit_kernel(h: float, c: float, x, xc) -> np.ndarray:
    return _backend.impl.unit_kernel(h, c, x, xc, *_tables(h).args())


def _inner_integral(h: float, x, xc) -> np.ndarray:
    """int_x^1 z^(-2h) (1-z)^(h-1/2) dz with ``xc = 1 - x``."""
    return _backend.impl.inner_integral(h, x, xc, *_tables(h).args())


@lru_cache(maxsize=64)
def _volterra_constant(h: float, tol: float) -> float:
    if h == 0.5:
        return 1.0

    def f(x, dx0, dx1):
        return _unit_kernel(h, 1.0, x, dx1) ** 2

    var, _ = tanh_sinh_adaptive(f, 0.0, 1.0, tol=tol, max_level=9)
    return 1.0 / np.sqrt(var)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family at a fixed Hurst index.

    Use :meth:`volterra` or :meth:`liouville` to construct; ``c_h`` is the
    multiplicative constant (variance-normalizing for the Volterra family,
    1 for Liouville).
    """

    hurst: HurstParameter
    family: KernelFamily
    c_h: float
    quad_tol: float = DEFAULT_QUAD_TOL

    def __post_init__(self) -> None:
        if not (self.c_h > 0 and np.isfinite(self.c_h)):
            raise DomainError(f"kernel constant must be positive, got {self.c_h!r}")
        if self.family is KernelFamily.LIOUVILLE and self.c_h != 1.0:
            raise DomainError("the Liouville kernel uses c_h = 1")

    @classmethod
    def volterra(cls, h: "float | HurstParameter", quad_tol: float = DEFAULT_QUAD_TOL) -> "KernelSpec":
        hp = HurstParameter.of(h)
        return cls(hp, KernelFamily.VOLTERRA, _volterra_constant(hp.h, quad_tol), quad_tol)

    @classmethod
    def liouville(cls, h: "float | HurstParameter", quad_tol: float = DEFAULT_QUAD_TOL) -> "KernelSpec":
        return cls(HurstParameter.of(h), KernelFamily.LIOUVILLE, 1.0, quad_tol)

    @property
    def h(self) -> float:
        return self.hurst.h


def kernel_values(spec: KernelSpec, t, s, gap=None) -> np.ndarray:
    """Vectorized K(t, s) without domain checks.

    ``gap`` may carry ``t - s`` computed without cancellation; it defaults
    to the plain difference.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    gap = t - s if gap is None else np.asarray(gap, dtype=float)
    h = spec.h
    beta = h - 0.5
    if spec.family is KernelFamily.LIOUVILLE:
        return gap**beta
    return t**beta * _unit_kernel(h, spec.c_h, s / t, gap / t)


def _check_domain(t, s, what: str) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(s))):
        raise DomainError(f"{what}: non-finite argument")
    if np.any(t <= 0) or np.any(s <= 0) or np.any(s >= t):
        raise DomainError(f"{what}: requires 0 < s < t")
    if np.any(t - s < GAP_EPS):
        raise DomainError(f"{what}: t - s below {GAP_EPS:g}, too close to the diagonal singularity")
    return t, s


def eval_kernel(spec: KernelSpec, t, s):
    """Evaluate the kernel K(t, s).

    Parameters
    ----------
    spec
        Kernel family and Hurst index.
    t, s
        Times with ``0 < s < t``; arrays broadcast.

    Returns
    -------
    float or ndarray

    Raises
    ------
    DomainError
        Outside ``0 < s < t`` or when ``t - s < 1e-12``.
    """
    t, s = _check_domain(t, s, "eval_kernel")
    out = kernel_values(spec, t, s)
    return float(out) if out.ndim == 0 else out


def eval_kernel_time_derivative(spec: KernelSpec, u, s):
    """Partial derivative of K(u, s) in its first argument.

    For the Volterra family this is ``c_H (H-1/2) (u/s)^(H-1/2) (u-s)^(H-3/2)``;
    the integral term's derivative cancels the other contributions. It
    vanishes identically at H = 1/2 and is negative for H < 1/2.
    """
    u, s = _check_domain(u, s, "eval_kernel_time_derivative")
    beta = spec.h - 0.5
    gap = u - s
    if spec.family is KernelFamily.LIOUVILLE:
        out = beta * gap ** (beta - 1.0)
    else:
        out = spec.c_h * beta * (u / s) ** beta * gap ** (beta - 1.0)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def kernel_variance(spec: KernelSpec, t: float, tol: float | None = None) -> float:
    """Integral of K(t, s)^2 over s in (0, t).

    Uses tanh-sinh quadrature refined until two levels agree within ``tol``
    (default ``spec.quad_tol``).

    Raises
    ------
    DomainError
        If ``t <= 0``.
    QuadratureError
        If the refinement does not converge.
    """
    t = float(t)
    if not (t > 0 and np.isfinite(t)):
        raise DomainError(f"kernel_variance: requires t > 0, got {t!r}")
    tol = spec.quad_tol if tol is None else tol

    def f(s, ds0, ds1):
        return kernel_values(spec, t, s, gap=ds1) ** 2

    value, _ = tanh_sinh_adaptive(f, 0.0, t, tol=tol, max_level=9)
    return value


def _unit_rules() -> tuple[tuple, tuple, tuple]:
    ts = tanh_sinh_rule(4)
    x8, w8 = gauss_legendre(8)
    x4, w4 = gauss_legendre(4)
    return (
        (0.5 * ts.lo, 0.5 * ts.hi, 0.5 * ts.weights),
        (0.5 * (1 + x8), 0.5 * (1 - x8), 0.5 * w8),
        (0.5 * (1 + x4), 0.5 * (1 - x4), 0.5 * w4),
    )


@lru_cache(maxsize=4)
def _cell_means(h: float, c: float, family: KernelFamily, n: int, backend: str) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    if family is KernelFamily.LIOUVILLE:
        # exact antiderivative of (j - x)^(h-1/2) in grid units
        i = np.arange(n, dtype=float)
        lag = np.maximum(j[:, None] - i[None, :], 0.0)
        a = h + 0.5
        out = (lag**a - np.maximum(lag - 1.0, 0.0) ** a) / a
        out[lag <= 0] = 0.0
        return out
    mod = _backend.get_backend(backend)
    ts, near, far = _unit_rules()
    means = mod.cell_weights(h, c, n, *_tables(h).args(), ts, near, far)
    return means * (j ** (h - 0.5))[:, None]


def cell_weight_matrix(spec: KernelSpec, n: int, dt: float, backend: str | None = None) -> np.ndarray:
    """Lower-triangular matrix of cell-averaged kernel weights.

    Entry ``[j-1, i]`` is ``(1/dt) int_{i dt}^{(i+1) dt} K(j dt, s) ds`` for
    ``i < j``, so that ``B_{t_j} ~ sum_i W[j-1, i] (W_{t_{i+1}} - W_{t_i})``.
    The returned array is read-only and may be shared between calls.
    """
    if n < 1:
        raise DomainError("cell_weight_matrix: n must be >= 1")
    if not dt > 0:
        raise DomainError("cell_weight_matrix: dt must be positive")
    name = backend or _backend.NAME
    base = _cell_means(spec.h, spec.c_h, spec.family, int(n), name)
    out = base * dt ** (spec.h - 0.5)
    out.setflags(write=False)
    return out
