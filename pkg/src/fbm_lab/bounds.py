"""Closed-form bound objects for occupation-measure concentration.

Unspecified multiplicative constants default to 1, so these functions are
meant for checking exponents and shapes rather than absolute values. At
H = 1/2 the rough-regime branch of ``Psi`` is used.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError
from .kernel import HurstParameter


class Mode(enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


def _h(h: "float | HurstParameter") -> float:
    return HurstParameter.of(h).h


def growth_exponent(h: "float | HurstParameter") -> float:
    """``2 max(H, 1/2)``, the growth rate of the squared-psi sums."""
    return 2.0 * max(_h(h), 0.5)


def psi_big(h: "float | HurstParameter", u, k, c_prime: float = 1.0):
    """Decay profile ``Psi_H(u, k)``.

    ``u^(2H-3)`` for H <= 1/2 and ``k^(1-2H) u^(4H-4) + u^(2H-3)`` for
    H > 1/2, times ``c_prime``.
    """
    hv = _h(h)
    u = np.asarray(u, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(u <= 0):
        raise DomainError("psi_big: u must be positive")
    if np.any(k < 1):
        raise DomainError("psi_big: k must be >= 1")
    out = u ** (2 * hv - 3)
    if hv > 0.5:
        out = k ** (1 - 2 * hv) * u ** (4 * hv - 4) + out
    out = c_prime * out
    return float(out) if out.ndim == 0 else out


def _check_nk(n: int, k: int) -> None:
    if int(n) != n or int(k) != k:
        raise DomainError("n and k must be integers")
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got n={n}, k={k}")


def psi_discrete(h: "float | HurstParameter", n: int, k: int, c_prime: float = 1.0) -> float:
    """``sum_{u=1}^{n-k+1} sqrt(Psi_H(u, k))``."""
    _check_nk(n, k)
    u = np.arange(1, n - k + 2, dtype=float)
    return float(np.sum(np.sqrt(psi_big(h, u, k, c_prime))))


def _psi_discrete_all(hv: float, n: int, c_prime: float) -> np.ndarray:
    """``psi_{n,k}`` for ``k = 1..n``."""
    u = np.arange(1, n + 1, dtype=float)
    if hv <= 0.5:
        s = np.cumsum(np.sqrt(c_prime * u ** (2 * hv - 3)))
        return s[::-1].copy()
    out = np.empty(n)
    for k in range(1, n + 1):
        out[k - 1] = psi_discrete(hv, n, k, c_prime)
    return out


def _sqrt_psi_antiderivative_smooth(hv: float, k: float, m: float) -> float:
    """``int_1^m sqrt(k^(1-2H) u^(4H-4) + u^(2H-3)) du`` for H > 1/2.

    With ``z = a u^(2H-1)``, ``a = k^(1-2H)``, the integrand becomes
    ``a^(-1/2) z^(-1/2) (1+z)^(1/2) / (2H-1)``, whose antiderivative is
    ``sqrt(z(1+z)) + asinh(sqrt(z))``.
    """
    a = k ** (1 - 2 * hv)

    def prim(z: float) -> float:
        return math.sqrt(z * (1 + z)) + math.asinh(math.sqrt(z))

    return (prim(a * m ** (2 * hv - 1)) - prim(a)) / (math.sqrt(a) * (2 * hv - 1))


def psi_continuous(h: "float | HurstParameter", t_horizon: float, k: int, c_prime: float = 1.0) -> float:
    """``int_0^{T-k+1} sqrt(Psi_H(max(u, 1), k)) du`` in closed form."""
    hv = _h(h)
    t = float(t_horizon)
    if not t >= 1:
        raise DomainError(f"psi_continuous: T must be >= 1, got {t}")
    if int(k) != k or not 1 <= k <= math.ceil(t):
        raise DomainError(f"psi_continuous: need 1 <= k <= ceil(T), got k={k}")
    m = t - k + 1
    head = math.sqrt(psi_big(hv, 1.0, k, 1.0))
    if m <= 1:
        return math.sqrt(c_prime) * m * head
    if hv < 0.5:
        tail = (m ** (hv - 0.5) - 1) / (hv - 0.5)
    elif hv == 0.5:
        tail = math.log(m)
    else:
        tail = _sqrt_psi_antiderivative_smooth(hv, float(k), m)
    return math.sqrt(c_prime) * (head + tail)


@dataclass(frozen=True)
class BoundProfile:
    """Psi values for every ``k`` at a fixed horizon and their squared sum.

    Exactly one of ``n`` (discrete) or ``t_horizon`` (continuous) is set.
    """

    hurst: HurstParameter
    n: int | None
    t_horizon: float | None
    psi_values: np.ndarray
    sum_psi_sq: float
    growth_exponent: float

    @property
    def horizon(self) -> float:
        return float(self.n if self.n is not None else self.t_horizon)


def sum_psi_squared(
    h: "float | HurstParameter", n: int | None = None, t_horizon: float | None = None, c_prime: float = 1.0
) -> BoundProfile:
    """All ``psi_{n,k}`` (or ``psi'_{T,k}``, ``k = 1..ceil(T)``) and ``sum_k psi^2``."""
    hp = HurstParameter.of(h)
    if (n is None) == (t_horizon is None):
        raise DomainError("give exactly one of n or t_horizon")
    if n is not None:
        if int(n) != n or n < 2:
            raise DomainError(f"sum_psi_squared: need integer n >= 2, got {n}")
        vals = _psi_discrete_all(hp.h, int(n), c_prime)
    else:
        t = float(t_horizon)
        if not t >= 1:
            raise DomainError(f"sum_psi_squared: need T >= 1, got {t}")
        vals = np.array([psi_continuous(hp, t, k, c_prime) for k in range(1, math.ceil(t) + 1)])
    vals.setflags(write=False)
    return BoundProfile(
        hurst=hp,
        n=None if n is None else int(n),
        t_horizon=None if t_horizon is None else float(t_horizon),
        psi_values=vals,
        sum_psi_sq=float(np.sum(vals**2)),
        growth_exponent=growth_exponent(hp),
    )


def moment_to_expmoment_bound(c: float, zeta: float, lam: float) -> float:
    """``exp(2 max(1, c) zeta lam^2)``: exponential-moment bound for sub-Gaussian moments."""
    if not (c > 0 and zeta > 0):
        raise DomainError("c and zeta must be positive")
    if not lam >= 0:
        raise DomainError("lambda must be non-negative")
    return math.exp(2.0 * max(1.0, c) * zeta * lam * lam)


def _horizon(mode: Mode, horizon: float) -> float:
    mode = Mode(mode)
    if mode is Mode.DISCRETE:
        if int(horizon) != horizon or horizon < 1:
            raise DomainError(f"discrete horizon must be a positive integer, got {horizon}")
    elif not horizon >= 1:
        raise DomainError(f"continuous horizon must be >= 1, got {horizon}")
    return float(horizon)


def _check_env(lip: float, c_const: float, r) -> np.ndarray:
    if not (lip > 0 and c_const > 0):
        raise DomainError("Lipschitz constant and c_const must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be non-negative")
    return r


def concentration_envelope(h, horizon, lip: float, c_const: float, r, mode=Mode.DISCRETE):
    """``exp(-r^2 / (4 C lip^2 N^(2H v 1)))`` for a path functional with Lipschitz constant ``lip``."""
    n = _horizon(mode, horizon)
    r = _check_env(lip, c_const, r)
    out = np.exp(-(r**2) / (4.0 * c_const * lip**2 * n ** growth_exponent(h)))
    return float(out) if out.ndim == 0 else out


def occupation_envelope(h, horizon, lip_f: float, c_const: float, r, mode=Mode.DISCRETE):
    """``exp(-r^2 N^(2 - (2H v 1)) / (4 C lip_f^2))`` for the occupation average of ``f``."""
    n = _horizon(mode, horizon)
    r = _check_env(lip_f, c_const, r)
    out = np.exp(-(r**2) * n ** (2.0 - growth_exponent(h)) / (4.0 * c_const * lip_f**2))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LemmaIntegralReport:
    """Scaled integrals ``(u-1)^beta int_2^u exp(-alpha(u-v)) (v-1)^(-beta) dv``."""

    alpha: float
    beta: float
    u: np.ndarray
    integrals: np.ndarray
    ratios: np.ndarray
    errors: np.ndarray
    sup_ratio: float
    last_octave_change: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.sup_ratio))

    @property
    def plateaued(self) -> bool:
        return bool(self.last_octave_change < 0.05)


def check_lemma_integral(alpha: float, beta: float, u_grid) -> LemmaIntegralReport:
    """Quadrature of the exponential-convolution estimate on a grid of ``u >= 2``.

    ``last_octave_change`` compares the ratio at the largest ``u`` with the
    ratio at the largest grid point not exceeding half of it.
    """
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    u = np.asarray(u_grid, dtype=float)
    if np.any(u < 2):
        raise DomainError("u grid must satisfy u >= 2")
    vals = np.empty_like(u)
    errs = np.empty_like(u)
    for i, ui in enumerate(u):
        if ui == 2:
            vals[i], errs[i] = 0.0, 0.0
            continue
        # w = u - v; the integrand is smooth on [0, u-2]
        f = lambda w, ui=ui: math.exp(-alpha * w) * (ui - 1 - w) ** (-beta)
        pts = [p for p in (1.0 / alpha, 10.0 / alpha) if p < ui - 2]
        val, err = integrate.quad(f, 0.0, ui - 2, points=pts or None, limit=500, epsabs=0, epsrel=1e-11)
        if not np.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
            raise QuadratureError(f"lemma integral at u={ui}", value=val, error=err)
        vals[i], errs[i] = val, err
    ratios = vals * (u - 1) ** beta
    last = len(u) - 1
    half = np.nonzero(u <= u[last] / 2)[0]
    if half.size and ratios[last] > 0:
        change = abs(ratios[last] - ratios[half[-1]]) / ratios[last]
    else:
        change = float("inf")
    for a in (u, vals, ratios, errs):
        a.setflags(write=False)
    return LemmaIntegralReport(alpha, beta, u, vals, ratios, errs, float(np.max(ratios)), float(change))
