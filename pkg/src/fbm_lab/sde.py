"""Additive-noise SDE ``dY = b(Y) dt + sigma dB`` integrated along given fBm paths.

The drift is advanced by explicit Euler while the noise enters through the
exact increments of the supplied path, so the scheme has no stochastic
integration error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .errors import DomainError, IntegrationError
from .kernel import KernelSpec
from .sampler import RngStream, SamplePath, TimeGrid


class DriftKind(enum.Enum):
    LINEAR = "linear"
    PERTURBED_LINEAR = "perturbed_linear"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class DriftModel:
    """Drift ``b`` with declared one-sided constant ``alpha`` and Lipschitz ``lip``.

    Build with :meth:`linear`, :meth:`perturbed_linear` or :meth:`custom`.
    ``alpha`` satisfies ``<b(x)-b(y), x-y> <= -alpha |x-y|^2``.
    """

    kind: DriftKind
    dim: int
    alpha: float
    lip: float
    matrix: np.ndarray | None = None
    offset: np.ndarray | None = None
    alpha0: float | None = None
    eps: float | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def linear(cls, a, c=None, strict: bool = True) -> "DriftModel":
        """``b(x) = -A x + c``.

        ``alpha`` is the smallest eigenvalue of the symmetric part of ``A`` and
        ``lip`` its spectral norm. With ``strict=False`` a non-contractive
        ``A`` (for instance zero) is accepted for oracle experiments.
        """
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise DomainError(f"drift matrix must be square, got shape {a.shape}")
        d = a.shape[0]
        c = np.zeros(d) if c is None else np.atleast_1d(np.asarray(c, dtype=float))
        if c.shape != (d,):
            raise DomainError(f"drift offset must have shape ({d},), got {c.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(c))):
            raise DomainError("drift coefficients must be finite")
        alpha = float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])
        lip = float(np.linalg.norm(a, 2))
        if strict and not alpha > 0:
            raise DomainError(f"linear drift is not contractive: smallest symmetric eigenvalue {alpha:.6g}")
        a.setflags(write=False)
        c.setflags(write=False)
        return cls(DriftKind.LINEAR, d, alpha, lip, matrix=a, offset=c)

    @classmethod
    def perturbed_linear(cls, alpha0: float, eps: float, dim: int = 1) -> "DriftModel":
        """``b(x) = -alpha0 x + eps sin(x)`` coordinate-wise, requiring ``eps < alpha0``."""
        alpha0 = float(alpha0)
        eps = float(eps)
        if not alpha0 > 0:
            raise DomainError("alpha0 must be positive")
        if not 0 <= eps < alpha0:
            raise DomainError(f"need 0 <= eps < alpha0, got eps={eps}, alpha0={alpha0}")
        return cls(
            DriftKind.PERTURBED_LINEAR, int(dim), alpha0 - eps, alpha0 + eps, alpha0=alpha0, eps=eps
        )

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray], alpha: float, lip: float, dim: int = 1) -> "DriftModel":
        """Arbitrary drift acting on arrays of shape (..., dim) with declared constants.

        The constants are not checked against ``func``; see :func:`validate_drift`.
        """
        if not (alpha > 0 and lip >= alpha):
            raise DomainError(f"need 0 < alpha <= lip, got alpha={alpha}, lip={lip}")
        return cls(DriftKind.CUSTOM, int(dim), float(alpha), float(lip), func=func)

    @property
    def contractive(self) -> bool:
        return self.alpha > 0

    def __call__(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind is DriftKind.LINEAR:
            return y @ (-self.matrix).T + self.offset
        if self.kind is DriftKind.PERTURBED_LINEAR:
            return -self.alpha0 * y + self.eps * np.sin(y)
        return np.asarray(self.func(y), dtype=float)


@dataclass(frozen=True, eq=False)
class SdeSpec:
    """Drift, diffusion matrix, initial value and the driving kernel."""

    drift: DriftModel
    sigma: np.ndarray
    x0: np.ndarray
    kernel: KernelSpec

    def __post_init__(self) -> None:
        d = self.drift.dim
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = sigma * np.eye(d)
        x0 = np.asarray(self.x0, dtype=float)
        if x0.ndim == 0:
            x0 = np.full(d, float(x0))
        if sigma.shape != (d, d):
            raise DomainError(f"sigma must be {d}x{d}, got {sigma.shape}")
        if x0.shape != (d,):
            raise DomainError(f"x0 must have shape ({d},), got {x0.shape}")
        if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(x0))):
            raise DomainError("sigma and x0 must be finite")
        sigma.setflags(write=False)
        x0.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self) -> int:
        return self.drift.dim

    @property
    def sigma_norm(self) -> float:
        """Operator (spectral) norm of ``sigma``."""
        return float(np.linalg.norm(self.sigma, 2))


def integrate_batch(spec: SdeSpec, dt: float, fbm: np.ndarray) -> np.ndarray:
    """Integrate along a batch of driving paths of shape (R, n+1, d).

    Raises
    ------
    IntegrationError
        On the first grid index where any replica becomes non-finite.
    """
    fbm = np.asarray(fbm, dtype=float)
    if fbm.ndim != 3 or fbm.shape[2] != spec.dim:
        raise DomainError(f"driving paths must have shape (R, n+1, {spec.dim}), got {fbm.shape}")
    base = spec.x0 + fbm @ spec.sigma.T
    drift = spec.drift
    with np.errstate(over="ignore", invalid="ignore"):
        if drift.kind is DriftKind.LINEAR:
            out = _backend.impl.euler_affine(base, -drift.matrix, drift.offset, dt)
        elif drift.kind is DriftKind.PERTURBED_LINEAR:
            out = _backend.impl.euler_perturbed(base, drift.alpha0, drift.eps, dt)
        else:
            out = _euler_generic(drift, base, dt)
    bad = ~np.isfinite(out)
    if np.any(bad):
        step = int(np.argmax(bad.any(axis=(0, 2))))
        raise IntegrationError("non-finite state (drift blow-up)", step)
    return out


def _euler_generic(drift: DriftModel, base: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty_like(base)
    acc = np.zeros(base[:, 0].shape)
    for j in range(base.shape[1]):
        y = base[:, j] + acc
        out[:, j] = y
        if not np.all(np.isfinite(y)):
            out[:, j + 1 :] = np.nan
            break
        acc = acc + dt * drift(y)
    return out


def integrate(spec: SdeSpec, fbm: SamplePath) -> SamplePath:
    """Euler-in-drift solution driven by one fBm path.

    ``Y_0 = x0`` and ``Y_{j+1} = Y_j + b(Y_j) dt + sigma (B_{j+1} - B_j)``.
    """
    if fbm.dim != spec.dim:
        raise DomainError(f"path dimension {fbm.dim} does not match SDE dimension {spec.dim}")
    y = integrate_batch(spec, fbm.grid.dt, fbm.values[None])
    return SamplePath(fbm.grid, y[0])


@dataclass(frozen=True)
class ValidationReport:
    """Empirical drift constants from random probe pairs.

    ``one_sided_max`` is the largest ``<b(x)-b(y), x-y>/|x-y|^2`` seen and
    ``lipschitz_max`` the largest ``|b(x)-b(y)|/|x-y|``.
    """

    one_sided_max: float
    lipschitz_max: float
    alpha: float
    lip: float
    probe_count: int
    one_sided_ok: bool
    lipschitz_ok: bool

    @property
    def passed(self) -> bool:
        return self.one_sided_ok and self.lipschitz_ok


def _ball(gen: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    v = gen.standard_normal((count, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (radius * gen.random((count, 1)) ** (1.0 / dim))


def validate_drift(model: DriftModel, probe_count: int, radius: float, rng: RngStream) -> ValidationReport:
    """Check the declared constants of ``model`` on uniform pairs in a ball."""
    if probe_count < 1:
        raise DomainError("probe_count must be >= 1")
    if not radius > 0:
        raise DomainError("radius must be positive")
    gen = rng.generator()
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    need = probe_count
    while need > 0:
        x = _ball(gen, need, model.dim, radius)
        y = _ball(gen, need, model.dim, radius)
        ok = np.any(x != y, axis=1)
        xs.append(x[ok])
        ys.append(y[ok])
        need -= int(ok.sum())
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    dx = x - y
    db = model(x) - model(y)
    nrm2 = np.sum(dx * dx, axis=1)
    one_sided = float(np.max(np.sum(db * dx, axis=1) / nrm2))
    lips = float(np.max(np.linalg.norm(db, axis=1) / np.sqrt(nrm2)))
    return ValidationReport(
        one_sided_max=one_sided,
        lipschitz_max=lips,
        alpha=model.alpha,
        lip=model.lip,
        probe_count=probe_count,
        one_sided_ok=one_sided <= -model.alpha * (1 - 1e-9),
        lipschitz_ok=lips <= model.lip * (1 + 1e-9),
    )


def ode_reference(drift: DriftModel, x0, grid: TimeGrid, refine: int = 100) -> np.ndarray:
    """Explicit Euler for ``y' = b(y)`` with step ``dt/refine``, sampled on ``grid``."""
    y = np.asarray(x0, dtype=float).reshape(1, -1)
    out = np.empty((grid.n_steps + 1, y.shape[1]))
    out[0] = y[0]
    h = grid.dt / refine
    for j in range(grid.n_steps):
        for _ in range(refine):
            y = y + h * drift(y)
        out[j + 1] = y[0]
    return out
