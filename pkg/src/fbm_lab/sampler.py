"""Brownian and fractional Brownian path generation on uniform grids.

Two fBm routes share the same Brownian increments: an exact Gaussian
sampler from the Cholesky factor of the fBm covariance, and a Volterra
sampler applying cell-averaged kernel weights to the increments. Each
replica draws from its own counter-based stream, so results do not depend
on how replicas are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, FactorizationError
from .kernel import KernelFamily, KernelSpec, cell_weight_matrix

CHOLESKY_MAX_STEPS = 8192
_U64 = 1 << 64


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``k * dt`` for ``k = 0..n_steps`` with ``dt = t_max / n_steps``."""

    t_max: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (self.t_max > 0 and np.isfinite(self.t_max)):
            raise DomainError(f"t_max must be positive, got {self.t_max!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_step(cls, dt: float, n_steps: int) -> "TimeGrid":
        return cls(dt * n_steps, n_steps)

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class SamplePath:
    """Values of a ``dim``-dimensional path at every grid point.

    ``values`` has shape ``(n_steps + 1, dim)``.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.n_steps + 1:
            raise DomainError(
                f"path has {v.shape[0]} points, grid expects {self.grid.n_steps + 1}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("path contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path: "str | Path") -> None:
        """Write ``t,comp_0,...`` rows with 17 significant digits."""
        write_paths_csv(path, self.grid, self.values)

    @classmethod
    def from_csv(cls, path: "str | Path") -> "SamplePath":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        grid = TimeGrid(float(t[-1]), len(t) - 1)
        return cls(grid, data[:, 1:])


def write_paths_csv(path: "str | Path", grid: TimeGrid, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    header = ",".join(["t"] + [f"comp_{k}" for k in range(values.shape[1])])
    table = np.column_stack([grid.times, values])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


@dataclass(frozen=True)
class RngStream:
    """Counter-based normal stream identified by ``(seed, stream_id)``.

    The generator is Philox keyed by both integers; the draw index is the
    Philox counter, so a stream always produces the same sequence.
    """

    seed: int
    stream_id: int

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= int(v) < _U64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed + (self.stream_id << 64)))

    def normals(self, shape) -> np.ndarray:
        return self.generator().standard_normal(shape)


def brownian_increments(
    seed: int, stream_ids: Iterable[int], n_steps: int, dim: int, dt: float
) -> np.ndarray:
    """Increments ``sqrt(dt) * N(0, I)`` for each stream, shape (R, n_steps, dim)."""
    ids = list(stream_ids)
    out = np.empty((len(ids), n_steps, dim))
    for r, sid in enumerate(ids):
        out[r] = RngStream(seed, sid).normals((n_steps, dim))
    out *= np.sqrt(dt)
    return out


def fbm_cross_covariance(h: float, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``0.5 (s^2h + t^2h - |t - s|^2h)`` for every pair in ``s x t``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    p = 2.0 * h
    return 0.5 * ((s**p)[:, None] + (t**p)[None, :] - np.abs(s[:, None] - t[None, :]) ** p)


def fbm_covariance(h: float, times: np.ndarray) -> np.ndarray:
    """fBm covariance matrix on ``times``."""
    return fbm_cross_covariance(h, times, times)


@lru_cache(maxsize=4)
def _cholesky_factor(h: float, n_steps: int, dt: float) -> np.ndarray:
    times = dt * np.arange(1, n_steps + 1)
    cov = fbm_covariance(h, times)
    try:
        fac = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * float(np.max(np.diag(cov)))
        try:
            fac = np.linalg.cholesky(cov + jitter * np.eye(n_steps))
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(
                f"fBm covariance not positive definite (H={h}, n={n_steps}) even with jitter {jitter:.3e}"
            ) from exc
    fac.setflags(write=False)
    return fac


def cholesky_factor(h: float, grid: TimeGrid) -> np.ndarray:
    """Lower Cholesky factor of the fBm covariance at ``dt, 2 dt, ..., t_max``."""
    if grid.n_steps > CHOLESKY_MAX_STEPS:
        raise DomainError(
            f"Cholesky sampling limited to {CHOLESKY_MAX_STEPS} steps, got {grid.n_steps}; use the Volterra sampler"
        )
    return _cholesky_factor(float(h), grid.n_steps, grid.dt)


def _apply_lower(mat: np.ndarray, incr: np.ndarray) -> np.ndarray:
    """Apply ``mat`` along the time axis of (R, n, d) increments; prepend zeros."""
    r, n, d = incr.shape
    flat = incr.transpose(1, 0, 2).reshape(n, r * d)
    out = np.zeros((r, n + 1, d))
    out[:, 1:, :] = (mat @ flat).reshape(n, r, d).transpose(1, 0, 2)
    return out


def _volterra_spec(spec: KernelSpec) -> None:
    if spec.family is not KernelFamily.VOLTERRA:
        raise DomainError("exact fBm sampling needs the Volterra kernel family")


def bm_from_increments(incr: np.ndarray) -> np.ndarray:
    r, n, d = incr.shape
    out = np.zeros((r, n + 1, d))
    np.cumsum(incr, axis=1, out=out[:, 1:, :])
    return out


def fbm_cholesky_from_normals(spec: KernelSpec, grid: TimeGrid, z: np.ndarray) -> np.ndarray:
    """Exact fBm values (R, n+1, d) from standard normals ``z`` of shape (R, n, d)."""
    _volterra_spec(spec)
    return _apply_lower(cholesky_factor(spec.h, grid), z)


def fbm_volterra_from_increments(spec: KernelSpec, grid: TimeGrid, dw: np.ndarray) -> np.ndarray:
    """Volterra-discretized path (R, n+1, d) driven by Brownian increments ``dw``."""
    if spec.h == 0.5 and spec.family is KernelFamily.VOLTERRA:
        return bm_from_increments(dw)
    return _apply_lower(cell_weight_matrix(spec, grid.n_steps, grid.dt), dw)


def sample_bm(grid: TimeGrid, dim: int, rng: RngStream) -> SamplePath:
    """Standard Brownian path started at 0."""
    incr = brownian_increments(rng.seed, [rng.stream_id], grid.n_steps, dim, grid.dt)
    return SamplePath(grid, bm_from_increments(incr)[0])


def sample_fbm_cholesky(spec: KernelSpec, grid: TimeGrid, dim: int, rng: RngStream) -> SamplePath:
    """Exact fBm path from the Cholesky factor of its covariance.

    Coordinates are independent. The factor is cached per (H, grid).

    Raises
    ------
    DomainError
        If ``grid.n_steps`` exceeds 8192 or the kernel is not Volterra.
    FactorizationError
        If the covariance cannot be factorized even after jitter.
    """
    z = RngStream(rng.seed, rng.stream_id).normals((1, grid.n_steps, dim))
    return SamplePath(grid, fbm_cholesky_from_normals(spec, grid, z)[0])


def sample_fbm_volterra(
    spec: KernelSpec, grid: TimeGrid, dim: int, rng: RngStream
) -> tuple[SamplePath, SamplePath]:
    """Coupled Brownian driver ``w`` and Volterra fBm ``b`` on one grid.

    ``b`` at ``t_j`` is ``sum_{i<j} kappa(t_j, i) (w_{i+1} - w_i)`` with
    ``kappa`` the kernel averaged over the cell ``[t_i, t_{i+1}]``.
    """
    incr = brownian_increments(rng.seed, [rng.stream_id], grid.n_steps, dim, grid.dt)
    w = bm_from_increments(incr)[0]
    b = fbm_volterra_from_increments(spec, grid, incr)[0]
    return SamplePath(grid, w), SamplePath(grid, b)


METHODS = ("bm", "cholesky", "volterra")


def sample_batch(
    method: str,
    spec: KernelSpec | None,
    grid: TimeGrid,
    dim: int,
    seed: int,
    stream_ids: Sequence[int],
) -> np.ndarray:
    """Paths for many streams at once, shape (R, n_steps + 1, dim).

    Every stream consumes its normals in the same order as the single-path
    samplers, so row ``r`` is the path of ``RngStream(seed, stream_ids[r])``.
    """
    if method == "bm":
        return bm_from_increments(brownian_increments(seed, stream_ids, grid.n_steps, dim, grid.dt))
    if spec is None:
        raise DomainError(f"method {method!r} needs a kernel spec")
    if method == "cholesky":
        z = brownian_increments(seed, stream_ids, grid.n_steps, dim, 1.0)
        return fbm_cholesky_from_normals(spec, grid, z)
    if method == "volterra":
        incr = brownian_increments(seed, stream_ids, grid.n_steps, dim, grid.dt)
        return fbm_volterra_from_increments(spec, grid, incr)
    raise DomainError(f"unknown sampling method {method!r}; expected one of {METHODS}")
