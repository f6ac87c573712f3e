"""Experiment configuration read from TOML with dotted keys.

Every accepted key is listed in :data:`SCHEMA`; anything else is an error.
Tables and dotted keys are equivalent, so ``[drift]\\nkind = "linear"`` and
``drift.kind = "linear"`` mean the same thing.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .kernel import HurstParameter, KernelSpec
from .sde import DriftKind, DriftModel, SdeSpec

# key -> (kind, default); kind is one of "float", "int", "str", "floats", "ints", "matrix"
SCHEMA: dict[str, tuple[str, Any]] = {
    "hurst": ("float", 0.5),
    "seed": ("int", 42),
    "stream_base": ("int", 0),
    "replicas": ("int", 10_000),
    "chunk": ("int", 256),
    "delta": ("float", 1.0),
    "dt": ("float", 1.0 / 32),
    "burn_in": ("float", 0.0),
    "n_list": ("ints", [16, 32, 64]),
    "t_list": ("floats", []),
    "r_list": ("floats", [0.5, 1.0, 2.0]),
    "r_units": ("str", "oracle_sd"),
    "lambda_list": ("floats", [0.25, 0.5]),
    "sampler": ("str", "auto"),
    "kernel.family": ("str", "volterra"),
    "kernel.quad_tol": ("float", 1e-9),
    "drift.kind": ("str", "linear"),
    "drift.matrix": ("matrix", [[1.0]]),
    "drift.offset": ("floats", None),
    "drift.alpha0": ("float", 1.0),
    "drift.eps": ("float", 0.0),
    "drift.dim": ("int", 1),
    "sde.sigma": ("matrix", None),
    "sde.x0": ("floats", None),
    "f.kind": ("str", "identity"),
    "f.lipschitz": ("float", 1.0),
    "f.clip": ("float", 1.0),
    "bounds.c_const": ("float", 1.0),
    "bounds.c_prime": ("float", 1.0),
    "bounds.zeta": ("float", 1.0),
    "envelope.calibration_n": ("int", 64),
    "envelope.evaluation_n": ("ints", [1024]),
    "envelope.calibration_replicas": ("int", 4000),
    "envelope.confidence": ("float", 0.99),
    "mgf.min_ess": ("float", 100.0),
}

SAMPLERS = ("auto", "bm", "cholesky", "volterra")
R_UNITS = ("absolute", "oracle_sd")
F_KINDS = ("identity", "sin", "clipped_abs")


def flatten(tree: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    """Turn nested tables into a flat mapping with dotted keys."""
    out: dict[str, Any] = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, kind: str, v: Any) -> Any:
    try:
        if kind == "float":
            if isinstance(v, bool):
                raise TypeError
            x = float(v)
            if not math.isfinite(x):
                raise ValueError
            return x
        if kind == "int":
            if isinstance(v, bool) or int(v) != v:
                raise TypeError
            return int(v)
        if kind == "str":
            if not isinstance(v, str):
                raise TypeError
            return v
        if kind == "floats":
            return [_coerce(key, "float", x) for x in v]
        if kind == "ints":
            return [_coerce(key, "int", x) for x in v]
        if kind == "matrix":
            m = np.atleast_2d(np.asarray(v, dtype=float))
            if m.ndim != 2 or not np.all(np.isfinite(m)):
                raise ValueError
            return m.tolist()
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r}: cannot interpret {v!r} as {kind}") from None
    raise ConfigError(f"config key {key!r}: unknown kind {kind}")


@dataclass(frozen=True)
class FSpec:
    """Test function applied to the first coordinate of the state."""

    kind: str = "identity"
    lipschitz: float = 1.0
    clip: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in F_KINDS:
            raise ConfigError(f"f.kind must be one of {F_KINDS}, got {self.kind!r}")
        if self.lipschitz != 1.0:
            raise ConfigError(f"f.lipschitz must equal 1 for {self.kind!r}, got {self.lipschitz}")
        if self.kind == "clipped_abs" and not self.clip > 0:
            raise ConfigError("f.clip must be positive")

    def __call__(self, y: np.ndarray) -> np.ndarray:
        y0 = y[..., 0]
        if self.kind == "identity":
            return y0
        if self.kind == "sin":
            return np.sin(y0)
        return np.minimum(np.abs(y0), self.clip)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated experiment parameters; ``values`` echoes every key with defaults filled in."""

    values: dict[str, Any]
    hurst: HurstParameter
    kernel: KernelSpec
    sde: SdeSpec
    f_spec: FSpec

    def __getattr__(self, name: str) -> Any:
        vals = object.__getattribute__(self, "values")
        if name in vals:
            return vals[name]
        raise AttributeError(name)

    def get(self, key: str) -> Any:
        return self.values[key]

    @property
    def dim(self) -> int:
        return self.sde.dim

    def steps_per(self, span: float, what: str) -> int:
        """``span / dt`` as an exact integer, or a config error."""
        q = span / self.dt
        m = int(round(q))
        if abs(q - m) > 1e-9 * max(1.0, q):
            raise ConfigError(f"{what}={span} is not an integer multiple of dt={self.dt}")
        return m

    def replace(self, **changes: Any) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in changes.items():
            vals[k.replace("__", ".")] = v
        return build_config(vals)


def build_config(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a flat or nested mapping against :data:`SCHEMA`."""
    flat = flatten(raw)
    unknown = sorted(set(flat) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    vals: dict[str, Any] = {}
    for key, (kind, default) in SCHEMA.items():
        if key in flat and not (flat[key] is None and default is None):
            vals[key] = _coerce(key, kind, flat[key])
        else:
            vals[key] = default if not isinstance(default, list) else list(default)

    try:
        hurst = HurstParameter(vals["hurst"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("replicas", "chunk"):
        if vals[key] < 1:
            raise ConfigError(f"{key} must be >= 1")
    if not 0 <= vals["seed"] < 2**64 or not 0 <= vals["stream_base"] < 2**63:
        raise ConfigError("seed and stream_base must be non-negative 64-bit integers")
    for key in ("delta", "dt"):
        if not vals[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if vals["burn_in"] < 0:
        raise ConfigError("burn_in must be >= 0")
    if any(n < 1 for n in vals["n_list"]):
        raise ConfigError("n_list entries must be >= 1")
    if any(t < 1 for t in vals["t_list"]):
        raise ConfigError("t_list entries must be >= 1")
    if any(r < 0 for r in vals["r_list"]) or any(x < 0 for x in vals["lambda_list"]):
        raise ConfigError("r_list and lambda_list entries must be >= 0")
    if vals["sampler"] not in SAMPLERS:
        raise ConfigError(f"sampler must be one of {SAMPLERS}")
    if vals["r_units"] not in R_UNITS:
        raise ConfigError(f"r_units must be one of {R_UNITS}")
    if not 0 < vals["envelope.confidence"] < 1:
        raise ConfigError("envelope.confidence must lie in (0, 1)")

    fam = vals["kernel.family"]
    if fam == "volterra":
        kernel = KernelSpec.volterra(hurst, vals["kernel.quad_tol"])
    elif fam == "liouville":
        kernel = KernelSpec.liouville(hurst, vals["kernel.quad_tol"])
    else:
        raise ConfigError(f"kernel.family must be 'volterra' or 'liouville', got {fam!r}")

    kind = vals["drift.kind"]
    try:
        if kind == DriftKind.LINEAR.value:
            drift = DriftModel.linear(vals["drift.matrix"], vals["drift.offset"], strict=False)
        elif kind == DriftKind.PERTURBED_LINEAR.value:
            drift = DriftModel.perturbed_linear(vals["drift.alpha0"], vals["drift.eps"], vals["drift.dim"])
        else:
            raise ConfigError(f"drift.kind must be 'linear' or 'perturbed_linear', got {kind!r}")
        d = drift.dim
        sigma = np.eye(d) if vals["sde.sigma"] is None else np.asarray(vals["sde.sigma"])
        x0 = np.zeros(d) if vals["sde.x0"] is None else np.asarray(vals["sde.x0"])
        sde = SdeSpec(drift, sigma, x0, kernel)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    f_spec = FSpec(vals["f.kind"], vals["f.lipschitz"], vals["f.clip"])
    cfg = ExperimentConfig(vals, hurst, kernel, sde, f_spec)
    cfg.steps_per(vals["delta"], "delta")
    cfg.steps_per(vals["burn_in"], "burn_in")
    for t in vals["t_list"]:
        cfg.steps_per(t, "t_list entry")
    return cfg


def load_config(path: "str | Path") -> ExperimentConfig:
    """Read and validate a TOML config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        with p.open("rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None
    return build_config(raw)
