"""Flat ``key = value`` run configuration shared by the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import BadConfig
from .kernels import KernelConfig
from .prox import PROX_KINDS, ProximalRule

__all__ = ["RunConfig", "parse_config_text", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a CLI run.

    ``mu`` doubles as the smoothing weight alpha of the diffusion schemes.
    """

    seed: int = 0
    gamma: float = 1.2
    riesz_order: int = 3
    scales: int = 3
    alias_radius: int = 3
    mu: float = 0.05
    iters: int = 10
    beta: float = 1.0
    prox: str = "soft"
    filter: str = "low"
    tau1: int = 3
    tau2: int = 0
    sigma: float = 0.04
    mu_time: float = 0.03
    time_levels: int = 1
    epochs: int = 50
    batch: int = 16
    lr: float = 1e-3
    depth: int = 2
    base_channels: int = 4
    latent_dim: int = 16
    obs_sigma: float = 0.1
    runs: int = 50

    def __post_init__(self):
        if self.prox not in PROX_KINDS and self.prox not in ("soft_threshold", "hard_threshold"):
            raise BadConfig(f"unknown prox kind {self.prox!r}")
        for name in ("mu", "sigma", "mu_time", "lr", "beta"):
            if getattr(self, name) < 0:
                raise BadConfig(f"{name} must be >= 0")
        for name in ("iters", "epochs", "batch", "runs", "scales", "time_levels"):
            if getattr(self, name) < 0 or (name in ("batch", "runs", "scales") and getattr(self, name) < 1):
                raise BadConfig(f"{name} out of range")

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(
            gamma=self.gamma,
            riesz_order=self.riesz_order,
            scales=self.scales,
            alias_radius=self.alias_radius,
        )

    def prox_rule(self) -> ProximalRule:
        return ProximalRule(self.prox)

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, overrides: dict[str, str | int | float]) -> "RunConfig":
        """Return a copy with string or typed overrides coerced to field types."""
        types = {f.name: f.type for f in fields(self)}
        clean = {}
        for k, v in overrides.items():
            if v is None:
                continue
            key = k.replace("-", "_")
            if key not in types:
                raise BadConfig(f"unknown config key {k!r}")
            clean[key] = _coerce(key, types[key], v)
        return replace(self, **clean)


def _coerce(key, typ, value):
    typ = typ if isinstance(typ, str) else typ.__name__
    try:
        if typ == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if typ == "float":
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise BadConfig(f"{key}: cannot parse {value!r} as {typ}") from exc


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise BadConfig(f"line {n}: empty key")
        out[k] = v
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file (if any), then ``overrides``."""
    cfg = RunConfig()
    if path is not None:
        cfg = cfg.updated(parse_config_text(Path(path).read_text()))
    return cfg.updated(overrides or {})
