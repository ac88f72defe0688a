from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from ncse.utils import ArgumentError
from pathlib import Path
from typing import Any


@dataclass(kw_only=True, frozen=True)
class RunConfig:
    """Every tunable of a run. Defaults <- JSON config file <- flags."""

    seed: int = 0
    latent_dim: int = 64
    window_s: float = 2.0
    stride_s: float = 0.5
    kappa: float = 50.0
    p_center: float = 0.5
    epochs: int = 2000
    lr: float = 0.01
    batch_size: int = 64
    steps: int = 2000
    disc_lr: float = 1e-3
    w_gp: float = 5.0
    noise_sigma: float = 0.1
    interval_s: float = 0.5
    alpha_jp: float = 2.0
    alpha_v: float = 0.1
    threshold: float = 0.5
    samples_per_center: int = 1000
    manifest: str | None = None
    out: str | None = None

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type not in ("int", "float"):
                continue
            allowed = int if f.type == "int" else (int, float)
            if (
                isinstance(value, bool)
                or not isinstance(value, allowed)
                or not math.isfinite(value)
            ):
                msg = f"{f.name} must be a finite {f.type}! [{value!r}]"
                raise ArgumentError(msg)
        positive = (
            "latent_dim",
            "window_s",
            "stride_s",
            "epochs",
            "lr",
            "batch_size",
            "steps",
            "disc_lr",
            "interval_s",
            "alpha_jp",
            "alpha_v",
            "samples_per_center",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                msg = f"{name} must be positive! [{getattr(self, name)}]"
                raise ArgumentError(msg)
        for name in ("seed", "kappa", "w_gp", "noise_sigma"):
            if getattr(self, name) < 0:
                msg = f"{name} must be >= 0! [{getattr(self, name)}]"
                raise ArgumentError(msg)
        if not 0.0 <= self.p_center <= 1.0:
            msg = f"p_center must lie in [0, 1]! [{self.p_center}]"
            raise ArgumentError(msg)
        if not 0.0 <= self.threshold <= 1.0:
            msg = f"threshold must lie in [0, 1]! [{self.threshold}]"
            raise ArgumentError(msg)
        if self.latent_dim < 2:
            msg = f"latent_dim must be >= 2! [{self.latent_dim}]"
            raise ArgumentError(msg)

    @classmethod
    def from_dict(cls, data: Any) -> RunConfig:
        if not isinstance(data, dict):
            msg = "A run config must be a JSON object!"
            raise ArgumentError(msg)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            msg = f"Unknown config keys! {unknown}"
            raise ArgumentError(msg)
        return cls(**data)

    @classmethod
    def resolve(
        cls,
        config: str | None = None,
        **flags,
    ) -> RunConfig:
        """Load ``config`` if given, then apply every flag that is set."""
        base = cls()
        if config is not None:
            try:
                with Path(config).open("r", encoding="utf-8") as f:
                    data = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                msg = f"Unable to read config {config}: {e}"
                raise ArgumentError(msg) from e
            base = cls.from_dict(data)
        overrides = {k: v for k, v in flags.items() if v is not None}
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            msg = f"Unknown config keys! {unknown}"
            raise ArgumentError(msg)
        return replace(base, **overrides)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
