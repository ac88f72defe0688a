from __future__ import annotations

import math
import numpy as np
from dataclasses import dataclass
from ncse.utils import (
    ArgumentError,
    DimensionMismatchError,
    NegativeTimeError,
    OddDimensionError,
)

DEFAULT_INTERVAL_S = 0.5
DEFAULT_BASE = 10_000.0


@dataclass(frozen=True)
class ProgressConfig:
    interval_s: float = DEFAULT_INTERVAL_S
    state_dim: int = 2
    pe_base: float = DEFAULT_BASE

    def __post_init__(self) -> None:
        if self.interval_s <= 0:
            msg = f"Stage interval must be positive! [{self.interval_s}]"
            raise ArgumentError(msg)
        _check_even(self.state_dim)


def _check_even(d: int) -> None:
    if d < 2 or d % 2:
        msg = f"Encoding dimension must be even and >= 2! [{d}]"
        raise OddDimensionError(msg)


def stage_index(t: float, interval_s: float = DEFAULT_INTERVAL_S) -> int:
    if t < 0:
        msg = f"Time must be non-negative! [{t}]"
        raise NegativeTimeError(msg)
    return math.floor(t / interval_s)


def positional_encoding(
    k: int,
    d: int,
    base: float = DEFAULT_BASE,
) -> np.ndarray:
    """Interleaved sin/cos of ``k / base**(2i/d)``."""
    _check_even(d)
    if k < 0:
        msg = f"Stage index must be non-negative! [{k}]"
        raise NegativeTimeError(msg)
    angles = k / base ** (np.arange(0, d, 2) / d)
    encoding = np.empty(d)
    encoding[0::2] = np.sin(angles)
    encoding[1::2] = np.cos(angles)
    return encoding


def progress_offset(
    t: float,
    d: int,
    clip_duration: float,
    interval_s: float = DEFAULT_INTERVAL_S,
    base: float = DEFAULT_BASE,
) -> np.ndarray:
    """What progress_embed adds to a d-dim state at time t."""
    stage = stage_index(t, interval_s)
    if t >= clip_duration:
        return np.zeros(d)
    return positional_encoding(stage, d, base)


def progress_embed(
    state: np.ndarray,
    t: float,
    clip_duration: float,
    config: ProgressConfig,
) -> np.ndarray:
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (config.state_dim,):
        msg = (
            f"State has dimension {state.shape}, "
            f"expected {config.state_dim}!"
        )
        raise DimensionMismatchError(msg)
    return state + progress_offset(
        t,
        config.state_dim,
        clip_duration,
        config.interval_s,
        config.pe_base,
    )


def encoding_table(
    stages: int,
    d: int,
    base: float = DEFAULT_BASE,
) -> np.ndarray:
    if stages < 1:
        msg = f"Need at least one stage! [{stages}]"
        raise ArgumentError(msg)
    return np.asarray([positional_encoding(k, d, base) for k in range(stages)])
