from __future__ import annotations

import enum
import os
import tempfile
import numpy as np
from pathlib import Path

Seed = int | np.random.Generator


class NcseError(Exception):
    exit_code = 4


class ArgumentError(NcseError):
    exit_code = 2


class UnsupportedFormatError(NcseError):
    exit_code = 3


class MalformedManifestError(UnsupportedFormatError):
    pass


class MalformedClipError(UnsupportedFormatError):
    pass


class DuplicateNameError(UnsupportedFormatError):
    pass


class MalformedModelFileError(UnsupportedFormatError):
    pass


class DomainError(NcseError):
    exit_code = 4


class ZeroVectorError(DomainError):
    pass


class DimensionMismatchError(DomainError):
    pass


class DimensionTooSmallError(DomainError):
    pass


class DegenerateCovarianceError(DomainError):
    pass


class NumericOverflowError(DomainError):
    pass


class LabelOutOfRangeError(DomainError):
    pass


class StaleCacheError(DomainError):
    pass


class ShapeMismatchError(DomainError):
    pass


class OddDimensionError(DomainError):
    pass


class NegativeTimeError(DomainError):
    pass


class EmptyDatasetError(DomainError):
    pass


class EmptyClassError(DomainError):
    pass


class SingleClassDatasetError(DomainError):
    pass


class EmptyBatchError(DomainError):
    pass


class JointCountMismatchError(DomainError):
    pass


class EmptyGeneratedSetError(DomainError):
    pass


class UnsupportedActivationError(DomainError):
    pass


class Stream(enum.IntEnum):
    """Sub-stream ids mixed into the run seed.

    ``make_rng(seed, Stream.X)`` is ``SeedSequence(seed, spawn_key=(X,))``,
    so every consumer of the run seed is reproducible on its own.
    """

    SYNTH = 1
    INIT = 2
    SHUFFLE = 3
    UNIFORMITY = 4
    ETF = 5
    CENTERS = 6
    EXPANSION = 7
    MATCHED = 8
    MISMATCHED = 9
    POLICY = 10
    EVALUATION = 11
    PCA = 12


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    if seed < 0:
        msg = f"Seed must be a non-negative integer! [{seed}]"
        raise ArgumentError(msg)
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return np.random.default_rng(sequence)


def as_rng(seed: Seed, *stream: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed, *stream)


def check_dimensions(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        msg = f"Dimension mismatch! [{a.shape[-1]} != {b.shape[-1]}]"
        raise DimensionMismatchError(msg)


def _write_temp(target: Path, payload: bytes) -> Path:
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        dir=target.parent,
        prefix=f".{target.name}.",
        suffix=".tmp",
    )
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return Path(tmp_name)


def atomic_write_bytes(path: str | Path, payload: bytes) -> int:
    return atomic_write_all({Path(path): payload})


def atomic_write_text(path: str | Path, text: str) -> int:
    return atomic_write_bytes(path, text.encode())


def atomic_write_all(payloads: dict[Path, bytes]) -> int:
    """Write every file or none of them.

    All payloads go to temp files first; renames happen last. If any
    step fails, the temp files and the targets renamed so far are removed.
    """
    staged: list[tuple[Path, Path]] = []
    renamed: list[Path] = []
    try:
        for target, payload in payloads.items():
            staged.append((_write_temp(target, payload), target))
        for tmp, target in staged:
            tmp.replace(target)
            renamed.append(target)
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        for target in renamed:
            target.unlink(missing_ok=True)
        raise
    return sum(len(payload) for payload in payloads.values())
