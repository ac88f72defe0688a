"""Reconstruction score, dataset coverage and motion completeness.

Two frames are compared through Gaussian kernels on joint positions and
on root velocity; a reference frame's reconstruction score is its best
equally weighted kernel sum over a set of generated frames.
"""

from __future__ import annotations

import io
import json
import numpy as np
from dataclasses import dataclass
from ncse.motion import Frame, MotionClip, MotionDataset
from ncse.utils import (
    ArgumentError,
    EmptyGeneratedSetError,
    JointCountMismatchError,
)
from typing import NamedTuple, NotRequired, TypedDict

__version__ = "1.0.0"

HISTOGRAM_BINS = 20
COVERAGE_THRESHOLD = 0.5
# reference rows scored per block
CHUNK = 256


@dataclass(frozen=True)
class SimilarityConfig:
    alpha_jp: float = 2.0
    alpha_v: float = 0.1

    def __post_init__(self) -> None:
        if not (self.alpha_jp > 0 and self.alpha_v > 0):
            msg = "Kernel sharpness values must be positive!"
            raise ArgumentError(msg)


class FrameArrays(NamedTuple):
    joints: np.ndarray
    velocities: np.ndarray

    @property
    def size(self) -> int:
        return self.joints.shape[0]


def frame_arrays(frames: list[Frame]) -> FrameArrays:
    if not frames:
        return FrameArrays(np.zeros((0, 0)), np.zeros((0, 3)))
    joints = {f.joint_positions.shape for f in frames}
    if len(joints) > 1:
        msg = f"Frames disagree on joint counts! {sorted(joints)}"
        raise JointCountMismatchError(msg)
    return FrameArrays(
        joints=np.asarray([f.joint_positions.reshape(-1) for f in frames]),
        velocities=np.asarray([f.root_velocity for f in frames]),
    )


def clip_arrays(clip: MotionClip) -> FrameArrays:
    return FrameArrays(
        joints=clip.joint_positions.reshape(clip.frame_count, -1),
        velocities=clip.root_velocities,
    )


def frame_similarity(
    f_ref: Frame,
    f_gen: Frame,
    cfg: SimilarityConfig,
) -> tuple[float, float]:
    if f_ref.joint_positions.shape != f_gen.joint_positions.shape:
        msg = (
            f"Joint counts differ! [{f_ref.joint_positions.shape[0]} != "
            f"{f_gen.joint_positions.shape[0]}]"
        )
        raise JointCountMismatchError(msg)
    jp = np.sum((f_ref.joint_positions - f_gen.joint_positions) ** 2)
    v = np.sum((f_ref.root_velocity - f_gen.root_velocity) ** 2)
    return float(np.exp(-cfg.alpha_jp * jp)), float(np.exp(-cfg.alpha_v * v))


def _check_generated(ref: FrameArrays, generated: FrameArrays) -> None:
    if generated.size == 0:
        msg = "The generated frame set is empty!"
        raise EmptyGeneratedSetError(msg)
    if ref.joints.shape[1] != generated.joints.shape[1]:
        msg = (
            "Reference and generated frames disagree on joint counts! "
            f"[{ref.joints.shape[1] // 3} != {generated.joints.shape[1] // 3}]"
        )
        raise JointCountMismatchError(msg)


def similarity_block(
    ref: FrameArrays,
    generated: FrameArrays,
    cfg: SimilarityConfig,
) -> np.ndarray:
    """Kernel sums 0.5 r_jp + 0.5 r_v for every (ref, generated) pair."""
    jp = np.sum(
        (ref.joints[:, None, :] - generated.joints[None, :, :]) ** 2, axis=2
    )
    v = np.sum(
        (ref.velocities[:, None, :] - generated.velocities[None, :, :]) ** 2,
        axis=2,
    )
    return 0.5 * np.exp(-cfg.alpha_jp * jp) + 0.5 * np.exp(-cfg.alpha_v * v)


def _chunks(arrays: FrameArrays) -> list[FrameArrays]:
    return [
        FrameArrays(
            arrays.joints[i : i + CHUNK], arrays.velocities[i : i + CHUNK]
        )
        for i in range(0, arrays.size, CHUNK)
    ]


def best_scores(
    ref: FrameArrays,
    generated: FrameArrays,
    cfg: SimilarityConfig,
) -> np.ndarray:
    _check_generated(ref, generated)
    return np.concatenate(
        [
            similarity_block(chunk, generated, cfg).max(axis=1)
            for chunk in _chunks(ref)
        ]
    )


def reconstruction_score(
    f_ref: Frame,
    generated: list[Frame],
    cfg: SimilarityConfig,
) -> float:
    """Best kernel sum of one reference frame over the generated set."""
    if not generated:
        msg = "The generated frame set is empty!"
        raise EmptyGeneratedSetError(msg)
    return float(
        best_scores(frame_arrays([f_ref]), frame_arrays(generated), cfg)[0]
    )


@dataclass(frozen=True)
class ScoreHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @classmethod
    def of(
        cls,
        scores: np.ndarray,
        bins: int = HISTOGRAM_BINS,
    ) -> ScoreHistogram:
        counts, edges = np.histogram(scores, bins=bins, range=(0.0, 1.0))
        return cls(bin_edges=edges, counts=counts)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("bin_lo,bin_hi,count\n")
        for lo, hi, count in zip(
            self.bin_edges[:-1], self.bin_edges[1:], self.counts, strict=True
        ):
            out.write(f"{float(lo)!r},{float(hi)!r},{int(count)}\n")
        return out.getvalue()


class Coverage(NamedTuple):
    scores: np.ndarray
    covered_fraction: float
    histogram: ScoreHistogram
    per_clip: dict[str, float]


def dataset_coverage(
    dataset: MotionDataset,
    generated: list[Frame],
    cfg: SimilarityConfig,
    threshold: float = COVERAGE_THRESHOLD,
) -> Coverage:
    """Score every reference frame; covered means strictly above threshold."""
    gen = frame_arrays(generated)
    per_clip_scores = [
        best_scores(clip_arrays(clip), gen, cfg) for clip in dataset.clips
    ]
    scores = np.concatenate(per_clip_scores)
    return Coverage(
        scores=scores,
        covered_fraction=float(np.mean(scores > threshold)),
        histogram=ScoreHistogram.of(scores),
        per_clip={
            clip.name: float(np.mean(s > threshold))
            for clip, s in zip(dataset.clips, per_clip_scores, strict=True)
        },
    )


def motion_completeness(
    ref: MotionClip,
    generated: list[Frame],
    cfg: SimilarityConfig,
) -> float:
    """Fraction of reference frames that are some generated frame's best."""
    ref_arrays = clip_arrays(ref)
    gen = frame_arrays(generated)
    _check_generated(ref_arrays, gen)
    covered = np.zeros(ref.frame_count, dtype=bool)
    for chunk in _chunks(gen):
        nearest = np.argmax(similarity_block(chunk, ref_arrays, cfg), axis=1)
        covered[nearest] = True
    return float(covered.sum() / ref.frame_count)


def root_trajectory_rows(
    name: str,
    frames: list[Frame],
) -> list[tuple[str, int, float, float, float]]:
    return [
        (name, index, *(float(x) for x in frame.root_position))
        for index, frame in enumerate(frames)
    ]


def trajectory_csv(dataset: MotionDataset) -> str:
    out = io.StringIO()
    out.write("clip,frame,x,y,z\n")
    for clip in dataset.clips:
        for name, index, x, y, z in root_trajectory_rows(
            clip.name, clip.frames()
        ):
            out.write(f"{name},{index},{x!r},{y!r},{z!r}\n")
    return out.getvalue()


class CoverageReport(TypedDict):
    file_version: str
    covered_fraction: float
    threshold: float
    per_clip: dict[str, float]
    completeness: NotRequired[dict[str, float]]


def coverage_report(
    coverage: Coverage,
    threshold: float,
    completeness: dict[str, float] | None = None,
) -> CoverageReport:
    report: CoverageReport = {
        "file_version": __version__,
        "covered_fraction": coverage.covered_fraction,
        "threshold": threshold,
        "per_clip": coverage.per_clip,
    }
    if completeness is not None:
        report["completeness"] = completeness
    return report


def report_to_json(report: CoverageReport) -> str:
    return json.dumps(report, indent=4)
