"""Motion clips, their JSON files, windowing and state featurization.

The vertical axis is z and yaw is the heading about it. Joint positions
are stored relative to the root, expressed in the root's heading frame,
so they are already invariant to translation and to vertical rotation.
"""

from __future__ import annotations

import json
import math
import numpy as np
from dataclasses import dataclass, replace
from ncse.utils import (
    ArgumentError,
    DomainError,
    DuplicateNameError,
    EmptyDatasetError,
    MalformedClipError,
    MalformedManifestError,
    Seed,
    Stream,
    as_rng,
    atomic_write_text,
)
from pathlib import Path
from typing import Any, TypedDict

# root offset, heading (sin, cos), root velocity
ROOT_FEATURES = 3 + 2 + 3
MIN_CLIP_DISTANCE = 0.05
MAX_SYNTH_ATTEMPTS = 1000


class ClipEntry(TypedDict):
    name: str
    path: str


class ManifestStructure(TypedDict):
    clips: list[ClipEntry]


class FrameStructure(TypedDict):
    root_pos: list[float]
    root_yaw: float
    joints: list[list[float]]


class ClipStructure(TypedDict):
    fps: float
    joint_names: list[str]
    frames: list[FrameStructure]


@dataclass(frozen=True)
class Frame:
    root_position: np.ndarray
    root_yaw: float
    joint_positions: np.ndarray
    root_velocity: np.ndarray


@dataclass(frozen=True)
class MotionClip:
    """One clip stored column-wise: frame t is row t of every array."""

    name: str
    fps: float
    root_positions: np.ndarray
    root_yaws: np.ndarray
    joint_positions: np.ndarray
    root_velocities: np.ndarray
    joint_names: tuple[str, ...] = ()

    @property
    def frame_count(self) -> int:
        return self.root_positions.shape[0]

    @property
    def joint_count(self) -> int:
        return self.joint_positions.shape[1]

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps

    def frame(self, index: int) -> Frame:
        return Frame(
            root_position=self.root_positions[index],
            root_yaw=float(self.root_yaws[index]),
            joint_positions=self.joint_positions[index],
            root_velocity=self.root_velocities[index],
        )

    def frames(self) -> list[Frame]:
        return [self.frame(i) for i in range(self.frame_count)]

    def to_dict(self) -> ClipStructure:
        names = list(self.joint_names) or [
            f"joint{j}" for j in range(self.joint_count)
        ]
        return {
            "fps": self.fps,
            "joint_names": names,
            "frames": [
                {
                    "root_pos": self.root_positions[t].tolist(),
                    "root_yaw": float(self.root_yaws[t]),
                    "joints": self.joint_positions[t].tolist(),
                }
                for t in range(self.frame_count)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=4)


@dataclass(frozen=True)
class MotionDataset:
    clips: tuple[MotionClip, ...]

    def __post_init__(self) -> None:
        clips = tuple(self.clips)
        if not clips:
            msg = "A dataset needs at least one clip!"
            raise EmptyDatasetError(msg)
        seen: set[str] = set()
        for clip in clips:
            if clip.name in seen:
                msg = f"Duplicate clip name! [{clip.name}]"
                raise DuplicateNameError(msg)
            seen.add(clip.name)
        object.__setattr__(self, "clips", clips)

    @property
    def n(self) -> int:
        return len(self.clips)

    @property
    def class_index(self) -> dict[str, int]:
        return {clip.name: i for i, clip in enumerate(self.clips)}

    @property
    def class_names(self) -> list[str]:
        return [clip.name for clip in self.clips]

    def index_of(self, name: str) -> int:
        index = self.class_index.get(name)
        if index is None:
            msg = f"Unknown clip name! [{name}]"
            raise ArgumentError(msg)
        return index

    def all_frames(self) -> list[Frame]:
        return [frame for clip in self.clips for frame in clip.frames()]


@dataclass(frozen=True)
class Window:
    clip_index: int
    start_frame: int
    span_frames: int

    def indices(self, frame_count: int) -> np.ndarray:
        """Frame indices of the window; they wrap for short clips."""
        return (self.start_frame + np.arange(self.span_frames)) % frame_count


def compute_root_velocity(clip: MotionClip) -> MotionClip:
    velocities = np.zeros_like(clip.root_positions)
    if clip.frame_count > 1:
        velocities[:-1] = np.diff(clip.root_positions, axis=0) * clip.fps
        velocities[-1] = velocities[-2]
    return replace(clip, root_velocities=velocities)


def _finite_array(
    value: Any,
    shape: tuple[int, ...],
    what: str,
) -> np.ndarray:
    try:
        array = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        msg = f"Invalid {what}!"
        raise MalformedClipError(msg) from e
    if array.shape != shape:
        msg = f"Invalid {what} shape! [{array.shape} != {shape}]"
        raise MalformedClipError(msg)
    if not np.all(np.isfinite(array)):
        msg = f"Non-finite values in {what}!"
        raise MalformedClipError(msg)
    return array


def clip_from_dict(name: str, data: Any) -> MotionClip:
    if not isinstance(data, dict):
        msg = f"Clip {name} must be a JSON object!"
        raise MalformedClipError(msg)
    fps = data.get("fps")
    if (
        not isinstance(fps, (int, float))
        or isinstance(fps, bool)
        or not math.isfinite(fps)
        or fps <= 0
    ):
        msg = f"Clip {name} needs a positive fps! [{fps}]"
        raise MalformedClipError(msg)
    frames = data.get("frames")
    if not isinstance(frames, list) or not frames:
        msg = f"Clip {name} has no frames!"
        raise MalformedClipError(msg)
    joint_names = data.get("joint_names", [])
    if not isinstance(joint_names, list) or not all(
        isinstance(j, str) for j in joint_names
    ):
        msg = f"Clip {name} has invalid joint names!"
        raise MalformedClipError(msg)

    first = frames[0].get("joints") if isinstance(frames[0], dict) else None
    if not isinstance(first, list) or not first:
        msg = f"Clip {name} frame 0 has no joints!"
        raise MalformedClipError(msg)
    joint_count = len(first)
    if joint_names and len(joint_names) != joint_count:
        msg = (
            f"Clip {name} names {len(joint_names)} joints, "
            f"has {joint_count}!"
        )
        raise MalformedClipError(msg)

    positions, yaws, joints = [], [], []
    for index, frame in enumerate(frames):
        if not isinstance(frame, dict):
            msg = f"Clip {name} frame {index} must be an object!"
            raise MalformedClipError(msg)
        if (
            not isinstance(frame.get("joints"), list)
            or len(frame["joints"]) != joint_count
        ):
            msg = f"Clip {name} frame {index} changes the joint count!"
            raise MalformedClipError(msg)
        positions.append(
            _finite_array(frame.get("root_pos"), (3,), "root_pos")
        )
        yaws.append(_finite_array(frame.get("root_yaw"), (), "root_yaw"))
        joints.append(
            _finite_array(frame["joints"], (joint_count, 3), "joints")
        )

    root_positions = np.asarray(positions)
    return compute_root_velocity(
        MotionClip(
            name=name,
            fps=float(fps),
            root_positions=root_positions,
            root_yaws=np.asarray(yaws),
            joint_positions=np.asarray(joints),
            root_velocities=np.zeros_like(root_positions),
            joint_names=tuple(joint_names),
        )
    )


def _read_json(path: Path, error: type[Exception]) -> Any:
    try:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
        msg = f"Unable to read {path}: {e}"
        raise error(msg) from e


def load_dataset(manifest_path: str | Path) -> MotionDataset:
    manifest_path = Path(manifest_path)
    manifest = _read_json(manifest_path, MalformedManifestError)
    entries = manifest.get("clips") if isinstance(manifest, dict) else None
    if not isinstance(entries, list) or not entries:
        msg = f"Manifest needs a non-empty 'clips' list! [{manifest_path}]"
        raise MalformedManifestError(msg)

    clips = []
    seen: set[str] = set()
    for entry in entries:
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("name"), str)
            or not isinstance(entry.get("path"), str)
        ):
            msg = f"Manifest entries need a name and a path! [{entry}]"
            raise MalformedManifestError(msg)
        if entry["name"] in seen:
            msg = f"Duplicate clip name! [{entry['name']}]"
            raise DuplicateNameError(msg)
        seen.add(entry["name"])
        clip_path = manifest_path.parent / entry["path"]
        data = _read_json(clip_path, MalformedClipError)
        clips.append(clip_from_dict(entry["name"], data))
    return MotionDataset(tuple(clips))


def write_dataset(dataset: MotionDataset, out_dir: str | Path) -> int:
    """Write a manifest and one clip file per clip; returns bytes written."""
    out_dir = Path(out_dir)
    written = 0
    entries: list[ClipEntry] = []
    for clip in dataset.clips:
        filename = f"{clip.name}.json"
        written += atomic_write_text(out_dir / filename, clip.to_json())
        entries.append({"name": clip.name, "path": filename})
    manifest: ManifestStructure = {"clips": entries}
    written += atomic_write_text(
        out_dir / "manifest.json", json.dumps(manifest, indent=4)
    )
    return written


def window_span(fps: float, window_s: float) -> int:
    return max(1, round(window_s * fps))


def window_clip(
    clip: MotionClip,
    window_s: float = 2.0,
    stride_s: float = 0.5,
    clip_index: int = 0,
) -> list[Window]:
    """Cut overlapping windows; short clips get one loop-padded window.

    When the stride leaves the tail of the clip uncovered, the last window
    is moved to end on the final frame (or appended, if moving it would
    open a gap).
    """
    if window_s <= 0 or stride_s <= 0:
        msg = "Window and stride lengths must be positive!"
        raise ArgumentError(msg)
    span = window_span(clip.fps, window_s)
    frame_count = clip.frame_count
    if frame_count < span:
        return [Window(clip_index, 0, span)]

    stride = max(1, round(stride_s * clip.fps))
    starts = [k * stride for k in range((frame_count - span) // stride + 1)]
    if starts[-1] + span < frame_count:
        tail = frame_count - span
        if len(starts) > 1 and starts[-2] + span >= tail:
            starts[-1] = tail
        else:
            starts.append(tail)
    return [Window(clip_index, start, span) for start in starts]


def dataset_windows(
    dataset: MotionDataset,
    window_s: float = 2.0,
    stride_s: float = 0.5,
) -> list[Window]:
    windows = []
    for index, clip in enumerate(dataset.clips):
        windows += window_clip(clip, window_s, stride_s, clip_index=index)
    return windows


def heading_rotation(yaw: float) -> np.ndarray:
    """Rotation by -yaw about z, applied to row vectors as ``v @ R``."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def canonical_features(
    clip: MotionClip,
    indices: np.ndarray,
    origin: int,
) -> np.ndarray:
    """Per-frame features relative to the root pose at frame ``origin``."""
    yaw0 = float(clip.root_yaws[origin])
    rotation = heading_rotation(yaw0)
    offsets = (clip.root_positions[indices] - clip.root_positions[origin]) @ (
        rotation
    )
    delta = clip.root_yaws[indices] - yaw0
    return np.concatenate(
        [
            offsets,
            np.sin(delta)[:, None],
            np.cos(delta)[:, None],
            clip.joint_positions[indices].reshape(len(indices), -1),
            clip.root_velocities[indices] @ rotation,
        ],
        axis=1,
    )


def feature_width(joint_count: int) -> int:
    return ROOT_FEATURES + 3 * joint_count


def featurize_window(dataset: MotionDataset, window: Window) -> np.ndarray:
    clip = dataset.clips[window.clip_index]
    indices = window.indices(clip.frame_count)
    return canonical_features(clip, indices, int(indices[0])).reshape(-1)


def featurize_windows(
    dataset: MotionDataset,
    windows: list[Window],
) -> np.ndarray:
    return np.asarray([featurize_window(dataset, w) for w in windows])


def state_dim(joint_count: int) -> int:
    """Frame feature width rounded up to even for positional encodings."""
    width = feature_width(joint_count)
    return width + width % 2


def metric_columns(joint_count: int) -> np.ndarray:
    """State columns in meters or m/s: no heading sin/cos, no padding."""
    mask = np.zeros(state_dim(joint_count), dtype=bool)
    mask[:3] = True
    mask[5 : feature_width(joint_count)] = True
    return mask


def transition_count(clip: MotionClip) -> int:
    return max(clip.frame_count - 1, 1)


def frame_states(clip: MotionClip, t: int) -> tuple[np.ndarray, np.ndarray]:
    """(s_t, s_{t+1}), both canonicalized to frame t and zero-padded."""
    indices = np.array([t, (t + 1) % clip.frame_count])
    states = canonical_features(clip, indices, t)
    width = state_dim(clip.joint_count)
    padded = np.zeros((2, width))
    padded[:, : states.shape[1]] = states
    return padded[0], padded[1]


@dataclass(frozen=True)
class GaitParameters:
    frequency: float
    amplitude: float
    heading_drift: float
    speed: float
    initial_yaw: float
    phases: np.ndarray
    axes: np.ndarray
    posture: np.ndarray


def _gait_parameters(
    joint_count: int,
    rng: np.random.Generator,
) -> GaitParameters:
    axes = rng.standard_normal((joint_count, 3))
    return GaitParameters(
        frequency=rng.uniform(0.5, 2.0),
        amplitude=rng.uniform(0.05, 0.3),
        heading_drift=rng.uniform(-0.5, 0.5),
        speed=rng.uniform(0.0, 1.5),
        initial_yaw=rng.uniform(-math.pi, math.pi),
        phases=rng.uniform(0.0, 2.0 * math.pi, joint_count),
        axes=axes / np.linalg.norm(axes, axis=1, keepdims=True),
        posture=rng.normal(0.0, 0.3, (joint_count, 3)),
    )


def _gait_clip(
    name: str,
    params: GaitParameters,
    frame_count: int,
    fps: float,
) -> MotionClip:
    time = np.arange(frame_count) / fps
    cycle = 2.0 * math.pi * params.frequency * time
    yaws = params.initial_yaw + params.heading_drift * time
    steps = np.stack(
        [
            params.speed * np.cos(yaws) / fps,
            params.speed * np.sin(yaws) / fps,
            np.zeros(frame_count),
        ],
        axis=1,
    )
    positions = np.cumsum(steps, axis=0) - steps[0]
    positions[:, 2] = 1.0 + 0.05 * np.sin(2.0 * cycle)
    swing = params.amplitude * np.sin(cycle[:, None] + params.phases)
    joints = params.posture + swing[:, :, None] * params.axes
    return compute_root_velocity(
        MotionClip(
            name=name,
            fps=fps,
            root_positions=positions,
            root_yaws=yaws,
            joint_positions=joints,
            root_velocities=np.zeros_like(positions),
            joint_names=tuple(f"joint{j}" for j in range(params.phases.size)),
        )
    )


def mean_joint_distance(a: MotionClip, b: MotionClip) -> float:
    frames = min(a.frame_count, b.frame_count)
    gaps = a.joint_positions[:frames] - b.joint_positions[:frames]
    return float(np.linalg.norm(gaps, axis=2).mean())


def synth_dataset(
    n_clips: int,
    joint_count: int = 4,
    fps: float = 30.0,
    duration_range: tuple[float, float] = (1.0, 6.0),
    seed: Seed = 0,
) -> MotionDataset:
    """Procedural gaits, pairwise at least 5 cm apart on average."""
    if n_clips < 1:
        msg = f"Need at least one clip! [{n_clips}]"
        raise ArgumentError(msg)
    if joint_count < 1:
        msg = f"Need at least one joint! [{joint_count}]"
        raise ArgumentError(msg)
    if fps <= 0:
        msg = f"fps must be positive! [{fps}]"
        raise ArgumentError(msg)
    low, high = duration_range
    if not 0 < low <= high:
        msg = f"Invalid duration range! [{duration_range}]"
        raise ArgumentError(msg)

    rng = as_rng(seed, Stream.SYNTH)
    clips: list[MotionClip] = []
    for index in range(n_clips):
        frame_count = max(1, round(rng.uniform(low, high) * fps))
        for _ in range(MAX_SYNTH_ATTEMPTS):
            clip = _gait_clip(
                f"Gait{index:02d}",
                _gait_parameters(joint_count, rng),
                frame_count,
                fps,
            )
            if all(
                mean_joint_distance(clip, other) > MIN_CLIP_DISTANCE
                for other in clips
            ):
                break
        else:
            msg = "Unable to generate distinct synthetic clips!"
            raise DomainError(msg)
        clips.append(clip)
    return MotionDataset(tuple(clips))
