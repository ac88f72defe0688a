from __future__ import annotations

import json
import numpy as np
import pytest
from dataclasses import replace
from ncse.motion import (
    MotionClip,
    MotionDataset,
    Window,
    compute_root_velocity,
    featurize_window,
    frame_states,
    heading_rotation,
    load_dataset,
    mean_joint_distance,
    state_dim,
    synth_dataset,
    window_clip,
    write_dataset,
)
from ncse.utils import (
    ArgumentError,
    DuplicateNameError,
    EmptyDatasetError,
    MalformedClipError,
    MalformedManifestError,
)
from pathlib import Path


def clip_dict(frames: int, joints: int = 2, step: float = 0.0) -> dict:
    return {
        "fps": 30,
        "joint_names": [f"j{i}" for i in range(joints)],
        "frames": [
            {
                "root_pos": [step * t, 0.0, 1.0],
                "root_yaw": 0.0,
                "joints": [[0.1 * j, 0.0, 0.2] for j in range(joints)],
            }
            for t in range(frames)
        ],
    }


def write_manifest(tmp_path: Path, clips: dict[str, dict]) -> Path:
    entries = []
    for index, (name, data) in enumerate(clips.items()):
        filename = f"clip{index}.json"
        (tmp_path / filename).write_text(json.dumps(data))
        entries.append({"name": name, "path": filename})
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"clips": entries}))
    return manifest


def simple_clip(frame_count: int, fps: float = 30.0) -> MotionClip:
    positions = np.zeros((frame_count, 3))
    return MotionClip(
        name="c",
        fps=fps,
        root_positions=positions,
        root_yaws=np.zeros(frame_count),
        joint_positions=np.zeros((frame_count, 4, 3)),
        root_velocities=positions.copy(),
    )


def test_load_dataset_keeps_manifest_order(tmp_path: Path) -> None:
    manifest = write_manifest(
        tmp_path, {"Walk": clip_dict(10), "Jump": clip_dict(12)}
    )
    dataset = load_dataset(manifest)
    assert dataset.n == 2
    assert dataset.class_index == {"Walk": 0, "Jump": 1}
    assert dataset.clips[1].frame_count == 12


def test_load_dataset_rejects_varying_joints(tmp_path: Path) -> None:
    data = clip_dict(5)
    data["frames"][3]["joints"].append([0.0, 0.0, 0.0])
    with pytest.raises(MalformedClipError):
        load_dataset(write_manifest(tmp_path, {"Walk": data}))


def test_load_dataset_rejects_non_finite(tmp_path: Path) -> None:
    data = clip_dict(5)
    data["frames"][2]["root_pos"][0] = float("nan")
    with pytest.raises(MalformedClipError):
        load_dataset(write_manifest(tmp_path, {"Walk": data}))


def test_load_dataset_rejects_duplicates(tmp_path: Path) -> None:
    (tmp_path / "a.json").write_text(json.dumps(clip_dict(4)))
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps(
            {
                "clips": [
                    {"name": "RunForward", "path": "a.json"},
                    {"name": "RunForward", "path": "a.json"},
                ]
            }
        )
    )
    with pytest.raises(DuplicateNameError):
        load_dataset(manifest)


def test_load_dataset_bad_manifest(tmp_path: Path) -> None:
    with pytest.raises(MalformedManifestError):
        load_dataset(tmp_path / "missing.json")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"clips": []}))
    with pytest.raises(MalformedManifestError):
        load_dataset(manifest)
    manifest.write_text(
        json.dumps({"clips": [{"name": "A", "path": "none.json"}]})
    )
    with pytest.raises(MalformedClipError):
        load_dataset(manifest)


def test_dataset_invariants() -> None:
    with pytest.raises(EmptyDatasetError):
        MotionDataset(())
    dataset = MotionDataset((simple_clip(5),))
    with pytest.raises(ArgumentError):
        dataset.index_of("missing")


def test_root_velocity(tmp_path: Path) -> None:
    manifest = write_manifest(
        tmp_path,
        {
            "Still": clip_dict(6),
            "Move": clip_dict(6, step=0.1),
            "One": clip_dict(1, step=0.1),
        },
    )
    dataset = load_dataset(manifest)
    assert not np.any(dataset.clips[0].root_velocities)
    assert np.allclose(dataset.clips[1].root_velocities, [3.0, 0.0, 0.0])
    assert not np.any(dataset.clips[2].root_velocities)


def test_windows_of_a_long_clip() -> None:
    clip = simple_clip(123)
    windows = window_clip(clip, 2.0, 0.5)
    assert len(windows) == 5
    assert all(w.span_frames == 60 for w in windows)
    covered = np.unique(
        np.concatenate([w.indices(clip.frame_count) for w in windows])
    )
    assert np.array_equal(covered, np.arange(123))


def test_windows_cover_every_frame() -> None:
    for frame_count in range(60, 200, 7):
        clip = simple_clip(frame_count)
        windows = window_clip(clip, 2.0, 0.5)
        covered = np.unique(
            np.concatenate([w.indices(frame_count) for w in windows])
        )
        assert np.array_equal(covered, np.arange(frame_count))


def test_window_of_a_short_clip_loops() -> None:
    windows = window_clip(simple_clip(45), 2.0, 0.5)
    assert len(windows) == 1
    indices = windows[0].indices(45)
    assert len(indices) == 60
    assert np.array_equal(indices, np.arange(60) % 45)


def test_window_of_an_exact_clip() -> None:
    assert window_clip(simple_clip(60), 2.0, 0.5) == [Window(0, 0, 60)]


def rotate_clip(clip: MotionClip, angle: float) -> MotionClip:
    rotated = replace(
        clip,
        root_positions=clip.root_positions @ heading_rotation(-angle),
        root_yaws=clip.root_yaws + angle,
    )
    return compute_root_velocity(rotated)


def test_features_are_translation_invariant() -> None:
    dataset = synth_dataset(2, seed=1)
    clip = dataset.clips[0]
    moved = replace(clip, root_positions=clip.root_positions + [5, 0, 2])
    window = Window(0, 5, 30)
    a = featurize_window(dataset, window)
    b = featurize_window(MotionDataset((moved,)), window)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_features_are_heading_invariant() -> None:
    dataset = synth_dataset(2, seed=1)
    window = Window(0, 0, 60)
    expected = featurize_window(dataset, window)
    for angle in (0.3, 2.0, -2.9):
        turned = MotionDataset((rotate_clip(dataset.clips[0], angle),))
        actual = featurize_window(turned, window)
        assert np.allclose(actual, expected, rtol=0, atol=1e-9)


def test_feature_shape_and_values() -> None:
    dataset = synth_dataset(3, joint_count=4, seed=2)
    for index, clip in enumerate(dataset.clips):
        for window in window_clip(clip, clip_index=index):
            features = featurize_window(dataset, window)
            assert features.shape == (1200,)
            assert np.all(np.isfinite(features))


def test_frame_states() -> None:
    dataset = synth_dataset(1, joint_count=3, seed=4)
    clip = dataset.clips[0]
    assert state_dim(3) == 18
    s_t, s_next = frame_states(clip, 5)
    assert s_t.shape == s_next.shape == (18,)
    assert np.allclose(s_t[:5], [0, 0, 0, 0, 1])
    assert s_t[-1] == 0.0


def test_synth_dataset_is_deterministic() -> None:
    a = synth_dataset(8, seed=3)
    b = synth_dataset(8, seed=3)
    for x, y in zip(a.clips, b.clips, strict=True):
        assert x.name == y.name
        assert np.array_equal(x.root_positions, y.root_positions)
        assert np.array_equal(x.joint_positions, y.joint_positions)


def test_synth_dataset_properties() -> None:
    dataset = synth_dataset(8, fps=30.0, duration_range=(1.0, 6.0), seed=3)
    assert all(30 <= clip.frame_count <= 180 for clip in dataset.clips)
    for i, a in enumerate(dataset.clips):
        for b in dataset.clips[i + 1 :]:
            assert mean_joint_distance(a, b) > 0.05
    with pytest.raises(ArgumentError):
        synth_dataset(0)


def test_dataset_files_round_trip(tmp_path: Path) -> None:
    dataset = synth_dataset(3, seed=5)
    write_dataset(dataset, tmp_path)
    loaded = load_dataset(tmp_path / "manifest.json")
    assert loaded.class_names == dataset.class_names
    for x, y in zip(dataset.clips, loaded.clips, strict=True):
        assert np.array_equal(x.root_positions, y.root_positions)
        assert np.array_equal(x.joint_positions, y.joint_positions)
        assert np.allclose(x.root_velocities, y.root_velocities)
