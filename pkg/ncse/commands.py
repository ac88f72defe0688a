"""Bodies of the command-line scripts.

Each ``run_*`` function takes a resolved ``RunConfig`` plus the
command's own arguments, writes its outputs atomically and returns the
paths it wrote with their sizes. Scripts wrap the calls in
``exit_on_error`` to turn library errors into exit codes.
"""

from __future__ import annotations

import contextlib
import io
import json
import logging
import sys
import numpy as np
from collections.abc import Iterator
from ncse import (
    load_encoder,
    save_discriminator,
    save_encoder,
)
from ncse.adversarial import (
    ExpansionConfig,
    sample_skill_embeddings,
    train_discriminator,
)
from ncse.config import RunConfig
from ncse.encoder import (
    CenterSource,
    make_centers,
    train_encoder,
    uniformity_variance,
)
from ncse.metrics import (
    SimilarityConfig,
    coverage_report,
    dataset_coverage,
    motion_completeness,
    report_to_json,
    trajectory_csv,
)
from ncse.motion import (
    Frame,
    MotionDataset,
    clip_from_dict,
    load_dataset,
    synth_dataset,
    write_dataset,
)
from ncse.progress import DEFAULT_BASE, encoding_table
from ncse.sphere import pca_project
from ncse.utils import (
    ArgumentError,
    MalformedClipError,
    NcseError,
    SingleClassDatasetError,
    UnsupportedFormatError,
    atomic_write_text,
)
from pathlib import Path

__version__ = "1.0.0"

Written = list[tuple[Path, int]]


@contextlib.contextmanager
def exit_on_error() -> Iterator[None]:
    try:
        yield
    except NcseError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except OSError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        sys.exit(UnsupportedFormatError.exit_code)


def configure_logging(debug: bool) -> None:
    if debug:
        logging.basicConfig(level=logging.DEBUG)


def report(written: Written) -> None:
    for path, size in written:
        print(f"Wrote {size} bytes to {path}")


def _require(value: str | None, flag: str) -> str:
    if value is None:
        msg = f"--{flag.replace('_', '-')} is required!"
        raise ArgumentError(msg)
    return value


def _dataset(cfg: RunConfig) -> MotionDataset:
    return load_dataset(_require(cfg.manifest, "manifest"))


def _write(path: Path, text: str) -> tuple[Path, int]:
    return path, atomic_write_text(path, text)


def run_synth(
    cfg: RunConfig,
    clips: int,
    joints: int = 4,
    fps: float = 30.0,
    min_duration: float = 1.0,
    max_duration: float = 6.0,
) -> Written:
    out = Path(_require(cfg.out, "out"))
    dataset = synth_dataset(
        clips, joints, fps, (min_duration, max_duration), cfg.seed
    )
    return [(out / "manifest.json", write_dataset(dataset, out))]


def run_train_encoder(cfg: RunConfig) -> Written:
    dataset = _dataset(cfg)
    out = Path(_require(cfg.out, "out"))
    model, trace = train_encoder(
        dataset,
        p=cfg.latent_dim,
        epochs=cfg.epochs,
        lr=cfg.lr,
        seed=cfg.seed,
        window_s=cfg.window_s,
        stride_s=cfg.stride_s,
        batch_size=cfg.batch_size,
        samples_per_center=cfg.samples_per_center,
    )
    size = save_encoder(model, dataset.class_names, out)
    return [
        (out, size),
        _write(out / "encoder_trace.csv", trace.to_csv()),
    ]


def load_centers(
    cfg: RunConfig,
    source: str,
    model_dir: str | None,
    n: int | None = None,
) -> tuple[np.ndarray, MotionDataset | None]:
    """Centers from a trained encoder, or an ETF / random stand-in.

    Stand-in centers take their count from ``n`` or, failing that, from
    the dataset named by the manifest.
    """
    try:
        center_source = CenterSource(source)
    except ValueError as e:
        msg = f"Unknown center source! [{source}]"
        raise ArgumentError(msg) from e
    if center_source == CenterSource.ENCODER:
        model, _ = load_encoder(_require(model_dir, "model"))
        dataset = _dataset(cfg)
        centers = make_centers(
            center_source,
            dataset.n,
            model.latent_dim,
            model=model,
            dataset=dataset,
        )
        return centers, dataset
    dataset = _dataset(cfg) if cfg.manifest is not None else None
    if n is None:
        if dataset is None:
            msg = "Stand-in centers need --n or --manifest!"
            raise ArgumentError(msg)
        n = dataset.n
    return make_centers(center_source, n, cfg.latent_dim, cfg.seed), dataset


def run_uniformity(
    cfg: RunConfig,
    centers: str = CenterSource.ETF,
    n: int | None = None,
    model_dir: str | None = None,
) -> Written:
    out = Path(_require(cfg.out, "out"))
    means, _ = load_centers(cfg, centers, model_dir, n)
    result = uniformity_variance(means, cfg.samples_per_center, cfg.seed)
    data = {
        "file_version": __version__,
        "centers": str(centers),
        "n": int(means.shape[0]),
        "p": int(means.shape[1]),
        "samples_per_center": cfg.samples_per_center,
        "counts": result.counts.tolist(),
        "variance": result.variance,
    }
    return [_write(out, json.dumps(data, indent=4))]


def _csv_rows(header: list[str], rows: np.ndarray) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(repr(float(x)) for x in row) + "\n")
    return out.getvalue()


def run_expand(
    cfg: RunConfig,
    clip: str,
    count: int = 1000,
    centers: str = CenterSource.ENCODER,
    model_dir: str | None = None,
) -> Written:
    out = Path(_require(cfg.out, "out"))
    if count < 1:
        msg = f"--count must be >= 1! [{count}]"
        raise ArgumentError(msg)
    if cfg.manifest is None:
        _require(None, "manifest")
    means, dataset = load_centers(cfg, centers, model_dir)
    center = means[dataset.index_of(clip)][None, :]
    expansion = ExpansionConfig(kappa=cfg.kappa, p_center=cfg.p_center)
    samples = sample_skill_embeddings(center, expansion, count, cfg.seed)
    header = [f"z{i}" for i in range(means.shape[1])]
    return [_write(out, _csv_rows(header, samples.embeddings))]


def run_train_disc(
    cfg: RunConfig,
    centers: str = CenterSource.ENCODER,
    model_dir: str | None = None,
) -> Written:
    dataset = _dataset(cfg)
    if dataset.n < 2:
        msg = "Discriminator training needs at least two clips!"
        raise SingleClassDatasetError(msg)
    out = Path(_require(cfg.out, "out"))
    means, _ = load_centers(cfg, centers, model_dir)
    model, trace = train_discriminator(
        dataset,
        means,
        ExpansionConfig(kappa=cfg.kappa, p_center=cfg.p_center),
        steps=cfg.steps,
        lr=cfg.disc_lr,
        w_gp=cfg.w_gp,
        seed=cfg.seed,
        batch_size=cfg.batch_size,
        noise_sigma=cfg.noise_sigma,
        interval_s=cfg.interval_s,
    )
    size = save_discriminator(model, cfg.w_gp, out)
    return [
        (out, size),
        _write(out / "disc_trace.csv", trace.to_csv()),
    ]


def load_generated(path: str) -> list[Frame]:
    """Frames of a clip file, or of every clip a manifest lists."""
    try:
        with Path(path).open("r", encoding="utf-8") as f:
            data = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        msg = f"Unable to parse generated frames {path}: {e}"
        raise MalformedClipError(msg) from e
    if isinstance(data, dict) and "clips" in data:
        return load_dataset(path).all_frames()
    return clip_from_dict(Path(path).stem, data).frames()


def run_score(
    cfg: RunConfig,
    generated: str,
    histogram: str | None = None,
    clip: str | None = None,
    trajectories: str | None = None,
) -> Written:
    dataset = _dataset(cfg)
    out = Path(_require(cfg.out, "out"))
    frames = load_generated(generated)
    similarity = SimilarityConfig(alpha_jp=cfg.alpha_jp, alpha_v=cfg.alpha_v)
    coverage = dataset_coverage(dataset, frames, similarity, cfg.threshold)
    completeness = None
    if clip is not None:
        reference = dataset.clips[dataset.index_of(clip)]
        completeness = {
            clip: motion_completeness(reference, frames, similarity)
        }
    data = coverage_report(coverage, cfg.threshold, completeness)
    written = [_write(out, report_to_json(data))]
    if histogram is not None:
        written.append(_write(Path(histogram), coverage.histogram.to_csv()))
    if trajectories is not None:
        written.append(_write(Path(trajectories), trajectory_csv(dataset)))
    return written


def run_pca(
    cfg: RunConfig,
    samples: int = 200,
    k: int = 2,
    centers: str = CenterSource.ENCODER,
    model_dir: str | None = None,
    n: int | None = None,
) -> Written:
    """Project class means and expansion samples onto their top-k PCs."""
    out = Path(_require(cfg.out, "out"))
    if samples < 0:
        msg = f"--samples must be >= 0! [{samples}]"
        raise ArgumentError(msg)
    means, _ = load_centers(cfg, centers, model_dir, n)
    labels = list(range(means.shape[0]))
    kinds = ["center"] * means.shape[0]
    points = means
    if samples:
        expansion = ExpansionConfig(kappa=cfg.kappa, p_center=cfg.p_center)
        drawn = sample_skill_embeddings(means, expansion, samples, cfg.seed)
        points = np.vstack([means, drawn.embeddings])
        labels += drawn.clusters.tolist()
        kinds += ["sample"] * samples
    projection = pca_project(points, k, cfg.seed)

    table = io.StringIO()
    table.write(",".join(["kind", "cluster", *(f"pc{i}" for i in range(k))]))
    table.write("\n")
    for kind, label, row in zip(
        kinds, labels, projection.projected, strict=True
    ):
        values = ",".join(repr(float(x)) for x in row)
        table.write(f"{kind},{label},{values}\n")

    gram = projection.basis @ projection.basis.T
    sidecar = {
        "file_version": __version__,
        "k": k,
        "points": int(points.shape[0]),
        "explained_variance": projection.explained_variance.tolist(),
        "orthonormality_error": float(np.abs(gram - np.eye(k)).max()),
    }
    return [
        _write(out, table.getvalue()),
        _write(out.with_suffix(".json"), json.dumps(sidecar, indent=4)),
    ]


def run_pe_dump(
    cfg: RunConfig,
    stages: int = 64,
    dim: int = 32,
    base: float = DEFAULT_BASE,
) -> Written:
    out = Path(_require(cfg.out, "out"))
    if dim < 2 or dim % 2:
        msg = f"--dim must be even and >= 2! [{dim}]"
        raise ArgumentError(msg)
    table = encoding_table(stages, dim, base)
    header = ["k", *(f"c{i}" for i in range(dim))]
    text = io.StringIO()
    text.write(",".join(header) + "\n")
    for k, row in enumerate(table):
        text.write(f"{k}," + ",".join(repr(float(x)) for x in row) + "\n")
    return [_write(out, text.getvalue())]
