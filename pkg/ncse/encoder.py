"""Classification encoder whose penultimate features live on the sphere.

The trunk ends in an l2-normalize layer, so its outputs are latent unit
vectors; a linear head turns them into class logits. Training with
cross-entropy drives the features of each clip toward their class mean
and the means toward a simplex ETF.
"""

from __future__ import annotations

import enum
import io
import logging
import numpy as np
from dataclasses import dataclass, field
from ncse.motion import (
    MotionDataset,
    dataset_windows,
    featurize_windows,
    window_span,
)
from ncse.net import (
    Activation,
    AdamState,
    DenseNet,
    adam_step,
    backward,
    build_net,
    forward,
    softmax_cross_entropy,
)
from ncse.sphere import (
    make_simplex_etf,
    normalize,
    sample_uniform_sphere,
)
from ncse.utils import (
    ArgumentError,
    DimensionMismatchError,
    EmptyClassError,
    Seed,
    SingleClassDatasetError,
    Stream,
    as_rng,
    check_dimensions,
)
from typing import NamedTuple

logger = logging.getLogger(__name__)

HIDDEN_SIZES = (256, 128)
BATCH_SIZE = 64
SAMPLES_PER_CENTER = 1000


@dataclass(frozen=True)
class EncoderModel:
    trunk: DenseNet
    head: DenseNet
    window_s: float = 2.0
    stride_s: float = 0.5

    def __post_init__(self) -> None:
        if self.trunk.layers[-1].activation != Activation.L2_NORMALIZE:
            msg = "The encoder trunk must end in an l2_normalize layer!"
            raise ArgumentError(msg)
        if self.head.input_dim != self.trunk.output_dim:
            msg = (
                f"Head input {self.head.input_dim} != "
                f"latent dimension {self.trunk.output_dim}!"
            )
            raise DimensionMismatchError(msg)

    @property
    def latent_dim(self) -> int:
        return self.trunk.output_dim

    @property
    def n_classes(self) -> int:
        return self.head.output_dim

    @property
    def net(self) -> DenseNet:
        return self.trunk + self.head

    @classmethod
    def from_net(
        cls,
        net: DenseNet,
        window_s: float = 2.0,
        stride_s: float = 0.5,
    ) -> EncoderModel:
        """Split a stored trunk+head network after its l2 layer."""
        split = next(
            (
                i + 1
                for i, layer in enumerate(net.layers)
                if layer.activation == Activation.L2_NORMALIZE
            ),
            None,
        )
        if split is None or split == len(net.layers):
            msg = "Encoder network needs an l2_normalize layer before a head!"
            raise ArgumentError(msg)
        return cls(
            trunk=DenseNet(net.layers[:split]),
            head=DenseNet(net.layers[split:]),
            window_s=window_s,
            stride_s=stride_s,
        )

    def embed(self, features: np.ndarray) -> np.ndarray:
        return forward(self.trunk, features)[0]


def build_encoder(
    input_dim: int,
    p: int,
    n: int,
    seed: Seed = 0,
    window_s: float = 2.0,
    stride_s: float = 0.5,
) -> EncoderModel:
    """input -> 256 relu -> 128 relu -> p l2_normalize, head p -> n."""
    rng = as_rng(seed, Stream.INIT)
    trunk = build_net(
        (input_dim, *HIDDEN_SIZES, p),
        (Activation.RELU, Activation.RELU, Activation.L2_NORMALIZE),
        rng,
    )
    head = build_net((p, n), (Activation.IDENTITY,), rng)
    return EncoderModel(trunk, head, window_s=window_s, stride_s=stride_s)


def window_features(
    dataset: MotionDataset,
    window_s: float = 2.0,
    stride_s: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked window features and their clip labels."""
    spans = {window_span(clip.fps, window_s) for clip in dataset.clips}
    joints = {clip.joint_count for clip in dataset.clips}
    if len(spans) > 1 or len(joints) > 1:
        msg = "All clips need the same frame rate and joint count!"
        raise DimensionMismatchError(msg)
    windows = dataset_windows(dataset, window_s, stride_s)
    labels = np.array([w.clip_index for w in windows])
    return featurize_windows(dataset, windows), labels


class ClassMeans(NamedTuple):
    means: np.ndarray
    counts: np.ndarray


def class_means_of(
    latents: np.ndarray,
    labels: np.ndarray,
    n: int,
) -> ClassMeans:
    counts = np.bincount(labels, minlength=n)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        msg = f"Classes without windows! {missing}"
        raise EmptyClassError(msg)
    sums = np.zeros((n, latents.shape[1]))
    np.add.at(sums, labels, latents)
    return ClassMeans(means=normalize(sums / counts[:, None]), counts=counts)


def compute_class_means(
    model: EncoderModel,
    dataset: MotionDataset,
) -> ClassMeans:
    features, labels = window_features(
        dataset, model.window_s, model.stride_s
    )
    return class_means_of(model.embed(features), labels, dataset.n)


def _nc1(latents: np.ndarray, labels: np.ndarray, means: np.ndarray) -> float:
    squared = np.sum((latents - means[labels]) ** 2, axis=1)
    per_class = [
        squared[labels == c].mean() for c in range(means.shape[0])
    ]
    return float(np.mean(per_class))


def nc1_variability(
    model: EncoderModel,
    dataset: MotionDataset,
    means: ClassMeans,
) -> float:
    """Mean over classes of the mean squared distance to the class mean."""
    features, labels = window_features(
        dataset, model.window_s, model.stride_s
    )
    return _nc1(model.embed(features), labels, means.means)


class Nc2Stats(NamedTuple):
    mean_cosine: float
    cosine_std: float
    etf_gap: float
    feasible: bool


def nc2_etf_deviation(means: np.ndarray) -> Nc2Stats:
    n, p = means.shape
    if n < 2:
        msg = "NC2 statistics need at least two class means!"
        raise SingleClassDatasetError(msg)
    cosines = (means @ means.T)[np.triu_indices(n, k=1)]
    mean_cosine = float(cosines.mean())
    return Nc2Stats(
        mean_cosine=mean_cosine,
        cosine_std=float(cosines.std()),
        etf_gap=abs(mean_cosine + 1.0 / (n - 1)),
        feasible=p >= n - 1,
    )


def nearest_centers(points: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Index of the closest mean per row; argmax keeps the lowest on ties."""
    points = np.asarray(points, dtype=np.float64)
    check_dimensions(points, means)
    return np.argmax(np.atleast_2d(points) @ means.T, axis=1)


def nearest_center(z: np.ndarray, means: np.ndarray) -> int:
    return int(nearest_centers(z, means)[0])


class Uniformity(NamedTuple):
    counts: np.ndarray
    variance: float


def assignment_variance(
    points: np.ndarray,
    means: np.ndarray,
) -> Uniformity:
    counts = np.bincount(nearest_centers(points, means), minlength=len(means))
    return Uniformity(counts=counts, variance=float(counts.var()))


def uniformity_variance(
    means: np.ndarray,
    samples_per_center: int = SAMPLES_PER_CENTER,
    seed: Seed = 0,
) -> Uniformity:
    """Spread of uniform sphere samples over their nearest means."""
    n, p = means.shape
    if n < 2:
        msg = "Uniformity needs at least two centers!"
        raise SingleClassDatasetError(msg)
    points = sample_uniform_sphere(p, samples_per_center * n, seed)
    return assignment_variance(points, means)


class CenterSource(enum.StrEnum):
    ENCODER = enum.auto()
    ETF = enum.auto()
    RANDOM = enum.auto()


def make_centers(
    source: CenterSource,
    n: int,
    p: int,
    seed: Seed = 0,
    model: EncoderModel | None = None,
    dataset: MotionDataset | None = None,
) -> np.ndarray:
    """Cluster centers from a trained encoder or an encoder-free stand-in."""
    match CenterSource(source):
        case CenterSource.ETF:
            return make_simplex_etf(n, p, seed).centers
        case CenterSource.RANDOM:
            return sample_uniform_sphere(p, n, as_rng(seed, Stream.CENTERS))
        case _:
            if model is None or dataset is None:
                msg = "Encoder centers need a model and a dataset!"
                raise ArgumentError(msg)
            return compute_class_means(model, dataset).means


class EpochRecord(NamedTuple):
    epoch: int
    loss: float
    nc1: float
    nc2_gap: float
    uniformity_variance: float


@dataclass
class TrainingTrace:
    records: list[EpochRecord] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("epoch,loss,nc1,nc2_gap,uniformity_variance\n")
        for r in self.records:
            out.write(
                f"{r.epoch},{r.loss!r},{r.nc1!r},{r.nc2_gap!r},"
                f"{r.uniformity_variance!r}\n"
            )
        return out.getvalue()


def train_encoder(
    dataset: MotionDataset,
    p: int = 64,
    epochs: int = 2000,
    lr: float = 0.01,
    seed: int = 0,
    window_s: float = 2.0,
    stride_s: float = 0.5,
    batch_size: int = BATCH_SIZE,
    samples_per_center: int = SAMPLES_PER_CENTER,
) -> tuple[EncoderModel, TrainingTrace]:
    if dataset.n < 2:
        msg = "Encoder training needs at least two clips!"
        raise SingleClassDatasetError(msg)
    if epochs < 1 or batch_size < 1 or lr <= 0 or p < 2:
        msg = "Epochs, batch size, learning rate and p must be positive!"
        raise ArgumentError(msg)

    features, labels = window_features(dataset, window_s, stride_s)
    model = build_encoder(
        features.shape[1], p, dataset.n, seed, window_s, stride_s
    )
    net = model.net
    state = AdamState.for_parameters(net.parameters(), learning_rate=lr)
    shuffle = as_rng(seed, Stream.SHUFFLE)
    probes = sample_uniform_sphere(
        p, samples_per_center * dataset.n, as_rng(seed, Stream.UNIFORMITY)
    )
    trace = TrainingTrace()
    rows = features.shape[0]

    def record(epoch: int, loss: float, net: DenseNet) -> EncoderModel:
        current = EncoderModel.from_net(net, window_s, stride_s)
        latents = current.embed(features)
        means = class_means_of(latents, labels, dataset.n).means
        entry = EpochRecord(
            epoch=epoch,
            loss=loss,
            nc1=_nc1(latents, labels, means),
            nc2_gap=nc2_etf_deviation(means).etf_gap,
            uniformity_variance=assignment_variance(probes, means).variance,
        )
        trace.records.append(entry)
        logger.debug(
            "epoch %d loss %.6f nc1 %.6f nc2_gap %.6f uniformity %.2f",
            *entry,
        )
        return current

    # epoch 0 is the untrained network
    logits = forward(net, features)[0]
    record(0, softmax_cross_entropy(logits, labels)[0], net)
    for epoch in range(1, epochs + 1):
        order = shuffle.permutation(rows)
        total = 0.0
        for start in range(0, rows, batch_size):
            batch = order[start : start + batch_size]
            logits, cache = forward(net, features[batch])
            loss, dlogits = softmax_cross_entropy(logits, labels[batch])
            grads = backward(net, cache, dlogits)
            params, state = adam_step(net.parameters(), grads.params, state)
            net = net.with_parameters(params)
            total += loss * len(batch)
        model = record(epoch, total / rows, net)
    return model, trace
