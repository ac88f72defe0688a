from __future__ import annotations

import enum
import io
import logging
import math
import numpy as np
from dataclasses import dataclass, field
from ncse.motion import (
    MotionDataset,
    frame_states,
    metric_columns,
    state_dim,
    transition_count,
)
from ncse.net import (
    Activation,
    AdamState,
    DenseNet,
    adam_step,
    backward,
    build_net,
    forward,
    gradient_penalty,
)
from ncse.progress import DEFAULT_BASE, DEFAULT_INTERVAL_S, progress_offset
from ncse.sphere import vmf_sample_rows
from ncse.utils import (
    ArgumentError,
    DimensionMismatchError,
    DomainError,
    EmptyBatchError,
    Seed,
    SingleClassDatasetError,
    Stream,
    as_rng,
    check_dimensions,
)
from typing import NamedTuple

logger = logging.getLogger(__name__)

EPSILON = 1e-4
HIDDEN_SIZES = (256, 128)
EVALUATION_SIZE = 256
EVALUATE_EVERY = 10


@dataclass(frozen=True)
class ExpansionConfig:
    kappa: float = 50.0
    p_center: float = 0.5

    def __post_init__(self) -> None:
        if self.kappa < 0:
            msg = f"Concentration must be >= 0! [{self.kappa}]"
            raise DomainError(msg)
        if not 0.0 <= self.p_center <= 1.0:
            msg = f"p_center must lie in [0, 1]! [{self.p_center}]"
            raise DomainError(msg)


class Expansion(NamedTuple):
    embeddings: np.ndarray
    exact: np.ndarray


def expansion_sample_batch(
    centers: np.ndarray,
    cfg: ExpansionConfig,
    rng: np.random.Generator,
) -> Expansion:
    """Keep each center with probability p_center, else draw vMF(center)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    exact = rng.uniform(size=centers.shape[0]) < cfg.p_center
    embeddings = centers.copy()
    if not np.all(exact):
        embeddings[~exact] = vmf_sample_rows(
            centers[~exact], cfg.kappa, rng
        )
    return Expansion(embeddings=embeddings, exact=exact)


def expansion_sample(
    u: np.ndarray,
    cfg: ExpansionConfig,
    seed: Seed = 0,
) -> np.ndarray:
    rng = as_rng(seed, Stream.EXPANSION)
    return expansion_sample_batch(u, cfg, rng).embeddings[0]


class SkillSamples(NamedTuple):
    embeddings: np.ndarray
    clusters: np.ndarray
    exact: np.ndarray


def sample_skill_embeddings(
    means: np.ndarray,
    cfg: ExpansionConfig,
    count: int,
    seed: Seed = 0,
) -> SkillSamples:
    if count < 1:
        msg = f"Sample count must be >= 1! [{count}]"
        raise ArgumentError(msg)
    rng = as_rng(seed, Stream.EXPANSION)
    clusters = rng.integers(means.shape[0], size=count)
    expansion = expansion_sample_batch(means[clusters], cfg, rng)
    return SkillSamples(expansion.embeddings, clusters, expansion.exact)


class SampleKind(enum.StrEnum):
    MATCHED = enum.auto()
    MISMATCHED = enum.auto()
    POLICY_STAND_IN = enum.auto()


@dataclass(frozen=True)
class Transition:
    s_t: np.ndarray
    s_next: np.ndarray
    source_clip: int
    time_t: float


@dataclass(frozen=True)
class ConditionedSample:
    transition: Transition
    embedding: np.ndarray
    center_clip: int
    kind: SampleKind


@dataclass(frozen=True)
class TransitionPool:
    """Every consecutive frame pair of a dataset, featurized once."""

    s_t: np.ndarray
    s_next: np.ndarray
    offsets_t: np.ndarray
    offsets_next: np.ndarray
    clips: np.ndarray
    times: np.ndarray
    starts: np.ndarray
    counts: np.ndarray
    metric_mask: np.ndarray

    @property
    def n(self) -> int:
        return self.counts.size

    @property
    def state_dim(self) -> int:
        return self.s_t.shape[1]

    @classmethod
    def from_dataset(
        cls,
        dataset: MotionDataset,
        interval_s: float = DEFAULT_INTERVAL_S,
        base: float = DEFAULT_BASE,
    ) -> TransitionPool:
        widths = {state_dim(clip.joint_count) for clip in dataset.clips}
        if len(widths) > 1:
            msg = "All clips need the same joint count!"
            raise DimensionMismatchError(msg)
        d = widths.pop()
        joint_count = dataset.clips[0].joint_count
        rows: dict[str, list] = {
            key: [] for key in ("s_t", "s_next", "pe_t", "pe_next", "time")
        }
        clips, counts = [], []
        for index, clip in enumerate(dataset.clips):
            count = transition_count(clip)
            counts.append(count)
            clips += [index] * count
            for t in range(count):
                s_t, s_next = frame_states(clip, t)
                time = t / clip.fps
                rows["s_t"].append(s_t)
                rows["s_next"].append(s_next)
                rows["time"].append(time)
                rows["pe_t"].append(
                    progress_offset(
                        time, d, clip.duration_s, interval_s, base
                    )
                )
                rows["pe_next"].append(
                    progress_offset(
                        (t + 1) / clip.fps,
                        d,
                        clip.duration_s,
                        interval_s,
                        base,
                    )
                )
        counts_array = np.asarray(counts)
        return cls(
            s_t=np.asarray(rows["s_t"]),
            s_next=np.asarray(rows["s_next"]),
            offsets_t=np.asarray(rows["pe_t"]),
            offsets_next=np.asarray(rows["pe_next"]),
            clips=np.asarray(clips),
            times=np.asarray(rows["time"]),
            starts=np.concatenate([[0], np.cumsum(counts_array)[:-1]]),
            counts=counts_array,
            metric_mask=metric_columns(joint_count),
        )

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        clips = rng.integers(self.n, size=count)
        within = np.floor(rng.uniform(size=count) * self.counts[clips])
        return self.starts[clips] + within.astype(np.int64)


@dataclass(frozen=True)
class ConditionedBatch:
    s_t: np.ndarray
    s_next: np.ndarray
    embeddings: np.ndarray
    source_clips: np.ndarray
    center_clips: np.ndarray
    times: np.ndarray
    exact: np.ndarray
    kind: SampleKind

    @property
    def size(self) -> int:
        return self.s_t.shape[0]

    def inputs(self) -> np.ndarray:
        return np.hstack([self.s_t, self.s_next, self.embeddings])

    def samples(self) -> list[ConditionedSample]:
        return [
            ConditionedSample(
                transition=Transition(
                    s_t=self.s_t[i],
                    s_next=self.s_next[i],
                    source_clip=int(self.source_clips[i]),
                    time_t=float(self.times[i]),
                ),
                embedding=self.embeddings[i],
                center_clip=int(self.center_clips[i]),
                kind=self.kind,
            )
            for i in range(self.size)
        ]


def _conditioned_batch(
    pool: TransitionPool,
    means: np.ndarray,
    cfg: ExpansionConfig,
    count: int,
    rng: np.random.Generator,
    kind: SampleKind,
) -> ConditionedBatch:
    if means.shape[0] != pool.n:
        msg = f"{means.shape[0]} centers for {pool.n} clips!"
        raise DimensionMismatchError(msg)
    rows = pool.draw(count, rng)
    sources = pool.clips[rows]
    if kind == SampleKind.MISMATCHED:
        centers = (sources + rng.integers(1, pool.n, size=count)) % pool.n
    else:
        centers = sources
    expansion = expansion_sample_batch(
        means[centers], cfg, rng
    )
    exact = expansion.exact[:, None]
    return ConditionedBatch(
        s_t=pool.s_t[rows] + exact * pool.offsets_t[rows],
        s_next=pool.s_next[rows] + exact * pool.offsets_next[rows],
        embeddings=expansion.embeddings,
        source_clips=sources,
        center_clips=centers,
        times=pool.times[rows],
        exact=expansion.exact,
        kind=kind,
    )


def make_matched_batch(
    dataset: MotionDataset,
    means: np.ndarray,
    cfg: ExpansionConfig,
    count: int,
    seed: Seed = 0,
    pool: TransitionPool | None = None,
) -> ConditionedBatch:
    if pool is None:
        pool = TransitionPool.from_dataset(dataset)
    rng = as_rng(seed, Stream.MATCHED)
    return _conditioned_batch(
        pool, means, cfg, count, rng, SampleKind.MATCHED
    )


def make_mismatched_batch(
    dataset: MotionDataset,
    means: np.ndarray,
    cfg: ExpansionConfig,
    count: int,
    seed: Seed = 0,
    pool: TransitionPool | None = None,
) -> ConditionedBatch:
    if dataset.n < 2:
        msg = "Mismatched samples need at least two clips!"
        raise SingleClassDatasetError(msg)
    if pool is None:
        pool = TransitionPool.from_dataset(dataset)
    rng = as_rng(seed, Stream.MISMATCHED)
    return _conditioned_batch(
        pool, means, cfg, count, rng, SampleKind.MISMATCHED
    )


def make_policy_stand_in_batch(
    dataset: MotionDataset,
    means: np.ndarray,
    cfg: ExpansionConfig,
    count: int,
    noise_sigma: float = 0.1,
    seed: Seed = 0,
    pool: TransitionPool | None = None,
) -> ConditionedBatch:
    """Matched samples with noise on position and velocity columns."""
    if noise_sigma < 0:
        msg = f"Noise scale must be >= 0! [{noise_sigma}]"
        raise ArgumentError(msg)
    if pool is None:
        pool = TransitionPool.from_dataset(dataset)
    rng = as_rng(seed, Stream.POLICY)
    batch = _conditioned_batch(
        pool, means, cfg, count, rng, SampleKind.POLICY_STAND_IN
    )
    noise = rng.normal(0.0, noise_sigma, size=(2, *batch.s_t.shape))
    noise *= pool.metric_mask
    return ConditionedBatch(
        s_t=batch.s_t + noise[0],
        s_next=batch.s_next + noise[1],
        embeddings=batch.embeddings,
        source_clips=batch.source_clips,
        center_clips=batch.center_clips,
        times=batch.times,
        exact=batch.exact,
        kind=batch.kind,
    )


@dataclass(frozen=True)
class DiscriminatorModel:
    net: DenseNet
    state_dim: int
    latent_dim: int
    epsilon: float = EPSILON

    def __post_init__(self) -> None:
        if self.net.input_dim != 2 * self.state_dim + self.latent_dim:
            msg = (
                f"Discriminator input {self.net.input_dim} != "
                f"2 * {self.state_dim} + {self.latent_dim}!"
            )
            raise DimensionMismatchError(msg)
        if self.net.output_dim != 1:
            msg = "The discriminator must have a single output!"
            raise DimensionMismatchError(msg)

    def state_mask(self) -> np.ndarray:
        mask = np.zeros(self.net.input_dim)
        mask[: 2 * self.state_dim] = 1.0
        return mask

    def clamp(self, outputs: np.ndarray) -> np.ndarray:
        return np.clip(outputs, self.epsilon, 1.0 - self.epsilon)

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return self.clamp(forward(self.net, inputs)[0][:, 0])


def build_discriminator(
    d: int,
    p: int,
    seed: Seed = 0,
    epsilon: float = EPSILON,
) -> DiscriminatorModel:
    net = build_net(
        (2 * d + p, *HIDDEN_SIZES, 1),
        (Activation.RELU, Activation.RELU, Activation.SIGMOID),
        seed,
    )
    return DiscriminatorModel(net, d, p, epsilon)


class LossTerms(NamedTuple):
    matched: float
    mismatched: float
    policy: float
    penalty: float


class DiscLoss(NamedTuple):
    loss: float
    gradients: list[np.ndarray]
    terms: LossTerms


def _log_term(
    model: DiscriminatorModel,
    batch: ConditionedBatch,
    real: bool,
) -> tuple[float, list[np.ndarray], list]:
    """-mean log D for real samples, -mean log(1 - D) otherwise."""
    outputs, cache = forward(model.net, batch.inputs())
    clamped = model.clamp(outputs)
    free = (clamped == outputs).astype(np.float64)
    rows = batch.size
    if real:
        value = -np.log(clamped).mean()
        upstream = -free / (clamped * rows)
    else:
        value = -np.log1p(-clamped).mean()
        upstream = free / ((1.0 - clamped) * rows)
    return float(value), backward(model.net, cache, upstream).params, cache


def disc_loss(
    model: DiscriminatorModel,
    matched: ConditionedBatch,
    mismatched: ConditionedBatch,
    policy_batch: ConditionedBatch,
    w_gp: float,
) -> DiscLoss:
    for batch in (matched, mismatched, policy_batch):
        if batch.size == 0:
            msg = f"The {batch.kind} batch is empty!"
            raise EmptyBatchError(msg)
    real, real_grads, cache = _log_term(model, matched, real=True)
    fake, fake_grads, _ = _log_term(model, mismatched, real=False)
    policy, policy_grads, _ = _log_term(model, policy_batch, real=False)
    gradients = [
        a + b + c
        for a, b, c in zip(real_grads, fake_grads, policy_grads, strict=True)
    ]
    penalty = 0.0
    if w_gp:
        result = gradient_penalty(model.net, cache, model.state_mask())
        penalty = float(result.values.mean())
        gradients = [
            g + w_gp * h
            for g, h in zip(gradients, result.gradients, strict=True)
        ]
    terms = LossTerms(real, fake, policy, penalty)
    return DiscLoss(
        loss=real + fake + policy + w_gp * penalty,
        gradients=gradients,
        terms=terms,
    )


def _check_input(
    model: DiscriminatorModel,
    s_t: np.ndarray,
    s_next: np.ndarray,
    z: np.ndarray,
) -> np.ndarray:
    s_t, s_next, z = (
        np.asarray(v, dtype=np.float64) for v in (s_t, s_next, z)
    )
    if (
        s_t.shape != (model.state_dim,)
        or s_next.shape != (model.state_dim,)
        or z.shape != (model.latent_dim,)
    ):
        msg = (
            f"Expected states of dimension {model.state_dim} and an "
            f"embedding of dimension {model.latent_dim}!"
        )
        raise DimensionMismatchError(msg)
    return np.concatenate([s_t, s_next, z])[None, :]


def reward_from_output(output: float, epsilon: float = EPSILON) -> float:
    return -math.log1p(-min(max(output, epsilon), 1.0 - epsilon))


def imitation_reward(
    model: DiscriminatorModel,
    s_t: np.ndarray,
    s_next: np.ndarray,
    z: np.ndarray,
) -> float:
    """-log(1 - D(s_t, s_next, z)) with D clamped to [eps, 1 - eps]."""
    outputs, _ = forward(model.net, _check_input(model, s_t, s_next, z))
    output = float(outputs[0, 0])
    return reward_from_output(output, model.epsilon)


def style_reward(u: np.ndarray, z: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    check_dimensions(u, z)
    return float(np.clip(u @ z, -1.0, 1.0))


def combined_reward(
    r_goal: float,
    r_style: float,
    w_goal: float,
    w_style: float,
) -> float:
    return w_goal * r_goal + w_style * r_style


class StepRecord(NamedTuple):
    step: int
    loss: float
    acc_matched: float
    acc_mismatched: float


@dataclass
class DiscriminatorTrace:
    records: list[StepRecord] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("step,loss,acc_matched,acc_mismatched\n")
        for r in self.records:
            out.write(
                f"{r.step},{r.loss!r},{r.acc_matched!r},"
                f"{r.acc_mismatched!r}\n"
            )
        return out.getvalue()


def accuracies(
    model: DiscriminatorModel,
    matched: ConditionedBatch,
    mismatched: ConditionedBatch,
) -> tuple[float, float]:
    return (
        float(np.mean(model.predict(matched.inputs()) > 0.5)),
        float(np.mean(model.predict(mismatched.inputs()) < 0.5)),
    )


def train_discriminator(
    dataset: MotionDataset,
    means: np.ndarray,
    cfg: ExpansionConfig,
    steps: int = 2000,
    lr: float = 1e-3,
    w_gp: float = 5.0,
    seed: int = 0,
    batch_size: int = 64,
    noise_sigma: float = 0.1,
    interval_s: float = DEFAULT_INTERVAL_S,
) -> tuple[DiscriminatorModel, DiscriminatorTrace]:
    if dataset.n < 2:
        msg = "Discriminator training needs at least two clips!"
        raise SingleClassDatasetError(msg)
    if steps < 1 or batch_size < 1 or lr <= 0 or w_gp < 0:
        msg = "Steps, batch size and learning rate must be positive!"
        raise ArgumentError(msg)

    pool = TransitionPool.from_dataset(dataset, interval_s)
    model = build_discriminator(pool.state_dim, means.shape[1], seed)
    state = AdamState.for_parameters(model.net.parameters(), learning_rate=lr)
    rngs = {
        kind: as_rng(seed, stream)
        for kind, stream in (
            (SampleKind.MATCHED, Stream.MATCHED),
            (SampleKind.MISMATCHED, Stream.MISMATCHED),
            (SampleKind.POLICY_STAND_IN, Stream.POLICY),
        )
    }
    evaluation = as_rng(seed, Stream.EVALUATION)
    eval_matched = _conditioned_batch(
        pool, means, cfg, EVALUATION_SIZE, evaluation, SampleKind.MATCHED
    )
    eval_mismatched = _conditioned_batch(
        pool, means, cfg, EVALUATION_SIZE, evaluation, SampleKind.MISMATCHED
    )

    trace = DiscriminatorTrace()
    for step in range(1, steps + 1):
        matched = make_matched_batch(
            dataset,
            means,
            cfg,
            batch_size,
            rngs[SampleKind.MATCHED],
            pool,
        )
        mismatched = make_mismatched_batch(
            dataset,
            means,
            cfg,
            batch_size,
            rngs[SampleKind.MISMATCHED],
            pool,
        )
        policy = make_policy_stand_in_batch(
            dataset,
            means,
            cfg,
            batch_size,
            noise_sigma,
            rngs[SampleKind.POLICY_STAND_IN],
            pool,
        )
        result = disc_loss(model, matched, mismatched, policy, w_gp)
        params, state = adam_step(
            model.net.parameters(), result.gradients, state
        )
        model = DiscriminatorModel(
            model.net.with_parameters(params),
            model.state_dim,
            model.latent_dim,
            model.epsilon,
        )
        trace.losses.append(result.loss)
        if step % EVALUATE_EVERY == 0 or step == steps:
            acc = accuracies(model, eval_matched, eval_mismatched)
            trace.records.append(StepRecord(step, result.loss, *acc))
            logger.debug(
                "step %d loss %.6f acc matched %.3f mismatched %.3f",
                step,
                result.loss,
                *acc,
            )
    return model, trace
