from __future__ import annotations

import numpy as np
import pytest
from ncse.encoder import (
    CenterSource,
    EncoderModel,
    TrainingTrace,
    build_encoder,
    class_means_of,
    compute_class_means,
    make_centers,
    nc1_variability,
    nc2_etf_deviation,
    nearest_center,
    nearest_centers,
    train_encoder,
    uniformity_variance,
    window_features,
)
from ncse.motion import MotionDataset, synth_dataset
from ncse.sphere import make_simplex_etf, normalize, sample_uniform_sphere
from ncse.utils import (
    DimensionMismatchError,
    EmptyClassError,
    SingleClassDatasetError,
)

Trained = tuple[EncoderModel, TrainingTrace]


def untrained(dataset: MotionDataset, p: int = 16) -> EncoderModel:
    features, _ = window_features(dataset)
    return build_encoder(features.shape[1], p, dataset.n, 0)


def test_embeddings_are_unit_vectors(dataset: MotionDataset) -> None:
    model = untrained(dataset)
    features, labels = window_features(dataset)
    latents = model.embed(features)
    assert latents.shape == (len(labels), 16)
    assert np.allclose(np.linalg.norm(latents, axis=1), 1.0, atol=1e-9)


def test_from_net_splits_after_normalization(dataset: MotionDataset) -> None:
    model = untrained(dataset)
    rebuilt = EncoderModel.from_net(model.net)
    assert rebuilt.latent_dim == 16
    assert rebuilt.n_classes == dataset.n


def test_class_means() -> None:
    latents = normalize(np.array([[1.0, 0.1], [1.0, -0.1], [0.0, 1.0]]))
    means = class_means_of(latents, np.array([0, 0, 1]), 2)
    assert np.allclose(means.means, [[1.0, 0.0], [0.0, 1.0]])
    assert means.counts.tolist() == [2, 1]
    with pytest.raises(EmptyClassError):
        class_means_of(latents, np.array([0, 0, 0]), 2)


def test_nc2_of_an_etf() -> None:
    stats = nc2_etf_deviation(make_simplex_etf(8, 16).centers)
    assert stats.mean_cosine == pytest.approx(-1.0 / 7.0)
    assert stats.cosine_std < 1e-9
    assert stats.etf_gap < 1e-9
    assert stats.feasible
    with pytest.raises(SingleClassDatasetError):
        nc2_etf_deviation(make_simplex_etf(2, 2).centers[:1])


def test_nearest_center() -> None:
    means = make_simplex_etf(4, 3).centers
    for index, center in enumerate(means):
        assert nearest_center(center, means) == index
    # ties go to the lowest index
    axes = np.eye(2)
    assert nearest_center(normalize(np.ones(2)), axes) == 0
    with pytest.raises(DimensionMismatchError):
        nearest_centers(np.ones((2, 5)), means)


def test_uniformity_of_an_etf() -> None:
    result = uniformity_variance(make_simplex_etf(4, 3).centers, 1000, 0)
    assert result.counts.sum() == 4000
    # multinomial noise only
    assert result.variance < 4000


def test_uniformity_of_an_antipodal_pair() -> None:
    means = make_simplex_etf(2, 2).centers
    result = uniformity_variance(means, 1000, 0)
    assert result.counts.sum() == 2000
    # |count - 1000| stays within four standard deviations
    assert result.variance < (4 * np.sqrt(500)) ** 2


def test_etf_is_more_uniform_than_one_tight_cluster() -> None:
    etf = make_simplex_etf(8, 16).centers
    base = normalize(np.ones(16))
    tight = normalize(base + 0.05 * sample_uniform_sphere(16, 8, 1))
    assert (
        uniformity_variance(etf, 200, 2).variance
        < uniformity_variance(tight, 200, 2).variance
    )


def test_make_centers() -> None:
    etf = make_centers(CenterSource.ETF, 5, 8, 1)
    assert etf.shape == (5, 8)
    random = make_centers(CenterSource.RANDOM, 5, 8, 1)
    assert np.allclose(np.linalg.norm(random, axis=1), 1.0)
    assert np.array_equal(random, make_centers(CenterSource.RANDOM, 5, 8, 1))


def test_training_needs_two_clips() -> None:
    with pytest.raises(SingleClassDatasetError):
        train_encoder(synth_dataset(1, seed=0), p=4, epochs=1)


def test_training_is_deterministic() -> None:
    dataset = synth_dataset(3, seed=6)
    a, trace_a = train_encoder(dataset, p=4, epochs=3, seed=2)
    b, trace_b = train_encoder(dataset, p=4, epochs=3, seed=2)
    assert all(
        np.array_equal(x, y)
        for x, y in zip(a.net.parameters(), b.net.parameters(), strict=True)
    )
    assert trace_a.to_csv() == trace_b.to_csv()


def test_training_trace(trained: Trained) -> None:
    _, trace = trained
    assert len(trace.records) == 401
    assert [r.epoch for r in trace.records[:2]] == [0, 1]
    lines = trace.to_csv().splitlines()
    assert lines[0] == "epoch,loss,nc1,nc2_gap,uniformity_variance"
    assert len(lines) == 402
    assert all(np.isfinite(r).all() and r.loss >= 0 for r in trace.records)
    assert trace.records[-1].loss < 0.05
    assert trace.records[-1].loss < trace.records[0].loss


def test_trace_starts_from_the_untrained_network(
    dataset: MotionDataset, trained: Trained
) -> None:
    _, trace = trained
    before = untrained(dataset)
    nc1 = nc1_variability(
        before, dataset, compute_class_means(before, dataset)
    )
    assert trace.records[0].nc1 == pytest.approx(nc1, rel=1e-9)


def test_trained_means_approach_an_etf(
    dataset: MotionDataset, trained: Trained
) -> None:
    model, _ = trained
    means = compute_class_means(model, dataset).means
    stats = nc2_etf_deviation(means)
    assert abs(stats.mean_cosine + 1.0 / 7.0) < 0.05
    assert stats.cosine_std < 0.05
    assert stats.feasible


def test_training_collapses_classes(trained: Trained) -> None:
    _, trace = trained
    assert trace.records[-1].nc1 < 0.2 * trace.records[0].nc1
    assert trace.records[-1].nc1 < trace.records[100].nc1


def test_windows_find_their_own_center(
    dataset: MotionDataset, trained: Trained
) -> None:
    model, _ = trained
    means = compute_class_means(model, dataset).means
    features, labels = window_features(dataset)
    found = nearest_centers(model.embed(features), means)
    assert np.mean(found == labels) >= 0.99


def test_training_spreads_the_centers(
    dataset: MotionDataset, trained: Trained
) -> None:
    model, _ = trained
    trained_means = compute_class_means(model, dataset).means
    untrained_means = compute_class_means(untrained(dataset), dataset).means
    assert (
        uniformity_variance(trained_means, 1000, 0).variance
        < uniformity_variance(untrained_means, 1000, 0).variance
    )


def test_uniformity_counts_follow_the_means() -> None:
    means = sample_uniform_sphere(8, 6, 12)
    perm = np.array([3, 0, 5, 1, 4, 2])
    counts = uniformity_variance(means, 500, 4).counts
    permuted = uniformity_variance(means[perm], 500, 4).counts
    assert np.array_equal(permuted, counts[perm])


def test_class_means_ignore_window_order(
    dataset: MotionDataset, trained: Trained
) -> None:
    model, _ = trained
    features, labels = window_features(dataset)
    latents = model.embed(features)
    order = np.random.default_rng(2).permutation(len(labels))
    expected = class_means_of(latents, labels, dataset.n)
    shuffled = class_means_of(latents[order], labels[order], dataset.n)
    assert np.allclose(shuffled.means, expected.means, rtol=0, atol=1e-12)
    assert np.array_equal(shuffled.counts, expected.counts)
    assert np.allclose(
        compute_class_means(model, dataset).means,
        expected.means,
        rtol=0,
        atol=1e-12,
    )
