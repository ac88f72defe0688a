from __future__ import annotations

import math
import numpy as np
import pytest
from ncse.bessel import log_bessel_i
from ncse.sphere import (
    VonMisesFisher,
    bessel_ratio,
    cosine_distance,
    is_unit,
    log_normalizer,
    log_sphere_area,
    make_simplex_etf,
    normalize,
    pca_project,
    random_orthonormal,
    sample_uniform_sphere,
    vmf_log_density,
    vmf_sample,
)
from ncse.utils import (
    DegenerateCovarianceError,
    DimensionMismatchError,
    DimensionTooSmallError,
    DomainError,
    ZeroVectorError,
)
from scipy import integrate, special


def unit(p: int, axis: int = 0) -> np.ndarray:
    e = np.zeros(p)
    e[axis] = 1.0
    return e


def quadrature_log_normalizer(p: int, kappa: float) -> float:
    """-log of |S^{p-2}| * int exp(kappa t) (1 - t^2)^((p-3)/2) dt."""
    a = (p - 3) / 2.0
    if kappa == 0:
        mode = 0.0
    elif a == 0:
        mode = 1.0
    else:
        mode = (-a + math.sqrt(a * a + kappa * kappa)) / kappa
    log_mode = kappa * mode + (a * math.log1p(-mode * mode) if a else 0.0)

    def scaled(t: float) -> float:
        value = kappa * t - kappa * mode
        if a:
            value += a * (math.log1p(-t * t) - math.log1p(-mode * mode))
        return math.exp(value)

    points = [mode] if -1.0 < mode < 1.0 else None
    integral, _ = integrate.quad(
        scaled, -1.0, 1.0, points=points, epsabs=0.0, epsrel=1e-12, limit=500
    )
    log_area = log_sphere_area(p - 1)
    return -(log_area + log_mode + math.log(integral))


def test_normalize() -> None:
    assert np.array_equal(normalize([3.0, 0.0, 0.0, 0.0]), unit(4))
    assert np.allclose(normalize([1.0, 1.0]), [0.70710678, 0.70710678])
    with pytest.raises(ZeroVectorError):
        normalize([0.0, 0.0, 0.0])
    with pytest.raises(DimensionTooSmallError):
        normalize([2.0])


def test_uniform_sphere_moments() -> None:
    points = sample_uniform_sphere(3, 10_000, 7)
    assert is_unit(points)
    assert np.all(np.abs(points.mean(axis=0)) < 0.05)
    assert np.all(np.abs(points.var(axis=0) - 1.0 / 3.0) < 0.02)
    assert np.array_equal(points, sample_uniform_sphere(3, 10_000, 7))


def test_uniform_sphere_high_dimension() -> None:
    points = sample_uniform_sphere(64, 123_000, 11)
    assert abs(float((points @ unit(64, 5)).mean())) < 0.01


@pytest.mark.parametrize(
    ("nu", "x"),
    [
        (nu, x)
        for nu in (0.0, 0.5, 1.0, 7.0, 31.0, 100.0)
        for x in (0.1, 1.0, 19.9, 20.0, 50.0, 500.0)
    ],
)
def test_log_bessel_against_scipy(nu: float, x: float) -> None:
    expected = math.log(special.ive(nu, x)) + x
    assert log_bessel_i(nu, x) == pytest.approx(expected, rel=1e-7, abs=1e-9)


def test_log_bessel_edges() -> None:
    assert log_bessel_i(0.0, 0.0) == 0.0
    assert log_bessel_i(2.0, 0.0) == -math.inf
    with pytest.raises(DomainError):
        log_bessel_i(-1.0, 1.0)


def test_log_normalizer_closed_forms() -> None:
    assert log_normalizer(3, 0.0) == pytest.approx(-math.log(4 * math.pi))
    closed = math.log(1.0 / (4.0 * math.pi * math.sinh(1.0)))
    assert abs(log_normalizer(3, 1.0) - closed) < 1e-10
    assert log_normalizer(3, 1.0) == pytest.approx(-2.6925, abs=1e-4)


@pytest.mark.parametrize("p", [3, 16, 64])
@pytest.mark.parametrize("kappa", [0.0, 1.0, 50.0, 500.0])
def test_log_normalizer_against_quadrature(p: int, kappa: float) -> None:
    expected = quadrature_log_normalizer(p, kappa)
    assert log_normalizer(p, kappa) == pytest.approx(expected, rel=1e-6)


def test_log_normalizer_extreme_range_is_finite() -> None:
    assert math.isfinite(log_normalizer(4096, 1e6))
    assert math.isfinite(log_normalizer(4096, 1e-3))
    assert math.isfinite(log_normalizer(2, 1e6))


def test_vmf_log_density() -> None:
    u = unit(3)
    uniform = VonMisesFisher(u, 0.0)
    z = normalize(np.array([0.3, -0.2, 0.9]))
    assert vmf_log_density(uniform, z) == pytest.approx(log_normalizer(3, 0))
    dist = VonMisesFisher(u, 1.0)
    closed = math.log(1.0 / (4.0 * math.pi * math.sinh(1.0)))
    assert vmf_log_density(dist, u) == pytest.approx(closed + 1.0)
    # same dot product with u, different azimuth
    a = normalize(np.array([0.5, 0.8, 0.1]))
    b = np.array([a[0], -a[1], a[2]])
    assert vmf_log_density(dist, a) == pytest.approx(vmf_log_density(dist, b))
    with pytest.raises(DimensionMismatchError):
        vmf_log_density(dist, unit(4))


@pytest.mark.parametrize(("p", "kappa"), [(3, 1.0), (8, 3.0), (16, 4.0)])
def test_vmf_density_integrates_to_one(p: int, kappa: float) -> None:
    dist = VonMisesFisher(unit(p), kappa)
    z = sample_uniform_sphere(p, 100_000, 5)
    ratio = np.exp(vmf_log_density(dist, z) + log_sphere_area(p))
    assert abs(ratio.mean() - 1.0) < 0.02


def test_vmf_distribution_validation() -> None:
    with pytest.raises(DomainError):
        VonMisesFisher(np.array([1.0, 1.0]), 1.0)
    with pytest.raises(DomainError):
        VonMisesFisher(unit(3), -1.0)


@pytest.mark.parametrize(("p", "kappa"), [(3, 1.0), (16, 10.0), (64, 50.0)])
def test_vmf_sample_mean_resultant_length(p: int, kappa: float) -> None:
    samples = vmf_sample(VonMisesFisher(unit(p), kappa), 20_000, 1)
    assert is_unit(samples)
    expected = special.ive(p / 2, kappa) / special.ive(p / 2 - 1, kappa)
    assert bessel_ratio(p, kappa) == pytest.approx(expected, rel=1e-8)
    resultant = np.linalg.norm(samples.mean(axis=0))
    assert abs(resultant - expected) < 0.01


def test_vmf_sample_uniform_limit() -> None:
    u = unit(8)
    samples = vmf_sample(VonMisesFisher(u, 0.0), 10_000, 2)
    assert abs(float((samples @ u).mean())) < 0.02


def test_vmf_mean_alignment_increases_with_concentration() -> None:
    u = unit(64, 3)
    alignment = [
        float((vmf_sample(VonMisesFisher(u, kappa), 20_000, 4) @ u).mean())
        for kappa in (0.0, 1.0, 10.0, 50.0, 200.0)
    ]
    assert alignment == sorted(alignment)


def test_vmf_sample_is_reproducible() -> None:
    dist = VonMisesFisher(normalize(np.arange(1.0, 9.0)), 50.0)
    assert np.array_equal(vmf_sample(dist, 500, 9), vmf_sample(dist, 500, 9))


def test_cosine_distance() -> None:
    a = normalize(np.array([1.0, 2.0, 3.0]))
    assert cosine_distance(a, a) == pytest.approx(0.0, abs=1e-12)
    assert cosine_distance(a, -a) == pytest.approx(2.0)
    assert cosine_distance(unit(3, 0), unit(3, 1)) == 1.0
    with pytest.raises(DimensionMismatchError):
        cosine_distance(unit(3), unit(4))


@pytest.mark.parametrize(("n", "p"), [(4, 3), (2, 2), (8, 16), (16, 64)])
def test_simplex_etf(n: int, p: int) -> None:
    etf = make_simplex_etf(n, p, seed=5)
    assert etf.centers.shape == (n, p)
    assert is_unit(etf.centers)
    off_diagonal = etf.gram()[~np.eye(n, dtype=bool)]
    assert np.allclose(off_diagonal, -1.0 / (n - 1), atol=1e-9)


def test_simplex_etf_gram_does_not_depend_on_seed() -> None:
    a = make_simplex_etf(6, 10, seed=1).gram()
    b = make_simplex_etf(6, 10, seed=2).gram()
    assert np.allclose(a, b, atol=1e-9)


def test_simplex_etf_needs_room() -> None:
    with pytest.raises(DimensionTooSmallError):
        make_simplex_etf(87, 64)


def test_random_orthonormal() -> None:
    q = random_orthonormal(10, 4, 3)
    assert np.allclose(q.T @ q, np.eye(4), atol=1e-12)
    assert np.array_equal(q, random_orthonormal(10, 4, 3))


def test_pca_recovers_a_plane() -> None:
    rng = np.random.default_rng(0)
    plane = random_orthonormal(64, 2, 8).T
    coefficients = rng.standard_normal((200, 2)) * np.array([3.0, 1.0])
    points = coefficients @ plane + rng.standard_normal(64)
    projection = pca_project(points, 2)
    assert np.allclose(
        projection.basis @ projection.basis.T, np.eye(2), atol=1e-8
    )
    rebuilt = projection.projected @ projection.basis + projection.mean
    assert np.abs(rebuilt - points).max() < 1e-8
    assert projection.explained_variance[0] >= projection.explained_variance[1]


def test_pca_of_three_center_etf() -> None:
    centers = make_simplex_etf(3, 8, seed=4).centers
    projected = pca_project(centers, 2).projected
    for i, j in ((0, 1), (0, 2), (1, 2)):
        cosine = projected[i] @ projected[j]
        cosine /= np.linalg.norm(projected[i]) * np.linalg.norm(projected[j])
        assert abs(math.degrees(math.acos(cosine)) - 120.0) < 0.1


def test_pca_full_rank_keeps_total_variance() -> None:
    points = np.random.default_rng(1).standard_normal((50, 5))
    projection = pca_project(points, 5, seed=2)
    total = np.trace(np.cov(points.T, bias=True))
    assert abs(projection.explained_variance.sum() - total) < 1e-8
    assert np.all(np.diff(projection.explained_variance) <= 0)
    assert np.allclose(
        projection.basis @ projection.basis.T, np.eye(5), atol=1e-8
    )


def test_pca_degenerate() -> None:
    with pytest.raises(DegenerateCovarianceError):
        pca_project(np.ones((5, 3)), 2)
