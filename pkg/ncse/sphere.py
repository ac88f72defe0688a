from __future__ import annotations

import math
import numpy as np
from dataclasses import dataclass
from ncse.bessel import log_bessel_i
from ncse.utils import (
    ArgumentError,
    DegenerateCovarianceError,
    DimensionTooSmallError,
    DomainError,
    NumericOverflowError,
    Seed,
    Stream,
    ZeroVectorError,
    as_rng,
    check_dimensions,
)
from typing import NamedTuple

UNIT_TOLERANCE = 1e-9
ZERO_NORM = 1e-12
PCA_TOLERANCE = 1e-10
PCA_MAX_ITERATIONS = 10_000


def normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] < 2:
        msg = f"Unit vectors need dimension >= 2! [{v.shape[-1]}]"
        raise DimensionTooSmallError(msg)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norms < ZERO_NORM):
        msg = "Cannot normalize a zero vector!"
        raise ZeroVectorError(msg)
    return v / norms


def is_unit(v: np.ndarray, tolerance: float = UNIT_TOLERANCE) -> bool:
    norms = np.linalg.norm(np.asarray(v, dtype=np.float64), axis=-1)
    return bool(np.all(np.abs(norms - 1.0) <= tolerance))


def _check_p(p: int) -> None:
    if p < 2:
        msg = f"Sphere dimension must be >= 2! [{p}]"
        raise DimensionTooSmallError(msg)


def sample_uniform_sphere(p: int, count: int, seed: Seed) -> np.ndarray:
    _check_p(p)
    if count < 1:
        msg = f"Sample count must be >= 1! [{count}]"
        raise ArgumentError(msg)
    rng = as_rng(seed, Stream.UNIFORMITY)
    return normalize(rng.standard_normal((count, p)))


def log_sphere_area(p: int) -> float:
    return math.log(2.0) + 0.5 * p * math.log(math.pi) - math.lgamma(p / 2.0)


def log_normalizer(p: int, kappa: float) -> float:
    """log C_p(kappa) of the vMF density on S^{p-1}."""
    _check_p(p)
    if kappa < 0:
        msg = f"Concentration must be >= 0! [{kappa}]"
        raise DomainError(msg)
    if kappa == 0:
        return -log_sphere_area(p)
    nu = p / 2.0 - 1.0
    value = (
        nu * math.log(kappa)
        - (p / 2.0) * math.log(2.0 * math.pi)
        - log_bessel_i(nu, kappa)
    )
    if not math.isfinite(value):
        msg = f"Non-finite vMF normalizer! [p={p}, kappa={kappa}]"
        raise NumericOverflowError(msg)
    return value


def bessel_ratio(p: int, kappa: float) -> float:
    """Mean resultant length I_{p/2}(kappa) / I_{p/2-1}(kappa)."""
    _check_p(p)
    if kappa == 0:
        return 0.0
    nu = p / 2.0 - 1.0
    return math.exp(log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa))


@dataclass(frozen=True)
class VonMisesFisher:
    mean_direction: np.ndarray
    concentration: float

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean_direction, dtype=np.float64)
        if mean.ndim != 1:
            msg = "Mean direction must be a single vector!"
            raise DomainError(msg)
        _check_p(mean.shape[0])
        if not is_unit(mean):
            msg = "Mean direction must have unit norm!"
            raise DomainError(msg)
        if self.concentration < 0:
            msg = f"Concentration must be >= 0! [{self.concentration}]"
            raise DomainError(msg)
        object.__setattr__(self, "mean_direction", mean)

    @property
    def dimension(self) -> int:
        return self.mean_direction.shape[0]


def vmf_log_density(dist: VonMisesFisher, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    check_dimensions(dist.mean_direction, z)
    normalizer = log_normalizer(dist.dimension, dist.concentration)
    return normalizer + dist.concentration * (z @ dist.mean_direction)


def sample_axial(
    kappa: float,
    p: int,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Wood rejection for t = u.z; acceptance stays above one half."""
    m = p - 1.0
    b = m / (2.0 * kappa + math.sqrt(4.0 * kappa * kappa + m * m))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * math.log(4.0 * b / (1.0 + b) ** 2)
    accepted: list[np.ndarray] = []
    total = 0
    while total < count:
        need = count - total
        draw = need + need // 2 + 8
        beta = rng.beta(m / 2.0, m / 2.0, size=draw)
        w = (1.0 - (1.0 + b) * beta) / (1.0 - (1.0 - b) * beta)
        log_u = np.log(rng.uniform(size=draw))
        keep = kappa * w + m * np.log(1.0 - x0 * w) - c >= log_u
        accepted.append(w[keep])
        total += int(keep.sum())
    return np.clip(np.concatenate(accepted)[:count], -1.0, 1.0)


def tangent_directions(
    means: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    v = rng.standard_normal(means.shape)
    v -= np.sum(v * means, axis=1, keepdims=True) * means
    return normalize(v)


def vmf_sample_rows(
    means: np.ndarray,
    kappa: float,
    rng: np.random.Generator,
) -> np.ndarray:
    count, p = means.shape
    if kappa == 0:
        return sample_uniform_sphere(p, count, rng)
    t = sample_axial(kappa, p, count, rng)
    directions = tangent_directions(means, rng)
    samples = t[:, None] * means + np.sqrt(1.0 - t * t)[:, None] * directions
    return normalize(samples)


def vmf_sample(dist: VonMisesFisher, count: int, seed: Seed) -> np.ndarray:
    if count < 1:
        msg = f"Sample count must be >= 1! [{count}]"
        raise ArgumentError(msg)
    rng = as_rng(seed, Stream.EXPANSION)
    means = np.broadcast_to(dist.mean_direction, (count, dist.dimension))
    return vmf_sample_rows(np.array(means), dist.concentration, rng)


def cosine_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_dimensions(a, b)
    distance = np.clip(1.0 - np.sum(a * b, axis=-1), 0.0, 2.0)
    return float(distance) if distance.ndim == 0 else distance


@dataclass(frozen=True)
class SimplexEtf:
    centers: np.ndarray

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    @property
    def dimension(self) -> int:
        return self.centers.shape[1]

    def gram(self) -> np.ndarray:
        return self.centers @ self.centers.T


def random_orthonormal(rows: int, cols: int, seed: Seed) -> np.ndarray:
    rng = as_rng(seed, Stream.ETF)
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def make_simplex_etf(n: int, p: int, seed: Seed = 0) -> SimplexEtf:
    if n < 2:
        msg = f"A simplex ETF needs at least two centers! [{n}]"
        raise ArgumentError(msg)
    if p < n - 1:
        msg = f"A simplex ETF of {n} centers needs p >= {n - 1}! [p={p}]"
        raise DimensionTooSmallError(msg)
    centering = np.eye(n) - 1.0 / n
    q, _ = np.linalg.qr(centering)
    coords = normalize(centering @ q[:, : n - 1])
    embed = random_orthonormal(p, n - 1, seed)
    return SimplexEtf(centers=normalize(coords @ embed.T))


class PcaProjection(NamedTuple):
    basis: np.ndarray
    projected: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray


def _project_out(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    for b in basis:
        v = v - (v @ b) * b
    return v


def pca_project(points: np.ndarray, k: int, seed: Seed = 0) -> PcaProjection:
    """Top-k principal directions by power iteration with deflation."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        msg = "PCA needs at least two points!"
        raise ArgumentError(msg)
    dimension = points.shape[1]
    if not 1 <= k <= dimension:
        msg = f"Target dimension must be in [1, {dimension}]! [{k}]"
        raise ArgumentError(msg)
    mean = points.mean(axis=0)
    centered = points - mean
    covariance = centered.T @ centered / points.shape[0]
    total = float(np.trace(covariance))
    if not np.any(centered) or total <= 0:
        msg = "All points are identical; covariance is degenerate!"
        raise DegenerateCovarianceError(msg)

    rng = as_rng(seed, Stream.PCA)
    work = covariance.copy()
    basis: list[np.ndarray] = []
    variances: list[float] = []
    for _ in range(k):
        v = _project_out(rng.standard_normal(dimension), basis)
        v /= np.linalg.norm(v)
        for _ in range(PCA_MAX_ITERATIONS):
            w = _project_out(work @ v, basis)
            norm = np.linalg.norm(w)
            # remaining variance is numerically zero
            if norm <= 1e-12 * total:
                break
            w /= norm
            converged = np.linalg.norm(w - v) < PCA_TOLERANCE
            v = w
            if converged:
                break
        v = _project_out(v, basis)
        v /= np.linalg.norm(v)
        variance = float(v @ covariance @ v)
        work -= variance * np.outer(v, v)
        basis.append(v)
        variances.append(variance)

    order = np.argsort(-np.asarray(variances), kind="stable")
    basis_matrix = np.asarray(basis)[order]
    return PcaProjection(
        basis=basis_matrix,
        projected=centered @ basis_matrix.T,
        explained_variance=np.asarray(variances)[order],
        mean=mean,
    )
