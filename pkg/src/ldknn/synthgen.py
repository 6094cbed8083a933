"""Generators for the four synthetic two-class benchmark families.

Families (all with ``dim_p`` total dimensions, the last one called y):

* t1 -- uniform samples on the box 0 <= x_i <= 2*pi, -2 <= y <= 2, split by
  the sine boundary y = mean(sin(x_i)).
* t2 -- isotropic unit Gaussians with means shifted to y = -1 and y = +1.
* t3 -- zero-mean Gaussians with covariances I and 4*I.
* t4 -- means as t2, covariances all-ones + I and all-ones + 3*I
  (positively correlated dimensions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._seeds import derive_seed
from .data import Dataset

FAMILIES = ("t1", "t2", "t3", "t4")

_CLASS_NAMES = ("1", "2")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset: family, dimensionality, size, seed."""

    family: str
    dim_p: int
    n_per_class: int
    seed: int

    def __post_init__(self):
        family = str(self.family).lower()
        if family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", family)
        if self.dim_p < 2:
            raise ValueError("dim_p must be at least 2")
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be positive")


def generate(spec: SyntheticSpec, name: str | None = None) -> Dataset:
    """Generate a dataset with exactly ``n_per_class`` samples per class.

    Each class is drawn from its own seeded substream, so the per-class
    sequences are reproducible independently of generation order and the
    output is bit-for-bit deterministic for a given spec.
    """
    blocks = []
    for ci in range(2):
        rng = np.random.default_rng(derive_seed(spec.seed, "class", ci))
        if spec.family == "t1":
            blocks.append(_sample_t1_class(rng, spec.dim_p, spec.n_per_class, ci))
        else:
            mean, cov = _gaussian_parameters(spec.family, spec.dim_p)[ci]
            blocks.append(_sample_gaussian(rng, mean, cov, spec.n_per_class))
    features = np.vstack(blocks)
    labels = np.repeat(np.arange(2, dtype=np.int64), spec.n_per_class)
    if name is None:
        name = f"{spec.family}_p{spec.dim_p}"
    return Dataset(features, labels, _CLASS_NAMES, name)


def sine_boundary_side(points: np.ndarray) -> np.ndarray:
    """Class codes for t1 points: 0 where y > mean(sin(x_i)), else 1."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    boundary = np.sin(points[:, :-1]).mean(axis=1)
    return np.where(points[:, -1] > boundary, 0, 1).astype(np.int64)


def _sample_t1_class(rng, dim_p: int, n: int, target: int) -> np.ndarray:
    # Rejection sampling: the sine boundary does not split the box into
    # equal-probability halves for every p, and exact class balance is wanted.
    kept = []
    remaining = n
    while remaining > 0:
        batch = max(2 * remaining, 256)
        pts = rng.uniform(0.0, 2.0 * math.pi, size=(batch, dim_p))
        pts[:, -1] = rng.uniform(-2.0, 2.0, size=batch)
        match = pts[sine_boundary_side(pts) == target]
        kept.append(match[:remaining])
        remaining -= min(remaining, match.shape[0])
    return np.vstack(kept)


def _gaussian_parameters(family: str, p: int):
    shifted = np.zeros(p)
    mean1, mean2 = shifted.copy(), shifted.copy()
    mean1[-1], mean2[-1] = -1.0, 1.0
    eye = np.eye(p)
    if family == "t2":
        return (mean1, eye), (mean2, eye)
    if family == "t3":
        zero = np.zeros(p)
        return (zero, eye), (zero, 4.0 * eye)
    if family == "t4":
        ones = np.ones((p, p))
        return (mean1, ones + eye), (mean2, ones + 3.0 * eye)
    raise ValueError(f"family {family!r} has no Gaussian parameters")


def _sample_gaussian(rng, mean: np.ndarray, cov: np.ndarray, n: int) -> np.ndarray:
    # Cholesky keeps the construction symmetric-positive-definite by design;
    # all-ones + c*I has eigenvalues c and c+p, so no regularization is needed.
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((n, mean.shape[0]))
    return mean + z @ chol.T


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def gaussian_pair_bayes_error(mean_separation: float, sigma: float = 1.0) -> float:
    """Bayes error of two equal-prior isotropic Gaussians.

    For unit covariance and means ``mean_separation`` apart the optimal
    rule thresholds halfway along the mean axis, so the error is the
    normal tail mass beyond separation / (2*sigma).
    """
    if mean_separation <= 0 or sigma <= 0:
        raise ValueError("mean_separation and sigma must be positive")
    return normal_cdf(-mean_separation / (2.0 * sigma))


def bayes_error_t2(dim_p: int) -> float:
    """Exact Bayes error of the t2 family (independent of dimension)."""
    if dim_p < 2:
        raise ValueError("dim_p must be at least 2")
    return gaussian_pair_bayes_error(2.0, 1.0)
