"""Local probability density models fitted inside a neighborhood.

Two estimators are provided for the density of one class's neighbors
around a query point:

* Gaussian model estimation (GME): a maximum-likelihood Gaussian with
  diagonal covariance (per-dimension population variances).
* Kernel density estimation (KDE): one Gaussian kernel per neighbor
  with per-dimension bandwidths from Silverman's rule of thumb.

A fitted global-style model integrates to one over the whole space; to
act as a density local to a region it can be renormalized by its
integral over that region (:func:`local_normalizer`). All density math
runs in log space; ``pdf``-style accessors exponentiate on return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Floor for variances and kernel-bandwidth standard deviations
# (post-normalization units). Covers single-neighbor fits and
# duplicate-point neighborhoods without special cases downstream.
VAR_FLOOR = 1e-9
SIGMA_FLOOR = 1e-9

# Monte-Carlo integral estimates are floored at a tiny positive value so
# the normalized density stays well-defined.
NORMALIZER_FLOOR = 1e-300

_LOG_2PI = math.log(2.0 * math.pi)

_EVAL_CHUNK = 8192


def _logsumexp(a: np.ndarray, axis=None):
    m = np.max(a, axis=axis, keepdims=axis is not None)
    if axis is None:
        if not np.isfinite(m):
            return float(m)
        return float(m + np.log(np.sum(np.exp(a - m))))
    m = np.where(np.isfinite(m), m, 0.0) if not np.all(np.isfinite(m)) else m
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def gaussian_logpdf_diag(x, mean, diag_var):
    """Log density of a multivariate normal with diagonal covariance.

    ``x`` may be a single vector or a matrix of row vectors; returns a
    scalar or a vector accordingly.
    """
    mean = np.asarray(mean, dtype=np.float64)
    diag_var = np.asarray(diag_var, dtype=np.float64)
    if mean.shape != diag_var.shape or mean.ndim != 1:
        raise ValueError("mean and diag_var must be 1-D vectors of equal length")
    if np.any(diag_var <= 0):
        raise ValueError("variances must be positive")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != mean.shape[0]:
        raise ValueError(f"x has {pts.shape[1]} dims, model has {mean.shape[0]}")
    log_norm = -0.5 * (mean.shape[0] * _LOG_2PI + np.sum(np.log(diag_var)))
    quad = np.sum((pts - mean) ** 2 / diag_var, axis=1)
    out = log_norm - 0.5 * quad
    return float(out[0]) if single else out


def gaussian_pdf_diag(x, mean, diag_var):
    """Density of a diagonal-covariance normal (exp of the log form)."""
    return np.exp(gaussian_logpdf_diag(x, mean, diag_var))


@dataclass(frozen=True)
class GmeModel:
    """Maximum-likelihood diagonal Gaussian fitted to a set of neighbors."""

    mean: np.ndarray
    diag_var: np.ndarray
    n_support: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        var = np.asarray(self.diag_var, dtype=np.float64)
        if mean.shape != var.shape or mean.ndim != 1:
            raise ValueError("mean and diag_var must be 1-D vectors of equal length")
        if np.any(var <= 0):
            raise ValueError("variances must be positive")
        mean.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "diag_var", var)

    def logpdf(self, x):
        return gaussian_logpdf_diag(x, self.mean, self.diag_var)

    def pdf(self, x):
        return np.exp(self.logpdf(x))


def fit_gme(neighbors) -> GmeModel:
    """Fit a diagonal Gaussian by maximum likelihood.

    Uses the population variance (divide by the neighbor count); each
    per-dimension variance is floored at ``VAR_FLOOR``, which also
    handles single-neighbor fits.
    """
    pts = np.atleast_2d(np.asarray(neighbors, dtype=np.float64))
    if pts.size == 0:
        raise ValueError("cannot fit a model to an empty neighbor set")
    mean = pts.mean(axis=0)
    var = np.maximum(pts.var(axis=0), VAR_FLOOR)
    return GmeModel(mean=mean, diag_var=var, n_support=pts.shape[0])


def silverman_bandwidth(std_dev: float, n: int) -> float:
    """Rule-of-thumb kernel bandwidth 1.06 * sigma * n^(-1/5).

    ``std_dev`` is floored at ``SIGMA_FLOOR`` first so degenerate
    dimensions still get a positive bandwidth.
    """
    if std_dev < 0:
        raise ValueError("std_dev must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    return 1.06 * max(float(std_dev), SIGMA_FLOOR) * float(n) ** -0.2


@dataclass(frozen=True)
class KdeModel:
    """Gaussian-kernel density over support points with per-dimension bandwidths."""

    support: np.ndarray
    bandwidths: np.ndarray
    n_support: int

    def __post_init__(self):
        support = np.atleast_2d(np.asarray(self.support, dtype=np.float64))
        bandwidths = np.asarray(self.bandwidths, dtype=np.float64)
        if support.size == 0:
            raise ValueError("support must be non-empty")
        if bandwidths.ndim != 1 or bandwidths.shape[0] != support.shape[1]:
            raise ValueError("bandwidths must be a vector matching the support dimension")
        if np.any(bandwidths <= 0):
            raise ValueError("bandwidths must be positive")
        support.setflags(write=False)
        bandwidths.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "bandwidths", bandwidths)

    def logpdf(self, x):
        """Log of the kernel mixture density, accumulated with a max shift."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        n, d = self.support.shape
        if pts.shape[1] != d:
            raise ValueError(f"x has {pts.shape[1]} dims, model has {d}")
        base = -math.log(n) - np.sum(np.log(self.bandwidths)) - 0.5 * d * _LOG_2PI
        out = np.empty(pts.shape[0], dtype=np.float64)
        for start in range(0, pts.shape[0], _EVAL_CHUNK):
            chunk = pts[start:start + _EVAL_CHUNK]
            z2 = np.zeros((chunk.shape[0], n), dtype=np.float64)
            for j in range(d):
                z2 += ((chunk[:, j, None] - self.support[None, :, j])
                       / self.bandwidths[j]) ** 2
            out[start:start + _EVAL_CHUNK] = _logsumexp(-0.5 * z2, axis=1)
        out += base
        return float(out[0]) if single else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))


def fit_kde(neighbors) -> KdeModel:
    """Fit a Gaussian-kernel density with Silverman bandwidths.

    Each dimension's bandwidth is computed independently from the
    neighbors' sample standard deviation (n-1 denominator; zero for a
    single neighbor, in which case the floor applies).
    """
    pts = np.atleast_2d(np.asarray(neighbors, dtype=np.float64))
    if pts.size == 0:
        raise ValueError("cannot fit a model to an empty neighbor set")
    n = pts.shape[0]
    stds = pts.std(axis=0, ddof=1) if n > 1 else np.zeros(pts.shape[1])
    bandwidths = np.array([silverman_bandwidth(s, n) for s in stds])
    return KdeModel(support=pts, bandwidths=bandwidths, n_support=n)


def kde_density(model: KdeModel, x):
    """Kernel mixture density at ``x``."""
    return model.pdf(x)


def kde_log_density(model: KdeModel, x):
    """Log-space companion of :func:`kde_density`."""
    return model.logpdf(x)


@dataclass(frozen=True)
class NormalizationMode:
    """How to normalize a fitted model into a region-local density.

    ``omit`` uses the constant 1 (the class-wise integrals over a shared
    neighborhood are typically nearly equal, so skipping them rarely
    changes the decision); ``monte_carlo`` estimates the integral over
    the neighborhood ball by uniform sampling.
    """

    mode: str = "omit"
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("omit", "monte_carlo"):
            raise ValueError(f"unknown normalization mode {self.mode!r}")
        if self.mode == "monte_carlo" and self.samples < 100:
            raise ValueError("monte_carlo normalization needs at least 100 samples")

    @staticmethod
    def omit() -> "NormalizationMode":
        return NormalizationMode("omit")

    @staticmethod
    def monte_carlo(samples: int, seed: int = 0) -> "NormalizationMode":
        return NormalizationMode("monte_carlo", samples, seed)


def ball_volume(dim: int, radius: float) -> float:
    """Volume of the Euclidean ball."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0) * radius ** dim


def sample_in_ball(rng: np.random.Generator, center: np.ndarray, radius: float,
                   n: int) -> np.ndarray:
    """Uniform samples in the Euclidean ball around ``center``."""
    d = center.shape[0]
    direction = rng.standard_normal((n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    scale = radius * rng.random(n) ** (1.0 / d)
    return center + scale[:, None] * direction


def local_normalizer(model, region_center, region_radius: float,
                     mode: NormalizationMode) -> float:
    """Integral of ``model``'s density over the ball around the query.

    Dividing a fitted density by this value makes it integrate to one
    over the neighborhood ball. In ``omit`` mode the result is exactly
    1; in ``monte_carlo`` mode it is a uniform-sampling estimate of the
    ball integral, floored at a tiny positive constant.
    """
    region_radius = float(region_radius)
    if region_radius <= 0:
        raise ValueError("region_radius must be positive")
    if mode.mode == "omit":
        return 1.0
    center = np.asarray(region_center, dtype=np.float64).reshape(-1)
    rng = np.random.default_rng(mode.seed)
    points = sample_in_ball(rng, center, region_radius, mode.samples)
    mean_density = float(np.mean(model.pdf(points)))
    volume = ball_volume(center.shape[0], region_radius)
    return max(mean_density * volume, NORMALIZER_FLOOR)
