"""Pure-numpy batch prediction kernels (fallback backend).

Same entry points and decision logic as the numba backend; selection
between the two lives in :mod:`ldknn.backend`. Each kernel returns the
predicted class codes for a matrix of queries.
"""

from __future__ import annotations

import math

import numpy as np

_LOG_2PI = math.log(2.0 * math.pi)


def _tie_break(values: np.ndarray, counts: np.ndarray, nn_class: int) -> int:
    best = values.max()
    candidates = np.nonzero(values == best)[0]
    if candidates.size == 1:
        return int(candidates[0])
    max_count = counts[candidates].max()
    candidates = candidates[counts[candidates] == max_count]
    if candidates.size == 1:
        return int(candidates[0])
    if nn_class in candidates:
        return int(nn_class)
    return int(candidates[0])


def _sq_dists(train_x: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = train_x - q
    return np.einsum("ij,ij->i", diff, diff)


def ld_predict(train_x, train_y, n_classes, test_x, k, use_kde, var_floor, sigma_floor):
    m, d = train_x.shape
    preds = np.empty(test_x.shape[0], dtype=np.int64)
    for qi in range(test_x.shape[0]):
        q = test_x[qi]
        sq = _sq_dists(train_x, q)
        radius_sq = np.partition(sq, k - 1)[k - 1]
        mask = sq <= radius_sq
        nn_class = int(train_y[int(np.argmin(sq))])
        values = np.full(n_classes, -np.inf)
        counts = np.zeros(n_classes, dtype=np.int64)
        for ci in range(n_classes):
            sel = mask & (train_y == ci)
            n_c = int(np.count_nonzero(sel))
            if n_c == 0:
                continue
            counts[ci] = n_c
            pts = train_x[sel]
            if use_kde:
                stds = pts.std(axis=0, ddof=1) if n_c > 1 else np.zeros(d)
                h = 1.06 * np.maximum(stds, sigma_floor) * float(n_c) ** -0.2
                z2 = (((pts - q) / h) ** 2).sum(axis=1)
                shift = (-0.5 * z2).max()
                log_density = (
                    shift + math.log(np.sum(np.exp(-0.5 * z2 - shift)))
                    - math.log(n_c) - np.sum(np.log(h)) - 0.5 * d * _LOG_2PI
                )
            else:
                mean = pts.mean(axis=0)
                var = np.maximum(pts.var(axis=0), var_floor)
                log_density = -0.5 * (
                    d * _LOG_2PI + np.sum(np.log(var)) + np.sum((q - mean) ** 2 / var)
                )
            values[ci] = math.log(n_c) + log_density
        preds[qi] = _tie_break(values, counts, nn_class)
    return preds


def vknn_predict(train_x, train_y, n_classes, test_x, k):
    preds = np.empty(test_x.shape[0], dtype=np.int64)
    for qi in range(test_x.shape[0]):
        sq = _sq_dists(train_x, test_x[qi])
        radius_sq = np.partition(sq, k - 1)[k - 1]
        mask = sq <= radius_sq
        counts = np.bincount(train_y[mask], minlength=n_classes)
        nn_class = int(train_y[int(np.argmin(sq))])
        preds[qi] = _tie_break(counts.astype(np.float64), counts, nn_class)
    return preds


def dw_predict(train_x, train_y, n_classes, test_x, k, dual):
    preds = np.empty(test_x.shape[0], dtype=np.int64)
    for qi in range(test_x.shape[0]):
        sq = _sq_dists(train_x, test_x[qi])
        radius_sq = np.partition(sq, k - 1)[k - 1]
        idx = np.nonzero(sq <= radius_sq)[0]
        # idx is ascending, so a stable sort orders ties by train index.
        order = idx[np.argsort(sq[idx], kind="stable")]
        dists = np.sqrt(sq[order])
        d_1, d_k = dists[0], dists[-1]
        if d_k == d_1:
            weights = np.ones(dists.shape[0])
        else:
            weights = (d_k - dists) / (d_k - d_1)
            if dual:
                weights /= np.arange(1, dists.shape[0] + 1)
        values = np.bincount(train_y[order], weights=weights, minlength=n_classes)
        counts = np.bincount(train_y[order], minlength=n_classes)
        nn_class = int(train_y[int(np.argmin(sq))])
        preds[qi] = _tie_break(values, counts, nn_class)
    return preds


def cap_predict(train_x, train_y, n_classes, test_x, kpc):
    class_indices = [np.nonzero(train_y == ci)[0] for ci in range(n_classes)]
    preds = np.empty(test_x.shape[0], dtype=np.int64)
    for qi in range(test_x.shape[0]):
        q = test_x[qi]
        sq = _sq_dists(train_x, q)
        values = np.empty(n_classes)
        counts = np.zeros(n_classes, dtype=np.int64)
        for ci, members in enumerate(class_indices):
            class_sq = sq[members]
            radius_sq = np.partition(class_sq, kpc - 1)[kpc - 1]
            chosen = members[class_sq <= radius_sq]
            centroid = train_x[chosen].mean(axis=0)
            diff = q - centroid
            values[ci] = -math.sqrt(float(np.dot(diff, diff)))
            counts[ci] = chosen.shape[0]
        nn_class = int(train_y[int(np.argmin(sq))])
        preds[qi] = _tie_break(values, counts, nn_class)
    return preds


def nbc_predict(train_x, train_y, n_classes, test_x, use_kde, var_floor, sigma_floor):
    m, d = train_x.shape
    counts = np.bincount(train_y, minlength=n_classes)
    class_points = [train_x[train_y == ci] for ci in range(n_classes)]
    means, variances, bandwidths = [], [], []
    for pts in class_points:
        if use_kde:
            stds = pts.std(axis=0, ddof=1) if pts.shape[0] > 1 else np.zeros(d)
            bandwidths.append(
                1.06 * np.maximum(stds, sigma_floor) * float(pts.shape[0]) ** -0.2
            )
        else:
            means.append(pts.mean(axis=0))
            variances.append(np.maximum(pts.var(axis=0), var_floor))
    preds = np.empty(test_x.shape[0], dtype=np.int64)
    for qi in range(test_x.shape[0]):
        q = test_x[qi]
        values = np.empty(n_classes)
        for ci in range(n_classes):
            n_c = counts[ci]
            if use_kde:
                h = bandwidths[ci]
                z2 = (((class_points[ci] - q) / h) ** 2).sum(axis=1)
                shift = (-0.5 * z2).max()
                log_density = (
                    shift + math.log(np.sum(np.exp(-0.5 * z2 - shift)))
                    - math.log(n_c) - np.sum(np.log(h)) - 0.5 * d * _LOG_2PI
                )
            else:
                log_density = -0.5 * (
                    d * _LOG_2PI + np.sum(np.log(variances[ci]))
                    + np.sum((q - means[ci]) ** 2 / variances[ci])
                )
            values[ci] = math.log(n_c) + log_density
        sq = _sq_dists(train_x, q)
        nn_class = int(train_y[int(np.argmin(sq))])
        preds[qi] = _tie_break(values, counts, nn_class)
    return preds
