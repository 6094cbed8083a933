"""Numba-jitted batch prediction kernels (accelerated backend).

Loop-style twins of :mod:`ldknn._kernels_numpy` with identical decision
logic. Compiled lazily on first use and cached on disk.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def _tie_break(values, counts, nn_class):
    c = values.shape[0]
    best = values[0]
    for ci in range(1, c):
        if values[ci] > best:
            best = values[ci]
    max_count = np.int64(-1)
    for ci in range(c):
        if values[ci] == best and counts[ci] > max_count:
            max_count = counts[ci]
    if values[nn_class] == best and counts[nn_class] == max_count:
        return nn_class
    for ci in range(c):
        if values[ci] == best and counts[ci] == max_count:
            return ci
    return 0


@njit(cache=True)
def _fill_sq_dists(train_x, q, sq):
    m, d = train_x.shape
    nn = 0
    best = np.inf
    for i in range(m):
        s = 0.0
        for j in range(d):
            diff = train_x[i, j] - q[j]
            s += diff * diff
        sq[i] = s
        if s < best:
            best = s
            nn = i
    return nn


@njit(cache=True)
def ld_predict(train_x, train_y, n_classes, test_x, k, use_kde, var_floor, sigma_floor):
    m, d = train_x.shape
    nq = test_x.shape[0]
    preds = np.empty(nq, dtype=np.int64)
    sq = np.empty(m)
    neighbor_idx = np.empty(m, dtype=np.int64)
    mean = np.empty(d)
    spread = np.empty(d)
    terms = np.empty(m)
    for qi in range(nq):
        q = test_x[qi]
        nn = _fill_sq_dists(train_x, q, sq)
        radius_sq = np.partition(sq, k - 1)[k - 1]
        n_neighbors = 0
        for i in range(m):
            if sq[i] <= radius_sq:
                neighbor_idx[n_neighbors] = i
                n_neighbors += 1
        counts = np.zeros(n_classes, dtype=np.int64)
        for t in range(n_neighbors):
            counts[train_y[neighbor_idx[t]]] += 1
        values = np.full(n_classes, -np.inf)
        for ci in range(n_classes):
            n_c = counts[ci]
            if n_c == 0:
                continue
            for j in range(d):
                mean[j] = 0.0
            for t in range(n_neighbors):
                i = neighbor_idx[t]
                if train_y[i] == ci:
                    for j in range(d):
                        mean[j] += train_x[i, j]
            for j in range(d):
                mean[j] /= n_c
            for j in range(d):
                spread[j] = 0.0
            for t in range(n_neighbors):
                i = neighbor_idx[t]
                if train_y[i] == ci:
                    for j in range(d):
                        diff = train_x[i, j] - mean[j]
                        spread[j] += diff * diff
            if use_kde:
                # Silverman bandwidths from the sample standard deviation.
                for j in range(d):
                    sd = math.sqrt(spread[j] / (n_c - 1)) if n_c > 1 else 0.0
                    if sd < sigma_floor:
                        sd = sigma_floor
                    spread[j] = 1.06 * sd * float(n_c) ** -0.2
                log_h_sum = 0.0
                for j in range(d):
                    log_h_sum += math.log(spread[j])
                t_out = 0
                shift = -np.inf
                for t in range(n_neighbors):
                    i = neighbor_idx[t]
                    if train_y[i] == ci:
                        z2 = 0.0
                        for j in range(d):
                            z = (train_x[i, j] - q[j]) / spread[j]
                            z2 += z * z
                        terms[t_out] = -0.5 * z2
                        if terms[t_out] > shift:
                            shift = terms[t_out]
                        t_out += 1
                acc = 0.0
                for t in range(t_out):
                    acc += math.exp(terms[t] - shift)
                log_density = (shift + math.log(acc) - math.log(n_c)
                               - log_h_sum - 0.5 * d * _LOG_2PI)
            else:
                quad = 0.0
                log_var_sum = 0.0
                for j in range(d):
                    var = spread[j] / n_c
                    if var < var_floor:
                        var = var_floor
                    diff = q[j] - mean[j]
                    quad += diff * diff / var
                    log_var_sum += math.log(var)
                log_density = -0.5 * (d * _LOG_2PI + log_var_sum + quad)
            values[ci] = math.log(n_c) + log_density
        preds[qi] = _tie_break(values, counts, train_y[nn])
    return preds


@njit(cache=True)
def vknn_predict(train_x, train_y, n_classes, test_x, k):
    m = train_x.shape[0]
    nq = test_x.shape[0]
    preds = np.empty(nq, dtype=np.int64)
    sq = np.empty(m)
    for qi in range(nq):
        nn = _fill_sq_dists(train_x, test_x[qi], sq)
        radius_sq = np.partition(sq, k - 1)[k - 1]
        counts = np.zeros(n_classes, dtype=np.int64)
        for i in range(m):
            if sq[i] <= radius_sq:
                counts[train_y[i]] += 1
        preds[qi] = _tie_break(counts.astype(np.float64), counts, train_y[nn])
    return preds


@njit(cache=True)
def dw_predict(train_x, train_y, n_classes, test_x, k, dual):
    m = train_x.shape[0]
    nq = test_x.shape[0]
    preds = np.empty(nq, dtype=np.int64)
    sq = np.empty(m)
    for qi in range(nq):
        nn = _fill_sq_dists(train_x, test_x[qi], sq)
        radius_sq = np.partition(sq, k - 1)[k - 1]
        n_sel = 0
        for i in range(m):
            if sq[i] <= radius_sq:
                n_sel += 1
        dists = np.empty(n_sel)
        classes = np.empty(n_sel, dtype=np.int64)
        t = 0
        for i in range(m):
            if sq[i] <= radius_sq:
                dists[t] = math.sqrt(sq[i])
                classes[t] = train_y[i]
                t += 1
        order = np.argsort(dists, kind="mergesort")
        d_1 = dists[order[0]]
        d_k = dists[order[n_sel - 1]]
        values = np.zeros(n_classes)
        counts = np.zeros(n_classes, dtype=np.int64)
        for rank in range(n_sel):
            i = order[rank]
            if d_k == d_1:
                w = 1.0
            else:
                w = (d_k - dists[i]) / (d_k - d_1)
                if dual:
                    w /= rank + 1
            values[classes[i]] += w
            counts[classes[i]] += 1
        preds[qi] = _tie_break(values, counts, train_y[nn])
    return preds


@njit(cache=True)
def cap_predict(train_x, train_y, n_classes, test_x, kpc):
    m, d = train_x.shape
    nq = test_x.shape[0]
    class_sizes = np.zeros(n_classes, dtype=np.int64)
    for i in range(m):
        class_sizes[train_y[i]] += 1
    max_size = class_sizes.max()
    members = np.empty((n_classes, max_size), dtype=np.int64)
    fill = np.zeros(n_classes, dtype=np.int64)
    for i in range(m):
        ci = train_y[i]
        members[ci, fill[ci]] = i
        fill[ci] += 1
    preds = np.empty(nq, dtype=np.int64)
    sq = np.empty(m)
    centroid = np.empty(d)
    for qi in range(nq):
        q = test_x[qi]
        nn = _fill_sq_dists(train_x, q, sq)
        values = np.empty(n_classes)
        counts = np.zeros(n_classes, dtype=np.int64)
        for ci in range(n_classes):
            size = class_sizes[ci]
            class_sq = np.empty(size)
            for t in range(size):
                class_sq[t] = sq[members[ci, t]]
            radius_sq = np.partition(class_sq, kpc - 1)[kpc - 1]
            for j in range(d):
                centroid[j] = 0.0
            chosen = 0
            for t in range(size):
                if class_sq[t] <= radius_sq:
                    i = members[ci, t]
                    for j in range(d):
                        centroid[j] += train_x[i, j]
                    chosen += 1
            s = 0.0
            for j in range(d):
                centroid[j] /= chosen
                diff = q[j] - centroid[j]
                s += diff * diff
            values[ci] = -math.sqrt(s)
            counts[ci] = chosen
        preds[qi] = _tie_break(values, counts, train_y[nn])
    return preds


@njit(cache=True)
def nbc_predict(train_x, train_y, n_classes, test_x, use_kde, var_floor, sigma_floor):
    m, d = train_x.shape
    nq = test_x.shape[0]
    counts = np.zeros(n_classes, dtype=np.int64)
    for i in range(m):
        counts[train_y[i]] += 1
    means = np.zeros((n_classes, d))
    for i in range(m):
        for j in range(d):
            means[train_y[i], j] += train_x[i, j]
    for ci in range(n_classes):
        for j in range(d):
            means[ci, j] /= counts[ci]
    spread = np.zeros((n_classes, d))
    for i in range(m):
        ci = train_y[i]
        for j in range(d):
            diff = train_x[i, j] - means[ci, j]
            spread[ci, j] += diff * diff
    if use_kde:
        for ci in range(n_classes):
            n_c = counts[ci]
            for j in range(d):
                sd = math.sqrt(spread[ci, j] / (n_c - 1)) if n_c > 1 else 0.0
                if sd < sigma_floor:
                    sd = sigma_floor
                spread[ci, j] = 1.06 * sd * float(n_c) ** -0.2
    else:
        for ci in range(n_classes):
            for j in range(d):
                var = spread[ci, j] / counts[ci]
                spread[ci, j] = var if var > var_floor else var_floor
    preds = np.empty(nq, dtype=np.int64)
    sq = np.empty(m)
    terms = np.empty(m)
    for qi in range(nq):
        q = test_x[qi]
        nn = _fill_sq_dists(train_x, q, sq)
        values = np.empty(n_classes)
        for ci in range(n_classes):
            n_c = counts[ci]
            if use_kde:
                log_h_sum = 0.0
                for j in range(d):
                    log_h_sum += math.log(spread[ci, j])
                t_out = 0
                shift = -np.inf
                for i in range(m):
                    if train_y[i] == ci:
                        z2 = 0.0
                        for j in range(d):
                            z = (train_x[i, j] - q[j]) / spread[ci, j]
                            z2 += z * z
                        terms[t_out] = -0.5 * z2
                        if terms[t_out] > shift:
                            shift = terms[t_out]
                        t_out += 1
                acc = 0.0
                for t in range(t_out):
                    acc += math.exp(terms[t] - shift)
                log_density = (shift + math.log(acc) - math.log(n_c)
                               - log_h_sum - 0.5 * d * _LOG_2PI)
            else:
                quad = 0.0
                log_var_sum = 0.0
                for j in range(d):
                    diff = q[j] - means[ci, j]
                    quad += diff * diff / spread[ci, j]
                    log_var_sum += math.log(spread[ci, j])
                log_density = -0.5 * (d * _LOG_2PI + log_var_sum + quad)
            values[ci] = math.log(n_c) + log_density
        preds[qi] = _tie_break(values, counts, train_y[nn])
    return preds
