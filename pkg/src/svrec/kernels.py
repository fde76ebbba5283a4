"""Hot inner loops of the feature recognizer.

Each kernel has an ``_nb`` twin compiled by numba and an ``_np`` twin built
from vectorised numpy. The public name is bound at import time according to
``SVREC_NUMBA`` (see :mod:`svrec._accel`). Both twins implement the same
arithmetic; results agree to rounding (the SMO twins agree exactly).
"""

import numpy as np

from ._accel import USE_NUMBA, njit

HOG_BINS = 4
HOF_BINS = 5
GRID_X = 3
GRID_Y = 3
GRID_T = 2
N_CELLS = GRID_X * GRID_Y * GRID_T
DESCRIPTOR_SIZE = N_CELLS * (HOG_BINS + HOF_BINS)  # 162


# --------------------------------------------------------------------------
# chi-square kernel Gram matrix


@njit
def chi2_gram_nb(a, b):
    n, d = a.shape
    m = b.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                den = a[i, k] + b[j, k]
                if den > 0.0:
                    diff = a[i, k] - b[j, k]
                    s += diff * diff / den
            out[i, j] = 1.0 - 0.5 * s
    return out


def chi2_gram_np(a, b, chunk=256):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]))
    for start in range(0, a.shape[0], chunk):
        x = a[start : start + chunk, None, :]
        num = (x - b[None]) ** 2
        den = x + b[None]
        terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        out[start : start + chunk] = 1.0 - 0.5 * terms.sum(axis=2)
    return out


# --------------------------------------------------------------------------
# SMO with second-order working set selection


@njit
def smo_nb(kmat, y, c, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    tau = 1e-12
    it = 0
    while it < max_iter:
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < c) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v > gmax:
                    gmax = v
                    i = t
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < c):
                v = -y[t] * grad[t]
                if v < gmin:
                    gmin = v
                if i >= 0 and v < gmax:
                    bdiff = gmax - v
                    a = kmat[i, i] + kmat[t, t] - 2.0 * kmat[i, t]
                    if a <= 0.0:
                        a = tau
                    obj = -(bdiff * bdiff) / a
                    if obj < best:
                        best = obj
                        j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            break
        it += 1
        yi = y[i]
        yj = y[j]
        quad = kmat[i, i] + kmat[j, j] - 2.0 * kmat[i, j]
        if quad <= 0.0:
            quad = tau
        old_i = alpha[i]
        old_j = alpha[j]
        if yi != yj:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai = old_i + delta
            aj = old_j + delta
            if diff > 0.0:
                if aj < 0.0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = -diff
            if diff > 0.0:
                if ai > c:
                    ai = c
                    aj = c - diff
            else:
                if aj > c:
                    aj = c
                    ai = c + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai = old_i - delta
            aj = old_j + delta
            if total > c:
                if ai > c:
                    ai = c
                    aj = total - c
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = total
            if total > c:
                if aj > c:
                    aj = c
                    ai = total - c
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = total
        alpha[i] = ai
        alpha[j] = aj
        di = ai - old_i
        dj = aj - old_j
        for t in range(n):
            grad[t] += y[t] * (yi * kmat[t, i] * di + yj * kmat[t, j] * dj)
    return alpha, grad, it


def _clip_pair(yi, yj, old_i, old_j, grad_i, grad_j, quad, c):
    if yi != yj:
        delta = (-grad_i - grad_j) / quad
        diff = old_i - old_j
        ai, aj = old_i + delta, old_j + delta
        if diff > 0.0:
            if aj < 0.0:
                aj, ai = 0.0, diff
        elif ai < 0.0:
            ai, aj = 0.0, -diff
        if diff > 0.0:
            if ai > c:
                ai, aj = c, c - diff
        elif aj > c:
            aj, ai = c, c + diff
    else:
        delta = (grad_i - grad_j) / quad
        total = old_i + old_j
        ai, aj = old_i - delta, old_j + delta
        if total > c:
            if ai > c:
                ai, aj = c, total - c
        elif aj < 0.0:
            aj, ai = 0.0, total
        if total > c:
            if aj > c:
                aj, ai = c, total - c
        elif ai < 0.0:
            ai, aj = 0.0, total
    return ai, aj


def smo_np(kmat, y, c, tol, max_iter):
    kmat = np.asarray(kmat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(kmat).copy()
    tau = 1e-12
    it = 0
    pos = y > 0
    while it < max_iter:
        up = (pos & (alpha < c)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < c))
        score = -y * grad
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        gmax = score[i]
        gmin = score[low].min()
        cand = low & (score < gmax)
        if not cand.any() or gmax - gmin < tol:
            break
        a = diag[i] + diag - 2.0 * kmat[i]
        a = np.where(a <= 0.0, tau, a)
        bdiff = gmax - score
        obj = np.where(cand, -(bdiff * bdiff) / a, np.inf)
        j = int(np.argmin(obj))
        it += 1
        quad = kmat[i, i] + kmat[j, j] - 2.0 * kmat[i, j]
        if quad <= 0.0:
            quad = tau
        old_i, old_j = alpha[i], alpha[j]
        ai, aj = _clip_pair(y[i], y[j], old_i, old_j, grad[i], grad[j], quad, c)
        alpha[i], alpha[j] = ai, aj
        grad += y * (y[i] * kmat[:, i] * (ai - old_i) + y[j] * kmat[:, j] * (aj - old_j))
    return alpha, grad, it


# --------------------------------------------------------------------------
# k-medoids: best member of every cluster


@njit
def medoid_update_nb(x, labels, medoids):
    k = medoids.shape[0]
    n, d = x.shape
    new = medoids.copy()
    costs = np.zeros(k)
    for c in range(k):
        members = np.where(labels == c)[0]
        m = members.shape[0]
        if m == 0:
            continue
        best_cost = np.inf
        best = -1
        current_cost = np.inf
        for a in range(m):
            ia = members[a]
            s = 0.0
            for b in range(m):
                ib = members[b]
                acc = 0.0
                for f in range(d):
                    diff = x[ia, f] - x[ib, f]
                    acc += diff * diff
                s += np.sqrt(acc)
            if ia == medoids[c]:
                current_cost = s
            if s < best_cost:
                best_cost = s
                best = ia
        if current_cost <= best_cost:
            new[c] = medoids[c]
            costs[c] = current_cost
        else:
            new[c] = best
            costs[c] = best_cost
    return new, costs


def medoid_update_np(x, labels, medoids, chunk=512):
    x = np.asarray(x, dtype=np.float64)
    new = np.array(medoids, copy=True)
    costs = np.zeros(len(medoids))
    for c, current in enumerate(medoids):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            continue
        pts = x[members]
        sums = np.empty(members.size)
        for start in range(0, members.size, chunk):
            diff = pts[start : start + chunk, None, :] - pts[None, :, :]
            sums[start : start + chunk] = np.sqrt((diff * diff).sum(axis=2)).sum(axis=1)
        best = int(np.argmin(sums))
        here = np.flatnonzero(members == current)
        if here.size and sums[here[0]] <= sums[best]:
            new[c], costs[c] = current, sums[here[0]]
        else:
            new[c], costs[c] = members[best], sums[best]
    return new, costs


# --------------------------------------------------------------------------
# HoG / HoF cell histograms


@njit
def cell_histograms_nb(hog_bin, hog_mag, hof_bin, points, half_xy, half_t):
    n_t, h, w = hog_bin.shape
    p = points.shape[0]
    out = np.zeros((p, DESCRIPTOR_SIZE))
    for q in range(p):
        px = points[q, 0]
        py = points[q, 1]
        pt = points[q, 2]
        hx = half_xy[q]
        ht = half_t[q]
        span = 2 * hx
        tspan = 2 * ht
        for it in range(tspan):
            t = min(max(pt - ht + it, 0), n_t - 1)
            ct = (it * GRID_T) // tspan
            for iy in range(span):
                yy = min(max(py - hx + iy, 0), h - 1)
                cy = (iy * GRID_Y) // span
                for ix in range(span):
                    xx = min(max(px - hx + ix, 0), w - 1)
                    cx = (ix * GRID_X) // span
                    cell = (ct * GRID_Y + cy) * GRID_X + cx
                    out[q, cell * HOG_BINS + hog_bin[t, yy, xx]] += hog_mag[t, yy, xx]
                    out[q, N_CELLS * HOG_BINS + cell * HOF_BINS + hof_bin[t, yy, xx]] += 1.0
    return out


def cell_histograms_np(hog_bin, hog_mag, hof_bin, points, half_xy, half_t):
    n_t, h, w = hog_bin.shape
    out = np.zeros((len(points), DESCRIPTOR_SIZE))
    for q, (px, py, pt) in enumerate(np.asarray(points)):
        hx, ht = int(half_xy[q]), int(half_t[q])
        span, tspan = 2 * hx, 2 * ht
        ts = np.clip(np.arange(pt - ht, pt + ht), 0, n_t - 1)
        ys = np.clip(np.arange(py - hx, py + hx), 0, h - 1)
        xs = np.clip(np.arange(px - hx, px + hx), 0, w - 1)
        ct = (np.arange(tspan) * GRID_T) // tspan
        cy = (np.arange(span) * GRID_Y) // span
        cx = (np.arange(span) * GRID_X) // span
        cell = (ct[:, None, None] * GRID_Y + cy[None, :, None]) * GRID_X + cx[None, None, :]
        idx = np.ix_(ts, ys, xs)
        hog_idx = (cell * HOG_BINS + hog_bin[idx]).ravel()
        hof_idx = (cell * HOF_BINS + hof_bin[idx]).ravel()
        out[q, : N_CELLS * HOG_BINS] = np.bincount(
            hog_idx, weights=hog_mag[idx].ravel(), minlength=N_CELLS * HOG_BINS
        )
        out[q, N_CELLS * HOG_BINS :] = np.bincount(hof_idx, minlength=N_CELLS * HOF_BINS)
    return out


if USE_NUMBA:
    chi2_gram = chi2_gram_nb
    smo = smo_nb
    medoid_update = medoid_update_nb
    cell_histograms = cell_histograms_nb
else:
    chi2_gram = chi2_gram_np
    smo = smo_np
    medoid_update = medoid_update_np
    cell_histograms = cell_histograms_np
