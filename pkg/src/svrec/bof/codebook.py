"""k-medoids codebook and bag-of-features histograms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels

CODEBOOK_SIZE = 20


@dataclass
class Codebook:
    medoids: np.ndarray  # (k, d), rows taken from the training descriptors
    medoid_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cost_history: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.medoids.shape[0]


def pairwise_distances(a: np.ndarray, b: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Euclidean distances, computed from differences (no Gram-trick cancellation)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]))
    for start in range(0, a.shape[0], chunk):
        diff = a[start : start + chunk, None, :] - b[None, :, :]
        out[start : start + chunk] = np.sqrt((diff * diff).sum(axis=2))
    return out


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    nearest = pairwise_distances(x, x[chosen])[:, 0]
    while len(chosen) < k:
        weights = nearest**2
        weights[chosen] = 0.0
        total = weights.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=weights / total))
        else:  # only duplicates of chosen points remain
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        nearest = np.minimum(nearest, pairwise_distances(x, x[[nxt]])[:, 0])
    return np.array(chosen, dtype=np.int64)


def kmedoids(x: np.ndarray, k: int, seed: int = 0, max_iter: int = 100):
    """Voronoi-iteration k-medoids.

    Returns ``(medoid_indices, labels, cost_history)``; ``cost_history`` holds
    the total distance after every assignment and every medoid update, so it
    is non-increasing.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if k < 1 or n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    rng = np.random.default_rng(seed)
    medoids = _plus_plus_init(x, k, rng)
    history = []
    for _ in range(max_iter):
        dist = pairwise_distances(x, x[medoids])
        labels = np.argmin(dist, axis=1)
        labels[medoids] = np.arange(k)  # a medoid always owns itself, even among duplicates
        history.append(float(dist[np.arange(n), labels].sum()))
        new, costs = kernels.medoid_update(x, labels, medoids)
        history.append(float(costs.sum()))
        if np.array_equal(new, medoids):
            break
        medoids = new
    dist = pairwise_distances(x, x[medoids])
    labels = np.argmin(dist, axis=1)
    labels[medoids] = np.arange(k)
    return medoids, labels, history


def build_codebook(descriptors: np.ndarray, k: int = CODEBOOK_SIZE, seed: int = 0,
                   max_iter: int = 100) -> Codebook:
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.ndim != 2 or descriptors.shape[0] < k:
        raise ValueError(f"need at least {k} descriptors to build a codebook, got {len(descriptors)}")
    idx, _, history = kmedoids(descriptors, k, seed=seed, max_iter=max_iter)
    return Codebook(descriptors[idx].copy(), idx, history)


def assign(descriptors: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Nearest medoid per descriptor; ties go to the lowest medoid index."""
    return np.argmin(pairwise_distances(descriptors, codebook.medoids), axis=1)


def encode_histogram(descriptors: np.ndarray, codebook: Codebook) -> np.ndarray:
    """L1-normalised codeword histogram; no descriptors gives the uniform histogram."""
    k = codebook.size
    descriptors = np.asarray(descriptors, dtype=np.float64).reshape(-1, codebook.medoids.shape[1])
    if descriptors.shape[0] == 0:
        return np.full(k, 1.0 / k)
    counts = np.bincount(assign(descriptors, codebook), minlength=k).astype(np.float64)
    return counts / counts.sum()
