"""Chi-square kernel SVM: binary SMO machines combined one-vs-one."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .. import kernels

KKT_TOL = 1e-3


class NotTrainedError(RuntimeError):
    pass


def chi2_kernel(m, n) -> float:
    """``1 - 0.5 * sum((m - n)**2 / (m + n))``; bins with ``m + n == 0`` add nothing."""
    m = np.asarray(m, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    if m.shape != n.shape:
        raise ValueError(f"bin count mismatch: {m.shape} vs {n.shape}")
    den = m + n
    terms = np.divide((m - n) ** 2, den, out=np.zeros_like(den), where=den != 0)
    return float(1.0 - 0.5 * terms.sum())


def chi2_gram(a, b) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"bin count mismatch: {a.shape[1]} vs {b.shape[1]}")
    return kernels.chi2_gram(a, b)


def dual_objective(kmat, y, alpha) -> float:
    """``0.5 * a'Qa - sum(a)`` with ``Q = yy' * K`` (the quantity SMO minimises)."""
    ya = y * alpha
    return float(0.5 * ya @ kmat @ ya - alpha.sum())


def _rho(y, grad, alpha, c) -> float:
    yg = y * grad
    upper = alpha >= c
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        return float(yg[free].mean())
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    return float(0.5 * (ub + lb))


@dataclass
class BinaryMachine:
    positive: int
    negative: int
    support: np.ndarray  # (s, bins)
    coef: np.ndarray  # alpha * y, (s,)
    bias: float
    alpha: np.ndarray  # all duals of the training pair, kept for inspection
    y: np.ndarray
    iterations: int = 0

    def decision(self, h: np.ndarray) -> np.ndarray:
        h = np.atleast_2d(h)
        if self.support.shape[0] == 0:
            return np.full(h.shape[0], self.bias)
        return chi2_gram(h, self.support) @ self.coef + self.bias


def solve_binary(kmat: np.ndarray, y: np.ndarray, c: float = 1.0, tol: float = KKT_TOL,
                 max_iter: int | None = None):
    """SMO on one binary problem. Returns ``(alpha, bias, iterations)``."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if max_iter is None:
        max_iter = 10 * n * n
    alpha, grad, its = kernels.smo(np.ascontiguousarray(kmat, dtype=np.float64), y, float(c), float(tol), int(max_iter))
    return alpha, -_rho(y, grad, alpha, c), int(its)


def train_binary(hist: np.ndarray, y: np.ndarray, c: float = 1.0, positive: int = 1,
                 negative: int = -1) -> BinaryMachine:
    kmat = chi2_gram(hist, hist)
    alpha, bias, its = solve_binary(kmat, y, c)
    keep = alpha > 0
    return BinaryMachine(positive, negative, hist[keep].copy(), (alpha * y)[keep], bias, alpha, np.asarray(y, float), its)


@dataclass
class KsvmModel:
    classes: np.ndarray
    machines: list[BinaryMachine]
    c: float = 1.0
    codebook: object = None
    meta: dict = field(default_factory=dict)

    def votes(self, h: np.ndarray) -> np.ndarray:
        h = np.atleast_2d(np.asarray(h, dtype=np.float64))
        counts = np.zeros((h.shape[0], len(self.classes)), dtype=np.int64)
        pos = {int(c): i for i, c in enumerate(self.classes)}
        for m in self.machines:
            f = m.decision(h)
            winner = np.where(f >= 0, pos[m.positive], pos[m.negative])
            counts[np.arange(h.shape[0]), winner] += 1
        return counts


def train_ksvm(histograms, labels, c: float = 1.0, codebook=None) -> KsvmModel:
    """One binary machine per unordered class pair; the lower class is the positive side."""
    hist = np.asarray(histograms, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if hist.ndim != 2 or hist.shape[0] == 0:
        raise ValueError("no training histograms")
    if labels.shape != (hist.shape[0],):
        raise ValueError(f"{labels.shape[0]} labels for {hist.shape[0]} histograms")
    if np.any(labels < 0):
        raise ValueError("class labels must be non-negative")
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError(f"need at least two classes, got {classes.tolist()}")
    machines = []
    for a, b in itertools.combinations(classes.tolist(), 2):
        rows = (labels == a) | (labels == b)
        y = np.where(labels[rows] == a, 1.0, -1.0)
        machines.append(train_binary(hist[rows], y, c, int(a), int(b)))
    return KsvmModel(classes, machines, float(c), codebook)


def predict_ksvm(model: KsvmModel | None, h) -> int | np.ndarray:
    """Max-votes class; vote ties go to the lowest class index.

    A single histogram yields an ``int``; a 2-D batch yields an array.
    """
    if model is None or not model.machines:
        raise NotTrainedError("model has no trained machines")
    h = np.asarray(h, dtype=np.float64)
    winners = model.classes[np.argmax(model.votes(h), axis=1)]
    return int(winners[0]) if h.ndim == 1 else winners
