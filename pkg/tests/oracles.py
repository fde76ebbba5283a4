"""Independent brute-force references used by unit and acceptance tests."""

import itertools
import math
from fractions import Fraction

import numpy as np

from svrec.neural import NetworkConfig, init_network, loss_and_gradients

TINY_NET = NetworkConfig(input_side=8, conv_filters=(2, 3, 2), full4=5, rnn=(3, 4, 3), outputs=3, seed=1)


def chi2_oracle(m, n):
    total = 0.0
    for a, b in zip(m, n):
        if a + b != 0:
            total += (a - b) ** 2 / (a + b)
    return 1.0 - 0.5 * total


def vote_oracle(seq):
    best, best_count = None, -1
    for c in sorted(set(seq)):
        count = sum(1 for s in seq if s == c)
        if count > best_count:
            best, best_count = c, count
    return best


def fuse_oracle(streams):
    """Exact rational products per frame, first maximum wins."""
    n_frames, n_cls = len(streams[0]), len(streams[0][0])
    floor = Fraction(1e-12)
    out = []
    for t in range(n_frames):
        prods = [math.prod(max(Fraction(s[t][a]), floor) for s in streams) for a in range(n_cls)]
        out.append(max(range(n_cls), key=lambda a: (prods[a], -a)))
    return out


def pareto_oracle(bitrates, accs):
    keep = []
    for i in range(len(bitrates)):
        dominated = False
        for j in range(len(bitrates)):
            if j == i:
                continue
            if (bitrates[j] <= bitrates[i] and accs[j] >= accs[i]
                    and (bitrates[j] < bitrates[i] or accs[j] > accs[i])):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def dual_objective(kmat, y, alpha):
    ya = y * alpha
    return 0.5 * ya @ kmat @ ya - alpha.sum()


def svm_dual_oracle(kmat, y, c, grid=20):
    """Minimum of the SVM dual by active-set enumeration plus a grid scan.

    Every variable is tried at 0, at C, or free; the free ones solve the KKT
    system. The grid scan fixes the last dual by the equality constraint.
    """
    n = len(y)
    q = np.outer(y, y) * kmat
    best = np.inf
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        free = np.flatnonzero(pattern == 2)
        alpha = np.where(pattern == 1, c, 0.0).astype(float)
        if free.size:
            fixed = np.flatnonzero(pattern != 2)
            a = np.zeros((free.size + 1, free.size + 1))
            a[:-1, :-1] = q[np.ix_(free, free)]
            a[:-1, -1] = y[free]
            a[-1, :-1] = y[free]
            rhs = np.concatenate([1.0 - q[np.ix_(free, fixed)] @ alpha[fixed], [-(y[fixed] @ alpha[fixed])]])
            sol = np.linalg.lstsq(a, rhs, rcond=None)[0]
            alpha[free] = sol[:-1]
        if np.any(alpha < -1e-9) or np.any(alpha > c + 1e-9) or abs(y @ alpha) > 1e-7:
            continue
        best = min(best, dual_objective(kmat, y, np.clip(alpha, 0, c)))
    levels = np.linspace(0, c, grid + 1)
    rest = np.array(list(itertools.product(levels, repeat=n - 2)), dtype=float).reshape(len(levels) ** (n - 2), n - 2)
    for first in levels:
        head = np.column_stack([np.full(len(rest), first), rest])
        last = -(head @ y[:-1]) * y[-1]
        ok = (last >= -1e-12) & (last <= c + 1e-12)
        alpha = np.column_stack([head[ok], last[ok]])
        if len(alpha):
            ya = alpha * y
            best = min(best, float((0.5 * np.einsum("ij,jk,ik->i", ya, kmat, ya) - alpha.sum(axis=1)).min()))
    return best


def kmedoids_cost(x, medoid_rows):
    d = np.sqrt(((x[:, None, :] - x[medoid_rows][None]) ** 2).sum(axis=2))
    return d.min(axis=1).sum()


def numeric_gradient_errors(config=None, frames=5, seed=0, eps=1e-5):
    """Max elementwise relative error per parameter group vs central differences."""
    config = config or TINY_NET
    model = init_network(config, dtype=np.float64)
    rng = np.random.default_rng(seed)
    for p in model.params.values():
        p += rng.normal(0, 0.1, p.shape)  # move biases off zero so every path is exercised
    x = rng.random((frames, config.input_side, config.input_side))
    y = rng.integers(0, config.outputs, frames)
    _, grads = loss_and_gradients(model, x, y)
    errors = {}
    for name, p in model.params.items():
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            lp, _ = loss_and_gradients(model, x, y)
            p[idx] = old - eps
            lm, _ = loss_and_gradients(model, x, y)
            p[idx] = old
            num[idx] = (lp - lm) / (2 * eps)
        denom = np.maximum(np.maximum(np.abs(grads[name]), np.abs(num)), 1e-8)
        errors[name] = float((np.abs(grads[name] - num) / denom).max())
    return errors
