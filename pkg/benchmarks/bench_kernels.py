"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Both twins are imported directly, so ``SVREC_NUMBA`` does not matter here.
The first numba call (compilation or cache load) is excluded from timing.
"""

import argparse
import time

import numpy as np

from svrec import _accel, kernels
from svrec.bof.svm import chi2_gram


def _time(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(rng):
    hist = rng.dirichlet(np.ones(20), size=300)
    y = np.where(np.arange(300) < 150, 1.0, -1.0)
    hist[y > 0, :5] += 0.2
    hist /= hist.sum(axis=1, keepdims=True)
    kmat = chi2_gram(hist, hist)

    x = rng.random((1500, 162))
    medoids = np.sort(rng.choice(1500, 20, replace=False))
    d = ((x[:, None, :] - x[medoids][None]) ** 2).sum(axis=2)
    labels = np.argmin(d, axis=1)

    t, h, w = 48, 72, 96
    hog_bin = rng.integers(0, 4, (t, h, w))
    hog_mag = rng.random((t, h, w))
    hof_bin = rng.integers(0, 5, (t, h, w))
    pts = np.stack([rng.integers(0, w, 60), rng.integers(0, h, 60), rng.integers(0, t, 60)], axis=1)
    half_xy = np.full(60, 14)
    half_t = np.full(60, 6)

    return {
        "chi2_gram 300x300x20": ("chi2_gram", (hist, hist)),
        "smo n=300": ("smo", (kmat, y, 1.0, 1e-3, 10 * 300 * 300)),
        "medoid_update n=1500": ("medoid_update", (x, labels, medoids)),
        "cell_histograms 60 pts": ("cell_histograms", (hog_bin, hog_mag, hof_bin, pts, half_xy, half_t)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"numba available: {_accel.HAVE_NUMBA}")
    print(f"{'kernel':<26}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for label, (name, fargs) in _cases(np.random.default_rng(args.seed)).items():
        t_nb = _time(getattr(kernels, f"{name}_nb"), fargs, args.repeat)
        t_np = _time(getattr(kernels, f"{name}_np"), fargs, args.repeat)
        print(f"{label:<26}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
