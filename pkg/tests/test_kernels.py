import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svrec import _accel, kernels

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_chi2_twins(seed):
    rng = np.random.default_rng(seed)
    a = rng.dirichlet(np.full(8, 0.3), 7)
    b = rng.dirichlet(np.full(8, 0.3), 5)
    assert np.allclose(kernels.chi2_gram_nb(a, b), kernels.chi2_gram_np(a, b), atol=1e-12)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.1, 1.0, 10.0]))
def test_smo_twins_agree_exactly(seed, c):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    h = rng.dirichlet(np.ones(6), n)
    y = rng.choice([-1.0, 1.0], n)
    y[0], y[-1] = 1.0, -1.0
    k = kernels.chi2_gram_np(h, h)
    a_nb, g_nb, it_nb = kernels.smo_nb(k, y, c, 1e-3, 10 * n * n)
    a_np, g_np, it_np = kernels.smo_np(k, y, c, 1e-3, 10 * n * n)
    assert it_nb == it_np
    assert np.allclose(a_nb, a_np, atol=1e-10) and np.allclose(g_nb, g_np, atol=1e-10)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_medoid_update_twins(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.random((25, 4))
    medoids = np.sort(rng.choice(25, k, replace=False))
    labels = np.argmin(((x[:, None] - x[medoids][None]) ** 2).sum(2), axis=1)
    labels[medoids] = np.arange(k)
    n_nb, c_nb = kernels.medoid_update_nb(x, labels, medoids)
    n_np, c_np = kernels.medoid_update_np(x, labels, medoids)
    assert np.array_equal(n_nb, n_np)
    assert np.allclose(c_nb, c_np)


@needs_numba
@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_cell_histogram_twins(seed):
    rng = np.random.default_rng(seed)
    t, h, w = 10, 20, 24
    hog_bin = rng.integers(0, 4, (t, h, w))
    hog_mag = rng.random((t, h, w))
    hof_bin = rng.integers(0, 5, (t, h, w))
    pts = np.stack([rng.integers(0, w, 6), rng.integers(0, h, 6), rng.integers(0, t, 6)], axis=1)
    hxy = rng.integers(2, 15, 6)
    ht = rng.integers(1, 7, 6)
    a = kernels.cell_histograms_nb(hog_bin, hog_mag, hof_bin, pts, hxy, ht)
    b = kernels.cell_histograms_np(hog_bin, hog_mag, hof_bin, pts, hxy, ht)
    assert np.allclose(a, b)
    # HoF counts every voxel of the cuboid once
    assert np.allclose(b[:, 72:].sum(axis=1), 8 * hxy**2 * ht)


def test_medoid_update_keeps_current_on_tie():
    x = np.array([[0.0], [1.0]])
    labels = np.array([0, 0])
    for fn in (kernels.medoid_update_np, kernels.medoid_update):
        new, _ = fn(x, labels, np.array([1]))
        assert new.tolist() == [1]


def test_env_flag_selects_numpy_twins():
    code = "from svrec import kernels; print(kernels.smo is kernels.smo_np, kernels.USE_NUMBA)"
    env = {**os.environ, "SVREC_NUMBA": "0"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["True", "False"]


def test_bound_names_follow_flag():
    twin = "_nb" if kernels.USE_NUMBA else "_np"
    for name in ("chi2_gram", "smo", "medoid_update", "cell_histograms"):
        assert getattr(kernels, name) is getattr(kernels, name + twin)
