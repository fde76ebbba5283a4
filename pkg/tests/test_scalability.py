import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svrec.scalability import (
    DCT8,
    ScalabilityCombo,
    apply_combo,
    block_dct,
    block_idct,
    decimate,
    default_grid,
    downscale_area,
    gop_length,
    qstep,
    quantize_gop,
    requantize_intra,
)
from svrec.synth import GeneratorSpec, render_sample
from svrec.video import Clip


def _rand_clip(t=6, h=24, w=32, fps=22, seed=0):
    rng = np.random.default_rng(seed)
    return Clip(rng.integers(0, 256, (t, h, w), dtype=np.uint8), Fraction(fps))


def test_grid_and_combo_validation():
    grid = default_grid()
    assert len(grid) == 60
    assert grid[0] == ScalabilityCombo(0, 1, 1) and grid[-1] == ScalabilityCombo(51, 8, 4)
    assert grid == sorted(grid)
    for bad in ((52, 1, 1), (-1, 1, 1), (0, 3, 1), (0, 1, 3), (True, 1, 1)):
        with pytest.raises(ValueError):
            ScalabilityCombo(*bad)


def test_qstep_doubles_every_six():
    assert qstep(0) == pytest.approx(0.625)
    for qp in range(0, 46):
        assert qstep(qp + 6) == pytest.approx(2 * qstep(qp))


def test_dct_orthonormal():
    assert np.allclose(DCT8 @ DCT8.T, np.eye(8))
    img = np.random.default_rng(0).random((16, 24)) * 255
    assert np.allclose(block_idct(block_dct(img)), img)


def test_downscale_examples():
    clip = Clip(np.zeros((2, 480, 640), dtype=np.uint8), 22)
    assert downscale_area(clip, 2).frames.shape == (2, 240, 320)
    small = _rand_clip()
    assert downscale_area(small, 1) == small
    block = Clip(np.array([[[10, 20], [30, 40]]], dtype=np.uint8), 22)
    assert downscale_area(block, 2).frames.tolist() == [[[25]]]
    with pytest.raises(ValueError):
        downscale_area(_rand_clip(h=12, w=20), 8)


@given(st.sampled_from([2, 4, 8]), st.integers(0, 1000))
def test_downscale_preserves_mean(factor, seed):
    clip = _rand_clip(t=1, h=16, w=24, seed=seed)
    out = downscale_area(clip, factor)
    assert abs(out.frames.mean() - clip.frames.mean()) <= 0.5


def test_decimate_examples():
    clip = _rand_clip(t=9, fps=22)
    two = decimate(clip, 2)
    assert two.fps == 11 and two.n_frames == 5
    assert np.array_equal(two.frames, clip.frames[[0, 2, 4, 6, 8]])
    assert decimate(clip, 4).fps == Fraction(11, 2)
    assert decimate(clip, 1) == clip
    assert decimate(two, 2) == decimate(clip, 4)
    for n in range(1, 10):
        assert decimate(_rand_clip(t=n), 4).n_frames == math.ceil(n / 4)


def test_qp0_is_identity_at_raw_rate():
    clip = _rand_clip()
    out = quantize_gop(clip, 0)
    assert out.clip == clip and out.lossless and math.isinf(out.psnr_db)
    assert out.bitrate_bps == 32 * 24 * 8 * 22
    assert apply_combo(clip, ScalabilityCombo(0, 1, 1)).clip == clip


def test_constant_frame_stays_constant():
    clip = Clip(np.full((3, 16, 16), 93, dtype=np.uint8), 8)
    for qp in (10, 36, 51):
        out = quantize_gop(clip, qp).clip.frames
        assert np.all(out == out[0, 0, 0])


def test_extreme_combo_shape():
    clip = Clip(np.zeros((8, 480, 640), dtype=np.uint8), 22)
    out = apply_combo(clip, ScalabilityCombo(51, 8, 4)).clip
    assert (out.width, out.height, out.n_frames, out.fps) == (80, 60, 2, Fraction(11, 2))


def test_gop_length():
    assert gop_length(Fraction(22)) == 22
    assert gop_length(Fraction(11, 2)) == 6


def test_requantize_intra_idempotent():
    frame = _rand_clip(t=1).frames[0]
    once = requantize_intra(frame, 36)
    twice = requantize_intra(once, 36)
    assert np.abs(once.astype(int) - twice.astype(int)).max() <= 1


def test_monotone_on_corpus_sample():
    spec = GeneratorSpec()
    sample = render_sample(spec, 8, 1, 0)
    for clip in sample.views:
        for s in (1, 2, 4, 8):
            for k in (1, 2, 4):
                rates = [apply_combo(clip, ScalabilityCombo(q, s, k)).bitrate_bps for q in (0, 36, 41, 46, 51)]
                assert all(a >= b for a, b in zip(rates, rates[1:])), (s, k, rates)
        psnrs = [quantize_gop(clip, q).psnr_db for q in (36, 41, 46, 51)]
        assert all(a >= b for a, b in zip(psnrs, psnrs[1:]))
        assert psnrs[0] > psnrs[-1]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_non_multiple_of_eight_is_padded(seed):
    clip = _rand_clip(t=3, h=12, w=20, seed=seed)
    out = quantize_gop(clip, 30)
    assert out.clip.frames.shape == clip.frames.shape
    assert out.bitrate_bps > 0 and out.psnr_db > 0
