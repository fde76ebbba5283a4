from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svrec.video import (
    HEADER_SIZE,
    BadMagicError,
    Clip,
    HeaderMismatchError,
    MultiViewSample,
    TruncatedError,
    check_frame,
    crop_center,
    decode_raw,
    encode_raw,
    load_raw,
    resize_bilinear,
    round_half_up,
    save_raw,
)


def _clip(t=3, h=8, w=10, fps=Fraction(22), seed=0):
    rng = np.random.default_rng(seed)
    return Clip(rng.integers(0, 256, (t, h, w), dtype=np.uint8), fps)


def test_save_load_roundtrip(tmp_path):
    clip = _clip(fps=Fraction(11, 2))
    save_raw(clip, tmp_path / "a.svr")
    back = load_raw(tmp_path / "a.svr")
    assert back == clip
    assert back.fps == Fraction(11, 2)


def test_two_by_two_layout():
    clip = Clip(np.array([[[1, 2], [3, 4]]], dtype=np.uint8), 22)
    data = encode_raw(clip)
    assert len(data) == HEADER_SIZE + 4
    assert data[:4] == b"SVR1"
    assert data[-4:] == bytes([1, 2, 3, 4])
    assert HEADER_SIZE == 28


def test_zero_frames_rejected():
    with pytest.raises(ValueError):
        Clip(np.zeros((0, 8, 8), dtype=np.uint8), 22)


def test_bad_magic_and_truncation_are_distinct():
    data = bytearray(encode_raw(_clip()))
    bad = bytes(b"XVR1" + data[4:])
    with pytest.raises(BadMagicError):
        decode_raw(bad)
    with pytest.raises(TruncatedError):
        decode_raw(bytes(data[:-1]))
    with pytest.raises(TruncatedError):
        decode_raw(bytes(data[:10]))
    with pytest.raises(HeaderMismatchError):
        decode_raw(bytes(data) + b"\x00")
    data[24] = 3  # channels
    with pytest.raises(HeaderMismatchError):
        decode_raw(bytes(data))


@settings(max_examples=40, deadline=None)
@given(
    t=st.integers(1, 4),
    h=st.integers(1, 12),
    w=st.integers(1, 12),
    num=st.integers(1, 60),
    den=st.integers(1, 4),
    seed=st.integers(0, 2**16),
)
def test_roundtrip_property(t, h, w, num, den, seed):
    clip = _clip(t, h, w, Fraction(num, den), seed)
    assert decode_raw(encode_raw(clip)) == clip


def test_crop_center_examples():
    frame = np.arange(480 * 640, dtype=np.int64).reshape(480, 640)
    out = crop_center(frame, 480)
    assert out.shape == (480, 480)
    assert out[0, 0] == frame[0, 80]
    sq = np.ones((16, 16), dtype=np.uint8)
    assert np.array_equal(crop_center(sq, 16), sq)
    with pytest.raises(ValueError):
        crop_center(sq, 0)
    with pytest.raises(ValueError):
        crop_center(sq, 17)


@given(st.integers(8, 30), st.integers(8, 30), st.integers(1, 8))
def test_crop_center_idempotent(h, w, size):
    f = np.arange(h * w).reshape(h, w)
    once = crop_center(f, size)
    assert np.array_equal(crop_center(once, size), once)


def test_resize_examples():
    assert resize_bilinear(np.array([[0, 255]], dtype=np.uint8), 3, 1).tolist() == [[0, 128, 255]]
    const = np.full((9, 12), 77, dtype=np.uint8)
    assert np.all(resize_bilinear(const, 20, 5) == 77)
    f = _clip(1, 9, 11).frames[0]
    assert np.array_equal(resize_bilinear(f, 11, 9), f)


def test_round_half_up_and_clamp():
    assert round_half_up(np.array([0.5, 1.49, 2.5, -3.0, 300.0])).tolist() == [1, 1, 3, 0, 255]


def test_check_frame_minimum_side():
    check_frame(np.zeros((8, 8), dtype=np.uint8))
    with pytest.raises(ValueError):
        check_frame(np.zeros((7, 8), dtype=np.uint8))


def test_multiview_sample_invariants():
    a, b = _clip(), _clip(seed=1)
    s = MultiViewSample([a, b], np.zeros(3), 0, 1, 0, ["front", "back"])
    assert s.groups == ["front", "back"]
    assert s.group("back").views[0] is b
    with pytest.raises(ValueError):
        MultiViewSample([a, _clip(t=4)], np.zeros(3), 0, 1, 0)
    with pytest.raises(ValueError):
        MultiViewSample([a], np.zeros(2), 0, 1, 0)
