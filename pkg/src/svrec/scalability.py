"""Spatial, temporal and quality scalability transforms.

Quality scalability is simulated with a GOP-structured 8x8 block DCT
quantizer: the first frame of each group of pictures is coded on its own,
every following frame codes its difference to the previous reconstruction
(zero-motion prediction). The quantizer step doubles every 6 QP and uses
dead-zone rounding (offset 1/3 intra, 1/6 inter).

Bitrate is the empirical zero-order entropy of all quantized symbols of the
clip plus a fixed header per frame, scaled to bits per second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .video import Clip, round_half_up

QP_MAX = 51
SCALE_FACTORS = (1, 2, 4, 8)
KEEP_RATIOS = (1, 2, 4)
DEFAULT_QPS = (0, 36, 41, 46, 51)
BLOCK = 8
HEADER_BITS = 64
# rounding offsets of the H.264 reference encoder: without the inter dead
# zone, drift between prediction and source re-codes as +-1 noise symbols
INTRA_OFFSET = 1.0 / 3.0
INTER_OFFSET = 1.0 / 6.0


@dataclass(frozen=True, order=True)
class ScalabilityCombo:
    qp: int = 0
    scale_factor: int = 1
    keep_every: int = 1

    def __post_init__(self) -> None:
        check_qp(self.qp)
        if self.scale_factor not in SCALE_FACTORS:
            raise ValueError(f"scale_factor must be one of {SCALE_FACTORS}, got {self.scale_factor}")
        if self.keep_every not in KEEP_RATIOS:
            raise ValueError(f"keep_every must be one of {KEEP_RATIOS}, got {self.keep_every}")

    def as_dict(self) -> dict:
        return {"qp": self.qp, "scale": self.scale_factor, "keep": self.keep_every}


def default_grid() -> list[ScalabilityCombo]:
    """The 5 x 4 x 3 grid, QP-major then scale then keep."""
    return [ScalabilityCombo(q, s, k) for q, s, k in product(DEFAULT_QPS, SCALE_FACTORS, KEEP_RATIOS)]


@dataclass(eq=False)
class DegradedClip:
    clip: Clip
    bitrate_bps: float
    psnr_db: float  # math.inf when lossless

    @property
    def lossless(self) -> bool:
        return math.isinf(self.psnr_db)


def check_qp(qp) -> int:
    if isinstance(qp, bool) or not isinstance(qp, (int, np.integer)) or not 0 <= qp <= QP_MAX:
        raise ValueError(f"QP must be an integer in [0, {QP_MAX}], got {qp!r}")
    return int(qp)


def qstep(qp: int) -> float:
    return 0.625 * 2.0 ** (qp / 6.0)


# --------------------------------------------------------------------------
# spatial / temporal


def downscale_area(clip: Clip, factor: int) -> Clip:
    """Average each ``factor`` x ``factor`` block, rounding half-up."""
    if factor not in SCALE_FACTORS:
        raise ValueError(f"scale factor must be one of {SCALE_FACTORS}, got {factor}")
    t, h, w = clip.frames.shape
    if h % factor or w % factor:
        raise ValueError(f"{w}x{h} is not divisible by {factor}")
    if factor == 1:
        return Clip(clip.frames.copy(), clip.fps)
    area = factor * factor
    sums = clip.frames.reshape(t, h // factor, factor, w // factor, factor).sum(axis=(2, 4), dtype=np.int64)
    return Clip(((sums + area // 2) // area).astype(np.uint8), clip.fps)


def decimate(clip: Clip, keep_every: int) -> Clip:
    """Keep frames 0, k, 2k, ... and divide the frame rate by k."""
    if keep_every not in KEEP_RATIOS:
        raise ValueError(f"keep_every must be one of {KEEP_RATIOS}, got {keep_every}")
    return Clip(clip.frames[::keep_every].copy(), clip.fps / keep_every)


# --------------------------------------------------------------------------
# codec simulator


def _dct_matrix(n: int = BLOCK) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    m[0, :] = math.sqrt(1.0 / n)
    return m


DCT8 = _dct_matrix()


def _blocks(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    return img.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3)


def _unblocks(blocks: np.ndarray) -> np.ndarray:
    by, bx = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(by * BLOCK, bx * BLOCK)


def block_dct(img: np.ndarray) -> np.ndarray:
    """Orthonormal type-II DCT of every 8x8 block; returns (by, bx, 8, 8)."""
    return DCT8 @ _blocks(np.asarray(img, dtype=np.float64)) @ DCT8.T


def block_idct(coefs: np.ndarray) -> np.ndarray:
    return _unblocks(DCT8.T @ coefs @ DCT8)


def quantize_symbols(coefs: np.ndarray, step: float, offset: float = 0.5) -> np.ndarray:
    """Sign-magnitude scalar quantizer; ``offset`` < 0.5 widens the zero bin."""
    return (np.sign(coefs) * np.floor(np.abs(coefs) / step + offset)).astype(np.int64)


def code_frame(frame: np.ndarray, prediction: np.ndarray | None, step: float):
    """Code one (padded) frame against ``prediction``; returns (recon, symbols)."""
    if prediction is None:
        pred, offset = 0.0, INTRA_OFFSET
    else:
        pred, offset = prediction, INTER_OFFSET
    symbols = quantize_symbols(block_dct(frame - pred), step, offset)
    recon = np.clip(np.floor(pred + block_idct(symbols * step) + 0.5), 0.0, 255.0)
    return recon, symbols


def _pad_to_block(frames: np.ndarray) -> np.ndarray:
    _, h, w = frames.shape
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    if ph or pw:
        frames = np.pad(frames, ((0, 0), (0, ph), (0, pw)), mode="edge")
    return frames


def entropy_bits(symbols: np.ndarray) -> float:
    """Total self-information of ``symbols`` under their own histogram."""
    _, counts = np.unique(symbols, return_counts=True)
    n = counts.sum()
    return float(np.sum(counts * np.log2(n / counts)))


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    ref = np.asarray(reference, dtype=np.float64)
    mse = float(np.mean((ref - np.asarray(test, dtype=np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def raw_bitrate(clip: Clip) -> float:
    return float(clip.width * clip.height * 8 * clip.fps)


def gop_length(fps: Fraction, intra_period_s=1) -> int:
    return max(1, math.ceil(Fraction(intra_period_s) * Fraction(fps)))


def quantize_gop(clip: Clip, qp: int, intra_period_s=1) -> DegradedClip:
    """Quantize ``clip`` at ``qp`` and price it.

    QP 0 is the lossless pass-through, priced at the raw payload rate.
    """
    qp = check_qp(qp)
    if qp == 0:
        return DegradedClip(Clip(clip.frames.copy(), clip.fps), raw_bitrate(clip), math.inf)
    step = qstep(qp)
    gop = gop_length(clip.fps, intra_period_s)
    src = _pad_to_block(clip.frames).astype(np.float64)
    recon = np.empty_like(src)
    symbols = []
    prev = None
    for t in range(src.shape[0]):
        prev, sym = code_frame(src[t], None if t % gop == 0 else prev, step)
        recon[t] = prev
        symbols.append(sym.ravel())
    out = recon[:, : clip.height, : clip.width].astype(np.uint8)
    n = clip.n_frames
    bits = entropy_bits(np.concatenate(symbols)) + HEADER_BITS * n
    bitrate = bits * float(clip.fps) / n
    return DegradedClip(Clip(out, clip.fps), bitrate, psnr(clip.frames, out))


def apply_combo(clip: Clip, combo: ScalabilityCombo, intra_period_s=1) -> DegradedClip:
    """Downscale, then decimate, then quantize; PSNR is against the pre-quantization clip."""
    reduced = decimate(downscale_area(clip, combo.scale_factor), combo.keep_every)
    return quantize_gop(reduced, combo.qp, intra_period_s)


def requantize_intra(frame: np.ndarray, qp: int) -> np.ndarray:
    """Intra-code a single frame (no padding beyond the 8-multiple)."""
    src = _pad_to_block(np.asarray(frame)[None]).astype(np.float64)[0]
    recon, _ = code_frame(src, None, qstep(check_qp(qp)))
    return round_half_up(recon[: frame.shape[0], : frame.shape[1]])
