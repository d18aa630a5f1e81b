"""Full decode to RGB. Only the timing baseline and the correctness oracle use
this path; the partial decode never touches it."""
from __future__ import annotations

import threading

import numpy as np

from dctpipe.errors import NotDequantized
from dctpipe.zigzag import dezigzag


class OpCounter:
    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def add(self, n):
        with self._lock:
            self.value += n


# number of 8x8 blocks passed through the inverse DCT since import
IDCT_BLOCKS = OpCounter()


def dct_matrix():
    """Orthonormal 8-point DCT-II basis, rows = frequencies."""
    x = np.arange(8)
    u = x[:, None]
    c = np.where(u == 0, np.sqrt(1 / 8), np.sqrt(2 / 8))
    return c * np.cos((2 * x[None, :] + 1) * u * np.pi / 16)


_C = dct_matrix()


def idct_blocks(blocks):
    """(rows, cols, 64) zigzag coefficients -> (rows*8, cols*8) float64 samples,
    separable double-precision IDCT, no level shift."""
    rows, cols = blocks.shape[:2]
    nat = dezigzag(np.asarray(blocks, dtype=np.float64))
    IDCT_BLOCKS.add(rows * cols)
    pix = np.einsum("ux,rcuv,vy->rcxy", _C, nat, _C, optimize=True)
    return pix.transpose(0, 2, 1, 3).reshape(rows * 8, cols * 8)


def _round_clamp(x):
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.int32)


def upsample_h2v2_fancy(plane, out_h, out_w):
    """Triangle-filter 2x upsampling of an integer sample plane, matching the
    default libjpeg smoothing (edge samples replicated)."""
    p = np.pad(plane.astype(np.int32), 1, mode="edge")
    this = p[1:-1]
    # vertical pass: upper output row uses the row above, lower the row below
    upper = 3 * this + p[:-2]
    lower = 3 * this + p[2:]
    out = np.empty((plane.shape[0] * 2, plane.shape[1] * 2), dtype=np.int32)
    for dst, colsum in ((out[0::2], upper), (out[1::2], lower)):
        mid = colsum[:, 1:-1]
        dst[:, 0::2] = (3 * mid + colsum[:, :-2] + 8) >> 4
        dst[:, 1::2] = (3 * mid + colsum[:, 2:] + 7) >> 4
    return out[:out_h, :out_w]


def ycbcr_to_rgb(y, cb, cr):
    y = y.astype(np.float64)
    cb = cb.astype(np.float64) - 128.0
    cr = cr.astype(np.float64) - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([_round_clamp(r), _round_clamp(g), _round_clamp(b)], axis=-1).astype(np.uint8)


def reconstruct_rgb(jpeg, grids):
    """Dequantized grids -> (height, width, 3) uint8 RGB.

    Per block IDCT, +128 level shift, clamp, chroma upsampling, JFIF
    YCbCr->RGB. A single-component image is replicated into three channels.
    """
    planes = []
    for k, g in enumerate(grids):
        if not g.dequantized:
            raise NotDequantized(f"{g.component} grid must be dequantized before reconstruction")
        w, h = jpeg.component_size(k)
        planes.append(_round_clamp(idct_blocks(g.blocks)[:h, :w] + 128.0))
    if len(planes) == 1:
        y = planes[0].astype(np.uint8)
        return np.repeat(y[:, :, None], 3, axis=2)
    y, cb, cr = planes
    if jpeg.subsampling == "4:2:0":
        cb = upsample_h2v2_fancy(cb, jpeg.height, jpeg.width)
        cr = upsample_h2v2_fancy(cr, jpeg.height, jpeg.width)
    return ycbcr_to_rgb(y, cb, cr)


def decode_rgb(data):
    """Full decode of a JPEG byte stream to RGB."""
    from dctpipe.jpeg.coeffs import read_coefficients

    jpeg, grids = read_coefficients(data)
    return reconstruct_rgb(jpeg, grids)
