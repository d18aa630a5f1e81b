"""Quantized / dequantized DCT coefficient grids recovered without any IDCT."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from dctpipe.errors import AlreadyDequantized, DimensionMismatch
from dctpipe.jpeg.headers import parse_headers
from dctpipe.jpeg.scan import build_lut, decode_scan

COMPONENT_NAMES = ("Y", "Cb", "Cr")


@dataclass(frozen=True)
class CoeffBlockGrid:
    """Per-component grid of 8x8 frequency blocks, channel axis in zigzag order.

    blocks has shape (blockRows, blockCols, 64); int16 while quantized,
    float32 once dequantized.
    """

    component: str
    blocks: np.ndarray
    dequantized: bool = False

    def __post_init__(self):
        if self.blocks.ndim != 3 or self.blocks.shape[2] != 64:
            raise DimensionMismatch(f"blocks must be (rows, cols, 64), got {self.blocks.shape}")
        self.blocks.setflags(write=False)

    @property
    def block_rows(self):
        return self.blocks.shape[0]

    @property
    def block_cols(self):
        return self.blocks.shape[1]

    @property
    def value_kind(self):
        return "real" if self.dequantized else "integer"


@lru_cache(maxsize=64)
def _luts(dc_tables, ac_tables):
    luts = np.zeros((8, 1 << 16), dtype=np.int32)
    for tid, table in dc_tables:
        luts[tid] = build_lut(table)
    for tid, table in ac_tables:
        luts[4 + tid] = build_lut(table)
    return luts


def decode_coefficients(jpeg, data):
    """Entropy-decode every scan of `data` (the full JPEG byte stream that
    `jpeg` was parsed from) into quantized coefficient grids, one per component.

    DC prediction is undone per component and reset at restart markers.
    Blocks from MCU padding beyond ceil(size / 8) are dropped.
    """
    data = bytes(data)
    ncomp = len(jpeg.components)
    mrows, mcols = jpeg.mcu_layout()
    offsets, strides, shapes = [], [], []
    total = 0
    for k, c in enumerate(jpeg.components):
        rows, cols = jpeg.block_grid(k)
        prow = max(rows, mrows * c.v) if ncomp > 1 else rows
        pcol = max(cols, mcols * c.h) if ncomp > 1 else cols
        offsets.append(total)
        strides.append(pcol)
        shapes.append((prow, pcol))
        total += prow * pcol
    store = np.zeros((total, 64), dtype=np.int16)
    for scan in jpeg.scans:
        luts = _luts(tuple(sorted(scan.dc_tables.items())), tuple(sorted(scan.ac_tables.items())))
        decode_scan(data, jpeg, scan, luts, store, offsets, strides)
    grids = []
    for k in range(ncomp):
        prow, pcol = shapes[k]
        rows, cols = jpeg.block_grid(k)
        blocks = store[offsets[k]:offsets[k] + prow * pcol].reshape(prow, pcol, 64)
        if (prow, pcol) != (rows, cols):
            blocks = np.ascontiguousarray(blocks[:rows, :cols])
        grids.append(CoeffBlockGrid(COMPONENT_NAMES[k], blocks, False))
    return grids


def dequantize(grid, table):
    """Multiply every coefficient by its zigzag-aligned quantization entry."""
    if grid.dequantized:
        raise AlreadyDequantized(f"{grid.component} grid is already dequantized")
    table = np.asarray(table, dtype=np.float32).reshape(64)
    return CoeffBlockGrid(grid.component, grid.blocks.astype(np.float32) * table, True)


def quant_table_for(jpeg, index):
    return jpeg.quant_tables[jpeg.components[index].tq]


def read_coefficients(data, keep_quantized=False):
    """Parse + entropy-decode (+ dequantize unless keep_quantized).

    Returns (ParsedJpeg, [CoeffBlockGrid, ...]).
    """
    jpeg = parse_headers(data)
    grids = decode_coefficients(jpeg, data)
    if not keep_quantized:
        grids = [dequantize(g, quant_table_for(jpeg, k)) for k, g in enumerate(grids)]
    return jpeg, grids
