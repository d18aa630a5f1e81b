"""Huffman entropy decoding of baseline scans into quantized zigzag coefficients.

The inner loop is compiled with numba; everything around it (restart-segment
splitting, byte unstuffing, table expansion) stays in Python.
"""
from __future__ import annotations

import re

import numba
import numpy as np

from dctpipe.errors import CorruptEntropyStream, RestartMarkerMismatch, TruncatedStream

_RST = re.compile(rb"\xff[\xd0-\xd7]")

OK, BAD_CODE, INDEX_OVERFLOW, TRUNCATED, BAD_CATEGORY, DC_RANGE = range(6)
_MESSAGES = {
    BAD_CODE: "invalid Huffman code",
    INDEX_OVERFLOW: "coefficient index overflow past 63",
    BAD_CATEGORY: "magnitude category out of baseline range",
    DC_RANGE: "DC coefficient outside signed 12-bit range",
}


def build_lut(table):
    """16-bit lookahead table: entry = (code length << 8) | symbol, 0 = invalid."""
    lut = np.zeros(1 << 16, dtype=np.int32)
    for code, length, symbol in table.codes():
        lo = code << (16 - length)
        lut[lo:lo + (1 << (16 - length))] = (length << 8) | symbol
    return lut


@numba.njit(cache=True, nogil=True)
def _decode(data, seg_start, seg_end, n_mcus, mcus_per_row, interval,
            c_offset, c_stride, c_h, c_v, c_dc, c_ac, luts, store):
    ncomp = c_offset.shape[0]
    pred = np.zeros(ncomp, dtype=np.int64)
    seg = -1
    pos = 0
    end = 0
    bitbuf = np.uint64(0)
    bitcnt = 0
    consumed = 0
    seg_bits = 0
    for mcu in range(n_mcus):
        if interval > 0 and mcu % interval == 0 or mcu == 0:
            seg += 1
            pos = seg_start[seg]
            end = seg_end[seg]
            bitbuf = np.uint64(0)
            bitcnt = 0
            consumed = 0
            seg_bits = (end - pos) * 8
            for c in range(ncomp):
                pred[c] = 0
        mrow = mcu // mcus_per_row
        mcol = mcu % mcus_per_row
        for c in range(ncomp):
            for by in range(c_v[c]):
                for bx in range(c_h[c]):
                    row = mrow * c_v[c] + by
                    col = mcol * c_h[c] + bx
                    blk = c_offset[c] + row * c_stride[c] + col
                    # DC
                    while bitcnt < 16:
                        b = data[pos] if pos < end else 0
                        pos += 1
                        bitbuf = (bitbuf << np.uint64(8)) | np.uint64(b)
                        bitcnt += 8
                    peek = int((bitbuf >> np.uint64(bitcnt - 16)) & np.uint64(0xFFFF))
                    e = luts[c_dc[c], peek]
                    if e == 0:
                        return BAD_CODE, mcu
                    ln = e >> 8
                    s = e & 255
                    bitcnt -= ln
                    consumed += ln
                    diff = 0
                    if s > 0:
                        if s > 11:
                            return BAD_CATEGORY, mcu
                        while bitcnt < s:
                            b = data[pos] if pos < end else 0
                            pos += 1
                            bitbuf = (bitbuf << np.uint64(8)) | np.uint64(b)
                            bitcnt += 8
                        v = int((bitbuf >> np.uint64(bitcnt - s)) & np.uint64((1 << s) - 1))
                        bitcnt -= s
                        consumed += s
                        if v < (1 << (s - 1)):
                            v -= (1 << s) - 1
                        diff = v
                    pred[c] += diff
                    if pred[c] < -2048 or pred[c] > 2047:
                        return DC_RANGE, mcu
                    store[blk, 0] = pred[c]
                    # AC
                    k = 1
                    while k < 64:
                        while bitcnt < 16:
                            b = data[pos] if pos < end else 0
                            pos += 1
                            bitbuf = (bitbuf << np.uint64(8)) | np.uint64(b)
                            bitcnt += 8
                        peek = int((bitbuf >> np.uint64(bitcnt - 16)) & np.uint64(0xFFFF))
                        e = luts[4 + c_ac[c], peek]
                        if e == 0:
                            return BAD_CODE, mcu
                        ln = e >> 8
                        rs = e & 255
                        bitcnt -= ln
                        consumed += ln
                        r = rs >> 4
                        s = rs & 15
                        if s == 0:
                            if r == 15:
                                k += 16
                                if k > 64:
                                    return INDEX_OVERFLOW, mcu
                                continue
                            break
                        if s > 10:
                            return BAD_CATEGORY, mcu
                        k += r
                        if k > 63:
                            return INDEX_OVERFLOW, mcu
                        while bitcnt < s:
                            b = data[pos] if pos < end else 0
                            pos += 1
                            bitbuf = (bitbuf << np.uint64(8)) | np.uint64(b)
                            bitcnt += 8
                        v = int((bitbuf >> np.uint64(bitcnt - s)) & np.uint64((1 << s) - 1))
                        bitcnt -= s
                        consumed += s
                        if v < (1 << (s - 1)):
                            v -= (1 << s) - 1
                        store[blk, k] = v
                        k += 1
        if consumed > seg_bits:
            return TRUNCATED, mcu
    return OK, n_mcus


def _segments(data, scan, n_mcus):
    """Split entropy data at restart markers and unstuff each segment."""
    raw = data[scan.start:scan.end]
    if scan.restart_interval == 0:
        pieces = [raw]
    else:
        pieces = []
        last = 0
        for k, m in enumerate(_RST.finditer(raw)):
            expected = 0xD0 + (k % 8)
            if raw[m.start() + 1] != expected:
                raise RestartMarkerMismatch(
                    f"expected RST{k % 8}, found RST{raw[m.start() + 1] - 0xD0}",
                    scan.start + m.start(),
                )
            pieces.append(raw[last:m.start()])
            last = m.end()
        pieces.append(raw[last:])
        expected_segments = -(-n_mcus // scan.restart_interval)
        if len(pieces) != expected_segments:
            raise RestartMarkerMismatch(
                f"{len(pieces) - 1} restart markers for {expected_segments - 1} expected intervals",
                scan.start,
            )
    pieces = [p.replace(b"\xff\x00", b"\xff") for p in pieces]
    starts = np.zeros(len(pieces), dtype=np.int64)
    ends = np.zeros(len(pieces), dtype=np.int64)
    off = 0
    for i, p in enumerate(pieces):
        starts[i] = off
        off += len(p)
        ends[i] = off
    buf = np.frombuffer(b"".join(pieces), dtype=np.uint8)
    return buf, starts, ends


def decode_scan(data, jpeg, scan, luts, store, offsets, strides):
    """Decode one scan into `store`, a (blocks, 64) int16 array shared by all
    components; component k's blocks start at offsets[k] with row stride strides[k]."""
    comps = [jpeg.components[sc.index] for sc in scan.components]
    if len(comps) == 1:
        # non-interleaved: one block per MCU over the component's own grid
        rows, cols = jpeg.block_grid(scan.components[0].index)
        n_mcus, per_row = rows * cols, cols
        hs = vs = [1]
    else:
        mrows, mcols = jpeg.mcu_layout()
        n_mcus, per_row = mrows * mcols, mcols
        hs = [c.h for c in comps]
        vs = [c.v for c in comps]
    buf, starts, ends = _segments(data, scan, n_mcus)
    status, where = _decode(
        buf, starts, ends, n_mcus, per_row, scan.restart_interval,
        np.array([offsets[sc.index] for sc in scan.components], dtype=np.int64),
        np.array([strides[sc.index] for sc in scan.components], dtype=np.int64),
        np.array(hs, dtype=np.int64), np.array(vs, dtype=np.int64),
        np.array([sc.td for sc in scan.components], dtype=np.int64),
        np.array([sc.ta for sc in scan.components], dtype=np.int64),
        luts, store,
    )
    if status == TRUNCATED:
        raise TruncatedStream(f"entropy data exhausted in MCU {where}", scan.start)
    if status != OK:
        raise CorruptEntropyStream(f"{_MESSAGES[status]} in MCU {where}", scan.start)
