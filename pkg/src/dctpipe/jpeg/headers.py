"""Marker-segment parsing for baseline sequential JPEG (SOF0, 8-bit, Huffman)."""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

import numpy as np

from dctpipe.errors import (
    MalformedSegment,
    MissingTable,
    TruncatedStream,
    UnsupportedMarker,
)

SOI, EOI, SOS, DQT, DHT, DRI, DNL, DAC, COM = 0xD8, 0xD9, 0xDA, 0xDB, 0xC4, 0xDD, 0xDC, 0xCC, 0xFE
SOF0 = 0xC0
RST0, RST7 = 0xD0, 0xD7

_SOF_NAMES = {
    0xC1: "extended sequential",
    0xC2: "progressive",
    0xC3: "lossless",
    0xC5: "hierarchical",
    0xC6: "hierarchical progressive",
    0xC7: "hierarchical lossless",
    0xC9: "arithmetic coding",
    0xCA: "arithmetic coding (progressive)",
    0xCB: "arithmetic coding (lossless)",
    0xCD: "arithmetic coding (hierarchical)",
    0xCE: "arithmetic coding (hierarchical progressive)",
    0xCF: "arithmetic coding (hierarchical lossless)",
}

# End of entropy-coded data: 0xFF followed by anything except a stuffed zero,
# a restart marker or a fill byte.
_SCAN_END = re.compile(rb"\xff(?=[^\x00\xd0-\xd7\xff])")


@dataclass(frozen=True)
class Component:
    id: int
    h: int
    v: int
    tq: int


@dataclass(frozen=True)
class HuffmanTable:
    counts: tuple  # 16 code-length counts
    symbols: bytes

    def codes(self):
        """Canonical (code, length, symbol) triples."""
        out = []
        code = 0
        k = 0
        for length in range(1, 17):
            for _ in range(self.counts[length - 1]):
                out.append((code, length, self.symbols[k]))
                code += 1
                k += 1
            code <<= 1
        return out


@dataclass(frozen=True)
class ScanComponent:
    index: int  # position in ParsedJpeg.components
    td: int  # DC table id
    ta: int  # AC table id


@dataclass(frozen=True)
class Scan:
    components: tuple  # of ScanComponent
    start: int  # byte offset of the first entropy-coded byte
    end: int  # byte offset of the terminating marker
    dc_tables: dict  # id -> HuffmanTable, snapshot at SOS time
    ac_tables: dict
    restart_interval: int


@dataclass(frozen=True)
class ParsedJpeg:
    width: int
    height: int
    components: tuple  # of Component
    quant_tables: dict  # id -> (64,) uint16 zigzag order
    huffman_tables: dict  # ("dc"|"ac", id) -> HuffmanTable
    restart_interval: int
    scans: tuple = field(default_factory=tuple)

    @property
    def hmax(self):
        return max(c.h for c in self.components)

    @property
    def vmax(self):
        return max(c.v for c in self.components)

    @property
    def subsampling(self):
        return "4:4:4" if self.hmax == 1 and self.vmax == 1 else "4:2:0"

    def component_size(self, index):
        """(width, height) in samples of component `index`."""
        c = self.components[index]
        w = -(-self.width * c.h // self.hmax)
        h = -(-self.height * c.v // self.vmax)
        return w, h

    def block_grid(self, index):
        """(blockRows, blockCols) covering component `index`."""
        w, h = self.component_size(index)
        return -(-h // 8), -(-w // 8)

    def mcu_layout(self):
        """(mcuRows, mcuCols) for the interleaved case."""
        return -(-self.height // (8 * self.vmax)), -(-self.width // (8 * self.hmax))


def _u16(data, pos):
    if pos + 2 > len(data):
        raise TruncatedStream("unexpected end of stream", pos)
    return (data[pos] << 8) | data[pos + 1]


def _parse_dqt(seg, pos, tables):
    i = 0
    while i < len(seg):
        pq, tq = seg[i] >> 4, seg[i] & 15
        if tq > 3:
            raise MalformedSegment(f"quantization table id {tq} > 3", pos)
        if pq == 0:
            if i + 65 > len(seg):
                raise MalformedSegment("DQT underflow", pos)
            values = np.frombuffer(seg, dtype=np.uint8, count=64, offset=i + 1).astype(np.uint16)
            i += 65
        elif pq == 1:
            if i + 129 > len(seg):
                raise MalformedSegment("DQT underflow", pos)
            values = np.frombuffer(seg, dtype=">u2", count=64, offset=i + 1).astype(np.uint16)
            i += 129
        else:
            raise MalformedSegment(f"bad DQT precision {pq}", pos)
        values.setflags(write=False)
        tables[tq] = values


def _parse_dht(seg, pos, tables):
    i = 0
    while i < len(seg):
        if i + 17 > len(seg):
            raise MalformedSegment("DHT underflow", pos)
        tc, th = seg[i] >> 4, seg[i] & 15
        if tc > 1 or th > 3:
            raise MalformedSegment(f"bad Huffman table class/id {tc}/{th}", pos)
        counts = tuple(seg[i + 1:i + 17])
        total = sum(counts)
        if total > 256 or i + 17 + total > len(seg):
            raise MalformedSegment("DHT underflow", pos)
        symbols = bytes(seg[i + 17:i + 17 + total])
        # canonical codes must fit in their lengths
        code = 0
        for length, n in enumerate(counts, start=1):
            code += n
            if code > (1 << length):
                raise MalformedSegment("Huffman code lengths overflow", pos)
            code <<= 1
        tables[("dc" if tc == 0 else "ac", th)] = HuffmanTable(counts, symbols)
        i += 17 + total


def _parse_sof0(seg, pos):
    if len(seg) < 6:
        raise MalformedSegment("SOF underflow", pos)
    precision, height, width, nf = struct.unpack(">BHHB", seg[:6])
    if precision != 8:
        raise UnsupportedMarker(f"unsupported: {precision}-bit precision", pos)
    if height == 0:
        raise UnsupportedMarker("unsupported: DNL-defined height", pos)
    if width == 0:
        raise MalformedSegment("zero width", pos)
    if not 1 <= nf <= 3:
        raise UnsupportedMarker(f"unsupported: {nf} components", pos)
    if len(seg) != 6 + 3 * nf:
        raise MalformedSegment("SOF length mismatch", pos)
    comps = []
    for k in range(nf):
        cid, hv, tq = seg[6 + 3 * k:9 + 3 * k]
        h, v = hv >> 4, hv & 15
        if h not in (1, 2) or v not in (1, 2):
            raise UnsupportedMarker(f"unsupported: sampling factor {h}x{v}", pos)
        if tq > 3:
            raise MalformedSegment(f"quantization table id {tq} > 3", pos)
        comps.append(Component(cid, h, v, tq))
    if len({c.id for c in comps}) != nf:
        raise MalformedSegment("duplicate component ids", pos)
    if nf == 3:
        y, cb, cr = comps
        ok_444 = all(c.h == 1 and c.v == 1 for c in comps)
        ok_420 = (y.h, y.v) == (2, 2) and all(c.h == 1 and c.v == 1 for c in (cb, cr))
        if not (ok_444 or ok_420):
            raise UnsupportedMarker("unsupported: chroma subsampling other than 4:4:4 or 4:2:0", pos)
    elif nf == 2:
        raise UnsupportedMarker("unsupported: 2 components", pos)
    else:
        # a lone component is coded non-interleaved, its factors are irrelevant
        comps = [Component(comps[0].id, 1, 1, comps[0].tq)]
    return width, height, tuple(comps)


def parse_headers(data):
    """Walk the marker segments of a baseline JPEG.

    Returns a ParsedJpeg holding frame geometry, tables and the location of
    every scan's entropy-coded segment. Raises UnsupportedMarker for anything
    outside baseline sequential 8-bit Huffman with 1 or 3 components.
    """
    data = bytes(data)
    if len(data) < 2 or data[0] != 0xFF or data[1] != SOI:
        raise MalformedSegment("stream does not start with SOI", 0)

    quant = {}
    huff = {}
    restart = 0
    frame = None
    scans = []
    pos = 2
    n = len(data)
    while True:
        # skip fill bytes
        if pos >= n:
            if scans:
                break
            raise TruncatedStream("no scan found", pos)
        if data[pos] != 0xFF:
            raise MalformedSegment(f"expected marker, got 0x{data[pos]:02X}", pos)
        while pos < n and data[pos] == 0xFF:
            pos += 1
        if pos >= n:
            raise TruncatedStream("stream ends inside marker", pos)
        marker = data[pos]
        mpos = pos - 1
        pos += 1
        if marker == EOI:
            break
        if RST0 <= marker <= RST7 or marker == 0x01:
            continue
        if marker == SOI:
            raise MalformedSegment("nested SOI", mpos)
        length = _u16(data, pos)
        if length < 2:
            raise MalformedSegment("segment length < 2", pos)
        if pos + length > n:
            raise TruncatedStream("segment runs past end of stream", pos)
        seg = data[pos + 2:pos + length]
        seg_pos = pos
        pos += length

        if marker == SOF0:
            if frame is not None:
                raise MalformedSegment("multiple frames", mpos)
            frame = _parse_sof0(seg, seg_pos)
        elif marker in _SOF_NAMES:
            raise UnsupportedMarker(f"unsupported: {_SOF_NAMES[marker]}", mpos)
        elif marker == DAC:
            raise UnsupportedMarker("unsupported: arithmetic coding", mpos)
        elif marker == DNL:
            raise UnsupportedMarker("unsupported: DNL marker", mpos)
        elif marker in (0xDE, 0xDF):
            raise UnsupportedMarker("unsupported: hierarchical mode", mpos)
        elif marker == DQT:
            _parse_dqt(seg, seg_pos, quant)
        elif marker == DHT:
            _parse_dht(seg, seg_pos, huff)
        elif marker == DRI:
            if len(seg) != 2:
                raise MalformedSegment("DRI length", seg_pos)
            restart = (seg[0] << 8) | seg[1]
        elif marker == SOS:
            if frame is None:
                raise MalformedSegment("SOS before SOF", mpos)
            scan = _parse_sos(seg, seg_pos, frame, quant, huff, restart)
            m = _SCAN_END.search(data, pos)
            end = m.start() if m else n
            # trailing fill bytes belong to the marker
            scans.append(Scan(scan[0], pos, end, scan[1], scan[2], restart))
            pos = end
        # APPn, COM and anything unrecognised but well-formed are skipped

    if frame is None:
        raise MalformedSegment("no SOF0 frame", 0)
    width, height, comps = frame
    for c in comps:
        if c.tq not in quant:
            raise MissingTable(f"quantization table {c.tq} not defined")
    covered = {sc.index for s in scans for sc in s.components}
    if covered != set(range(len(comps))):
        raise TruncatedStream("not every component is covered by a scan")
    return ParsedJpeg(width, height, comps, quant, huff, restart, tuple(scans))


def _parse_sos(seg, pos, frame, quant, huff, restart):
    _, _, comps = frame
    if not seg:
        raise MalformedSegment("SOS underflow", pos)
    ns = seg[0]
    if not 1 <= ns <= len(comps) or len(seg) != 1 + 2 * ns + 3:
        raise MalformedSegment("SOS length mismatch", pos)
    ids = {c.id: k for k, c in enumerate(comps)}
    out = []
    for k in range(ns):
        cid, t = seg[1 + 2 * k], seg[2 + 2 * k]
        if cid not in ids:
            raise MalformedSegment(f"scan references unknown component {cid}", pos)
        td, ta = t >> 4, t & 15
        if ("dc", td) not in huff:
            raise MissingTable(f"DC Huffman table {td} not defined", pos)
        if ("ac", ta) not in huff:
            raise MissingTable(f"AC Huffman table {ta} not defined", pos)
        out.append(ScanComponent(ids[cid], td, ta))
    ss, se, a = seg[1 + 2 * ns:]
    if ss != 0 or se != 63 or a != 0:
        raise UnsupportedMarker("unsupported: spectral selection or successive approximation", pos)
    if ns > 1 and sum(comps[sc.index].h * comps[sc.index].v for sc in out) > 10:
        raise MalformedSegment("too many blocks per MCU", pos)
    dc = {sc.td: huff[("dc", sc.td)] for sc in out}
    ac = {sc.ta: huff[("ac", sc.ta)] for sc in out}
    return tuple(out), dc, ac
