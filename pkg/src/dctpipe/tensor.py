"""Network-facing DCT tensors: frequency-channel rearrangement, chroma
coefficient upsampling, channel concatenation and frequency band selection."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from dctpipe.errors import DimensionMismatch, IndexOutOfRange
from dctpipe.jpeg.coeffs import CoeffBlockGrid, decode_coefficients, quant_table_for
from dctpipe.jpeg.headers import parse_headers

COMPONENT_CODES = {"feature": 0, "Y": 1, "Cb": 2, "Cr": 3}
COMPONENT_FROM_CODE = {v: k for k, v in COMPONENT_CODES.items()}


@dataclass(frozen=True)
class DctTensor:
    """channels x blockRows x blockCols array plus per-channel provenance.

    channel_meta[i] = (component, zigzag frequency index). crop is the true
    pixel (width, height) of the luma plane the grid covers.
    """

    data: np.ndarray
    channel_meta: tuple
    crop: tuple = (0, 0)

    def __post_init__(self):
        if self.data.ndim != 3:
            raise DimensionMismatch(f"tensor must be 3-D, got shape {self.data.shape}")
        if len(self.channel_meta) != self.data.shape[0]:
            raise DimensionMismatch(
                f"{len(self.channel_meta)} meta entries for {self.data.shape[0]} channels"
            )
        dct = [m for m in self.channel_meta if m[0] != "feature"]
        if len(set(dct)) != len(dct):
            raise DimensionMismatch("duplicate (component, frequency) channels")
        object.__setattr__(self, "channel_meta", tuple(tuple(m) for m in self.channel_meta))
        self.data.setflags(write=False)

    @property
    def shape(self):
        return self.data.shape

    @property
    def components(self):
        seen = []
        for comp, _ in self.channel_meta:
            if comp not in seen:
                seen.append(comp)
        return tuple(seen)

    @property
    def luma_only(self):
        return self.components == ("Y",)

    def frequencies(self, component):
        return [f for c, f in self.channel_meta if c == component]


def rearrange(grid, crop=(0, 0)):
    """Place each block's 64 zigzag coefficients on the channel axis."""
    data = np.ascontiguousarray(grid.blocks.transpose(2, 0, 1))
    return DctTensor(data, tuple((grid.component, k) for k in range(64)), tuple(crop))


def inverse_rearrange(t, component=None):
    """Single-component 64-channel tensor back to a CoeffBlockGrid."""
    comps = t.components
    if len(comps) != 1 or t.frequencies(comps[0]) != list(range(64)):
        raise DimensionMismatch("inverse_rearrange needs one component with all 64 frequencies")
    blocks = np.ascontiguousarray(t.data.transpose(1, 2, 0))
    return CoeffBlockGrid(component or comps[0], blocks, blocks.dtype.kind == "f")


def upsample_chroma(t, luma_shape, factor=2):
    """Nearest-neighbour replication of coefficient values, cropped to the
    luma block grid (rows, cols)."""
    rows, cols = luma_shape
    _, r, c = t.shape
    if -(-rows // factor) != r or -(-cols // factor) != c:
        raise DimensionMismatch(
            f"chroma grid {r}x{c} cannot be upsampled by {factor} onto luma grid {rows}x{cols}"
        )
    up = np.repeat(np.repeat(t.data, factor, axis=1), factor, axis=2)[:, :rows, :cols]
    return DctTensor(np.ascontiguousarray(up), t.channel_meta, t.crop)


def assemble(y, cb=None, cr=None):
    """Channel-wise concatenation Y, Cb, Cr. With no chroma the luma tensor is
    returned unchanged (its luma_only flag is set by construction)."""
    if cb is None and cr is None:
        return y
    if cb is None or cr is None:
        raise DimensionMismatch("assemble needs both chroma tensors or neither")
    parts = (y, cb, cr)
    if len({p.shape[1:] for p in parts}) != 1:
        raise DimensionMismatch(f"spatial dims differ: {[p.shape[1:] for p in parts]}")
    data = np.concatenate([p.data for p in parts], axis=0)
    meta = sum((p.channel_meta for p in parts), ())
    return DctTensor(data, meta, y.crop)


class Strategy(str, Enum):
    LOWEST = "lowest"
    MEDIAN = "median"
    HIGHEST = "highest"
    EXTREMES = "extremes"
    LIST = "list"


@dataclass(frozen=True)
class FbsSpec:
    """Static frequency band selection, retained per component.

    lowest n keeps 0..n-1; median/highest/extremes default to n=32, which gives
    16..47, 32..63 and 0..15 + 48..63.
    """

    strategy: Strategy = Strategy.LOWEST
    n: int = 64
    indices: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.strategy is Strategy.LIST:
            idx = tuple(int(i) for i in self.indices)
            if len(set(idx)) != len(idx):
                raise IndexOutOfRange("duplicate frequency indices")
            if any(not 0 <= i < 64 for i in idx):
                raise IndexOutOfRange(f"frequency indices must lie in 0..63: {idx}")
            object.__setattr__(self, "indices", idx)
            object.__setattr__(self, "n", len(idx))
        elif not 1 <= self.n <= 64:
            raise IndexOutOfRange(f"n must be in 1..64, got {self.n}")
        elif self.strategy is Strategy.EXTREMES and self.n % 2:
            raise IndexOutOfRange("extremes needs an even n")

    @classmethod
    def lowest(cls, n):
        return cls(Strategy.LOWEST, n)

    def index_set(self):
        n = self.n
        if self.strategy is Strategy.LOWEST:
            return tuple(range(n))
        if self.strategy is Strategy.MEDIAN:
            lo = (64 - n) // 2
            return tuple(range(lo, lo + n))
        if self.strategy is Strategy.HIGHEST:
            return tuple(range(64 - n, 64))
        if self.strategy is Strategy.EXTREMES:
            return tuple(range(n // 2)) + tuple(range(64 - n // 2, 64))
        return tuple(sorted(self.indices))


def select(t, spec):
    """Keep, per component present in t, the channels whose zigzag index is in
    the FbsSpec index set. Relative channel order is preserved."""
    keep = set(spec.index_set())
    for comp in t.components:
        missing = keep - set(t.frequencies(comp))
        if missing:
            raise IndexOutOfRange(f"{comp} lacks frequencies {sorted(missing)}")
    idx = [i for i, (_, f) in enumerate(t.channel_meta) if f in keep]
    return DctTensor(np.ascontiguousarray(t.data[idx]), tuple(t.channel_meta[i] for i in idx), t.crop)


def _build(jpeg, planes, idx, luma_only):
    """planes: [(component, (rows, cols, len(idx)) blocks)] -> DctTensor."""
    if luma_only:
        planes = planes[:1]
    rows, cols = planes[0][1].shape[:2]
    parts = []
    for comp, blocks in planes:
        data = blocks.transpose(2, 0, 1)
        r, c = blocks.shape[:2]
        if (r, c) != (rows, cols):
            if -(-rows // 2) != r or -(-cols // 2) != c:
                raise DimensionMismatch(f"{comp} grid {r}x{c} vs luma {rows}x{cols}")
            data = np.repeat(np.repeat(data, 2, axis=1), 2, axis=2)[:, :rows, :cols]
        parts.append(data)
    data = np.concatenate(parts, axis=0) if len(parts) > 1 else np.ascontiguousarray(parts[0])
    meta = tuple((comp, f) for comp, _ in planes for f in idx)
    return DctTensor(data, meta, (jpeg.width, jpeg.height))


def grids_to_tensor(jpeg, grids, fbs=None, luma_only=False):
    """Rearrange + chroma upsample + assemble (+ select), with the selection
    applied first so dropped frequencies are never copied."""
    idx = list(fbs.index_set()) if fbs is not None else list(range(64))
    planes = [(g.component, g.blocks[:, :, idx]) for g in grids]
    return _build(jpeg, planes, idx, luma_only)


def jpeg_to_tensor(data, fbs=None, keep_quantized=False, luma_only=False):
    """Partial decode of a JPEG byte stream straight to a DctTensor.

    Coefficients are dequantized unless keep_quantized; with fbs only the
    retained frequencies are dequantized, upsampled and concatenated.
    """
    jpeg = parse_headers(data)
    grids = decode_coefficients(jpeg, data)
    if luma_only:
        grids = grids[:1]
    idx = list(fbs.index_set()) if fbs is not None else list(range(64))
    planes = []
    for k, g in enumerate(grids):
        blocks = g.blocks[:, :, idx]
        if not keep_quantized:
            blocks = blocks.astype(np.float32) * quant_table_for(jpeg, k)[idx].astype(np.float32)
        planes.append((g.component, blocks))
    return _build(jpeg, planes, idx, luma_only)


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean/std from a corpus pass, used for affine standardization
    of assembled tensors (inference-side stand-in for the entry batch norm)."""

    channel_meta: tuple
    mean: np.ndarray
    std: np.ndarray

    def to_json(self):
        return json.dumps({
            "channel_meta": [list(m) for m in self.channel_meta],
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        })

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(tuple(tuple(m) for m in obj["channel_meta"]),
                   np.asarray(obj["mean"], dtype=np.float64), np.asarray(obj["std"], dtype=np.float64))


def channel_stats(tensors, eps=1e-6):
    tensors = list(tensors)
    if not tensors:
        raise DimensionMismatch("no tensors")
    meta = tensors[0].channel_meta
    if any(t.channel_meta != meta for t in tensors):
        raise DimensionMismatch("tensors disagree on channel layout")
    flat = np.concatenate([t.data.reshape(t.shape[0], -1).astype(np.float64) for t in tensors], axis=1)
    return ChannelStats(meta, flat.mean(axis=1), np.maximum(flat.std(axis=1), eps))


def standardize(t, stats):
    if t.channel_meta != stats.channel_meta:
        raise DimensionMismatch("stats were computed for a different channel layout")
    out = (t.data - stats.mean[:, None, None]) / stats.std[:, None, None]
    return DctTensor(out.astype(np.float32), t.channel_meta, t.crop)
