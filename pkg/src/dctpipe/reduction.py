"""Data-driven channel reduction operators applied pointwise over the block grid.

lp    y(p) = W x(p)                                   W: m x n, no bias
la    r = x split into m groups of n/m adjacent channels
      s_ij(p) = W_ij r_ij(p), a_i(p) = softmax_j s_i(p), y_i(p) = sum_j a_ij(p) r_ij(p)
ccpp  y(p) = max(0, W x(p) + b)                       W: m x n, b: m

Accumulation is always float64; outputs are cast to the operator's dtype.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from dctpipe import dctt
from dctpipe.errors import FormatVersionMismatch, GroupSizeError, ShapeMismatch
from dctpipe.tensor import DctTensor


class Kind(str, Enum):
    LP = "lp"
    LA = "la"
    CCPP = "ccpp"


@dataclass(frozen=True)
class ReductionOperator:
    kind: Kind
    in_channels: int
    out_channels: int
    weight: np.ndarray
    bias: np.ndarray | None = None
    dtype: np.dtype = field(default=np.dtype(np.float32))

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "dtype", np.dtype(self.dtype))
        n, m = self.in_channels, self.out_channels
        if self.kind is Kind.LA:
            if n % m:
                raise GroupSizeError(f"local attention needs out_channels | in_channels ({m} does not divide {n})")
            expected = (m, n // m)
        else:
            expected = (m, n)
        w = np.asarray(self.weight, dtype=self.dtype)
        if w.shape != expected:
            raise ShapeMismatch(f"{self.kind.value} weight must be {expected}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ShapeMismatch("weights must be finite")
        object.__setattr__(self, "weight", w)
        if self.kind is Kind.CCPP:
            b = np.zeros(m, self.dtype) if self.bias is None else np.asarray(self.bias, dtype=self.dtype)
            if b.shape != (m,) or not np.all(np.isfinite(b)):
                raise ShapeMismatch(f"ccpp bias must be ({m},) finite, got {b.shape}")
            object.__setattr__(self, "bias", b)
        elif self.bias is not None:
            raise ShapeMismatch(f"{self.kind.value} carries no bias")

    @classmethod
    def init(cls, kind, in_channels, out_channels, seed=0, dtype=np.float32):
        """Seeded uniform init in [-1/sqrt(n), 1/sqrt(n)]."""
        kind = Kind(kind)
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(in_channels)
        if kind is Kind.LA:
            if in_channels % out_channels:
                raise GroupSizeError(
                    f"local attention needs out_channels | in_channels ({out_channels} does not divide {in_channels})"
                )
            shape = (out_channels, in_channels // out_channels)
        else:
            shape = (out_channels, in_channels)
        w = rng.uniform(-bound, bound, size=shape)
        b = rng.uniform(-bound, bound, size=out_channels) if kind is Kind.CCPP else None
        return cls(kind, in_channels, out_channels, w, b, dtype)

    def astype(self, dtype):
        return ReductionOperator(self.kind, self.in_channels, self.out_channels,
                                 self.weight.astype(dtype),
                                 None if self.bias is None else self.bias.astype(dtype), dtype)

    @property
    def group_size(self):
        return self.in_channels // self.out_channels

    @property
    def n_params(self):
        return self.weight.size + (0 if self.bias is None else self.bias.size)


def _input(op, x):
    if isinstance(x, DctTensor):
        x = x.data
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[0] != op.in_channels:
        raise ShapeMismatch(f"{op.kind.value} expects ({op.in_channels}, h, w) input, got {x.shape}")
    return x.astype(np.float64, copy=False)


def lp_forward(op, x):
    x = _input(op, x)
    w = op.weight.astype(np.float64)
    y = np.tensordot(w, x, axes=(1, 0))
    return y.astype(op.dtype)


def la_attention(op, x):
    """Attention maps a, shape (m, n/m, h, w); each group sums to 1 per position."""
    x = _input(op, x)
    r = x.reshape(op.out_channels, op.group_size, *x.shape[1:])
    s = op.weight.astype(np.float64)[:, :, None, None] * r
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def la_forward(op, x):
    x = _input(op, x)
    r = x.reshape(op.out_channels, op.group_size, *x.shape[1:])
    a = la_attention(op, x)
    return (a * r).sum(axis=1).astype(op.dtype)


def ccpp_preactivation(op, x):
    x = _input(op, x)
    return np.tensordot(op.weight.astype(np.float64), x, axes=(1, 0)) + op.bias.astype(np.float64)[:, None, None]


def ccpp_forward(op, x):
    return np.maximum(ccpp_preactivation(op, x), 0.0).astype(op.dtype)


_FORWARD = {Kind.LP: lp_forward, Kind.LA: la_forward, Kind.CCPP: ccpp_forward}


def forward(op, x):
    return _FORWARD[op.kind](op, x)


def reduce_tensor(op, t):
    """Forward on a DctTensor; the result carries feature-channel metadata."""
    y = forward(op, t)
    meta = tuple(("feature", i % 256) for i in range(y.shape[0]))
    return DctTensor(y, meta, t.crop)


@dataclass(frozen=True)
class Grads:
    x: np.ndarray
    weight: np.ndarray
    bias: np.ndarray | None = None


def backward(op, x, upstream):
    """Gradients of L = <upstream, forward(op, x)> w.r.t. x, weight (and bias).
    Computed in float64 regardless of op.dtype."""
    x = _input(op, x)
    g = np.asarray(upstream, dtype=np.float64)
    out_shape = (op.out_channels,) + x.shape[1:]
    if g.shape != out_shape:
        raise ShapeMismatch(f"upstream gradient must be {out_shape}, got {g.shape}")
    w = op.weight.astype(np.float64)
    if op.kind is Kind.LP:
        return Grads(np.tensordot(w, g, axes=(0, 0)), np.tensordot(g, x, axes=([1, 2], [1, 2])))
    if op.kind is Kind.CCPP:
        pre = ccpp_preactivation(op, x)
        d = g * (pre > 0)
        return Grads(np.tensordot(w, d, axes=(0, 0)), np.tensordot(d, x, axes=([1, 2], [1, 2])),
                     d.sum(axis=(1, 2)))
    # local attention
    r = x.reshape(op.out_channels, op.group_size, *x.shape[1:])
    a = la_attention(op, x)
    da = g[:, None] * r
    ds = a * (da - (a * da).sum(axis=1, keepdims=True))
    dr = g[:, None] * a + ds * w[:, :, None, None]
    dw = (ds * r).sum(axis=(2, 3))
    return Grads(dr.reshape(x.shape), dw)


@dataclass(frozen=True)
class GradCheckReport:
    kind: Kind
    step: float
    max_rel_error: float
    passed: bool
    trials: int
    compared: int
    excluded: int

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        op = "<" if self.passed else ">="
        return (f"{verdict} {self.kind.value} max_rel_err={self.max_rel_error:.3e} {op} 1e-4 "
                f"(trials={self.trials}, step={self.step:g}, compared={self.compared}, excluded={self.excluded})")


REL_TOL = 1e-4
# denominators below this are treated as this, so vanishing gradients are
# compared absolutely
REL_FLOOR = 1e-4


def _rel(a, b):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), REL_FLOOR)


def _numeric(f, arr, step):
    out = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + step
        fp = f()
        arr[i] = old - step
        fm = f()
        arr[i] = old
        out[i] = (fp - fm) / (2 * step)
    return out


def grad_check(op, trials=10, seed=0, step=1e-5, spatial=(2, 2), x=None):
    """Compare backward() with central finite differences on random inputs.

    Runs in float64. For ccpp, entries whose finite-difference stencil could
    cross a ReLU kink (|pre-activation| within reach of the step, including
    exact zeros) are excluded and counted.
    """
    rng = np.random.default_rng(seed)
    op64 = op.astype(np.float64)
    worst = 0.0
    compared = excluded = 0
    for t in range(trials):
        xt = np.array(x, dtype=np.float64) if (x is not None and t == 0) else \
            rng.uniform(-1, 1, size=(op.in_channels,) + tuple(spatial))
        g = rng.uniform(-1, 1, size=(op.out_channels,) + xt.shape[1:])
        w = op64.weight.copy()
        b = None if op64.bias is None else op64.bias.copy()

        def loss():
            cur = ReductionOperator(op.kind, op.in_channels, op.out_channels, w, b, np.float64)
            return float((forward(cur, xt) * g).sum())

        an = backward(ReductionOperator(op.kind, op.in_channels, op.out_channels, w, b, np.float64), xt, g)
        pairs = [(an.x, _numeric(loss, xt, step)), (an.weight, _numeric(loss, w, step))]
        if b is not None:
            pairs.append((an.bias, _numeric(loss, b, step)))

        masks = [np.ones(p[0].shape, bool) for p in pairs]
        if op.kind is Kind.CCPP:
            pre = ccpp_preactivation(op64, xt)
            reach_x = step * np.abs(w).sum(axis=1)[:, None, None]
            near_x = np.abs(pre) <= 2 * reach_x
            masks[0] = ~np.broadcast_to(near_x.any(axis=0)[None], xt.shape)
            reach_w = step * (np.abs(xt).max() + 1.0)
            bad_rows = (np.abs(pre) <= 2 * reach_w).any(axis=(1, 2))
            masks[1] = ~np.broadcast_to(bad_rows[:, None], w.shape)
            masks[2] = ~bad_rows
        for (a, n), mk in zip(pairs, masks):
            compared += int(mk.sum())
            excluded += int((~mk).sum())
            if mk.any():
                worst = max(worst, float(_rel(a[mk], n[mk]).max()))
    return GradCheckReport(op.kind, step, worst, worst < REL_TOL, trials, compared, excluded)


# weight files: leading record, then one DCTT record per array
_OPHEAD = struct.Struct("<4sBBHII")
_OPMAGIC = b"RDOP"
_KIND_CODES = {Kind.LP: 1, Kind.LA: 2, Kind.CCPP: 3}


def save_operator(op, path):
    arrays = [op.weight] + ([op.bias] if op.bias is not None else [])
    parts = [_OPHEAD.pack(_OPMAGIC, 1, _KIND_CODES[op.kind], len(arrays), op.in_channels, op.out_channels)]
    for arr in arrays:
        a3 = np.asarray(arr, dtype=np.float32).reshape((1,) * (3 - arr.ndim) + arr.shape)
        parts.append(dctt.encode(DctTensor(a3, (("feature", 0),))))
    Path(path).write_bytes(b"".join(parts))


def load_operator(path, dtype=np.float32):
    buf = Path(path).read_bytes()
    if len(buf) < _OPHEAD.size:
        raise FormatVersionMismatch("weight file too short")
    magic, version, kcode, count, n, m = _OPHEAD.unpack_from(buf)
    if magic != _OPMAGIC or version != 1:
        raise FormatVersionMismatch("not a reduction-operator weight file")
    kinds = {v: k for k, v in _KIND_CODES.items()}
    if kcode not in kinds:
        raise FormatVersionMismatch(f"unknown operator kind code {kcode}")
    arrays = dctt.read_all(buf[_OPHEAD.size:])
    if len(arrays) != count:
        raise FormatVersionMismatch(f"expected {count} arrays, found {len(arrays)}")
    w = arrays[0].data[0]
    b = arrays[1].data[0, 0] if count > 1 else None
    return ReductionOperator(kinds[kcode], n, m, w, b, dtype)
