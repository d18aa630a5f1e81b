"""Symbolic ResNet-50 family: layer graphs, exact parameter counts and FLOP
estimates for the RGB baseline and its DCT-input variants."""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

from dctpipe.cost.config import CostConfig, load_config
from dctpipe.errors import MissingBaseline, ShapeMismatch, UnelaboratedSpec, UnknownVariant

# floating point operations of one 8x8 forward DCT computed as a convolution
DCT_FLOPS_PER_BLOCK = 1920

CONVENTIONS = {
    "flop_unit": "one multiply-accumulate = one FLOP",
    "headline_flops": "Conv, FullyConnected and the 1x1 LP/CCPP channel maps",
    "itemized_only": "BatchNorm, ReLU, MaxPool, GlobalAvgPool, Add, LAOp (n multiplies + softmax per position)",
    "params": "weights + biases + BatchNorm affine pairs (2 per channel)",
    "bias": "convolutions carry no bias; FC and CCPP do",
    "shortcut": "projection (1x1 conv + BN) when channels change; strided subsample when only the resolution does",
}


class LayerKind(str, Enum):
    CONV = "Conv"
    BATCHNORM = "BatchNorm"
    RELU = "ReLU"
    MAXPOOL = "MaxPool"
    GAP = "GlobalAvgPool"
    FC = "FullyConnected"
    ADD = "Add"
    LP = "LPOp"
    LA = "LAOp"
    CCPP = "CCPPOp"
    CONCAT = "Concat"
    UPSAMPLE = "Upsample"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    in_channels: int
    out_channels: int
    kernel: tuple = (1, 1)
    stride: tuple = (1, 1)
    padding: int = 0
    bias: bool = False
    scale: int = 1  # Upsample factor
    name: str = ""
    input_resolution: tuple | None = None

    def output_resolution(self, res=None):
        h, w = res if res is not None else self.input_resolution
        if self.kind in (LayerKind.CONV, LayerKind.MAXPOOL):
            (kh, kw), (sh, sw), p = self.kernel, self.stride, self.padding
            return ((h + 2 * p - kh) // sh + 1, (w + 2 * p - kw) // sw + 1)
        if self.kind is LayerKind.UPSAMPLE:
            return (h * self.scale, w * self.scale)
        if self.kind in (LayerKind.GAP, LayerKind.FC):
            return (1, 1)
        return (h, w)


def conv(cin, cout, k, stride=1, name=""):
    return LayerSpec(LayerKind.CONV, cin, cout, (k, k), (stride, stride), k // 2, name=name)


def _pointwise(kind, c, name):
    return LayerSpec(kind, c, c, name=name)


@dataclass(frozen=True)
class Bottleneck:
    in_channels: int
    width: int
    out_channels: int
    stride: int = 1

    @property
    def shortcut(self):
        if self.in_channels != self.out_channels:
            return "projection"
        return "subsample" if self.stride != 1 else "identity"


@dataclass(frozen=True)
class ArchSpec:
    name: str
    input_descriptor: tuple  # (domain, channels, height, width)
    entry: tuple
    stages: tuple  # ((stage number, (Bottleneck, ...)), ...)
    head: tuple
    layers: tuple | None = None

    @property
    def elaborated(self):
        return self.layers is not None

    @property
    def output_resolution(self):
        """Resolution entering global pooling."""
        if not self.elaborated:
            raise UnelaboratedSpec(f"{self.name} has not been elaborated")
        gap = next(l for l in self.layers if l.kind is LayerKind.GAP)
        return gap.input_resolution

    def blocks(self):
        return [b for _, blocks in self.stages for b in blocks]


def _block_layers(prefix, b):
    s = b.stride
    main = [
        conv(b.in_channels, b.width, 1, s, f"{prefix}.conv1"),
        _pointwise(LayerKind.BATCHNORM, b.width, f"{prefix}.bn1"),
        _pointwise(LayerKind.RELU, b.width, f"{prefix}.relu1"),
        conv(b.width, b.width, 3, 1, f"{prefix}.conv2"),
        _pointwise(LayerKind.BATCHNORM, b.width, f"{prefix}.bn2"),
        _pointwise(LayerKind.RELU, b.width, f"{prefix}.relu2"),
        conv(b.width, b.out_channels, 1, 1, f"{prefix}.conv3"),
        _pointwise(LayerKind.BATCHNORM, b.out_channels, f"{prefix}.bn3"),
    ]
    if b.shortcut == "projection":
        short = [conv(b.in_channels, b.out_channels, 1, s, f"{prefix}.downsample"),
                 _pointwise(LayerKind.BATCHNORM, b.out_channels, f"{prefix}.downsample_bn")]
    elif b.shortcut == "subsample":
        short = [LayerSpec(LayerKind.MAXPOOL, b.in_channels, b.in_channels, (1, 1), (s, s),
                           name=f"{prefix}.subsample")]
    else:
        short = []
    tail = [_pointwise(LayerKind.ADD, b.out_channels, f"{prefix}.add"),
            _pointwise(LayerKind.RELU, b.out_channels, f"{prefix}.relu3")]
    return main, short, tail


def _place(layer, res, channels):
    if layer.in_channels != channels:
        raise ShapeMismatch(f"{layer.name}: expects {layer.in_channels} channels, gets {channels}")
    res = layer.input_resolution or res
    placed = replace(layer, input_resolution=tuple(res))
    return placed, placed.output_resolution(), layer.out_channels


def elaborate(spec):
    """Propagate resolutions from the input descriptor through every layer."""
    _, channels, h, w = spec.input_descriptor
    res = (h, w)
    out = []
    for layer in spec.entry:
        if layer.kind is LayerKind.UPSAMPLE:
            # chroma side branch; rejoins the luma grid at the following Concat
            placed = replace(layer, input_resolution=tuple(layer.input_resolution))
            if placed.output_resolution() != res:
                raise ShapeMismatch(f"{layer.name}: upsampled to {placed.output_resolution()}, grid is {res}")
            out.append(placed)
            continue
        placed, res, channels = _place(layer, res, channels)
        out.append(placed)
    for number, blocks in spec.stages:
        for i, b in enumerate(blocks):
            main, short, tail = _block_layers(f"stage{number}.block{i}", b)
            r_main, c_main = res, channels
            for layer in main:
                placed, r_main, c_main = _place(layer, r_main, c_main)
                out.append(placed)
            r_short, c_short = res, channels
            for layer in short:
                placed, r_short, c_short = _place(layer, r_short, c_short)
                out.append(placed)
            if (r_main, c_main) != (r_short, c_short):
                raise ShapeMismatch(f"stage{number}.block{i}: Add operands {c_main}x{r_main} vs {c_short}x{r_short}")
            for layer in tail:
                placed, res, channels = _place(layer, r_main, c_main)
                out.append(placed)
    for layer in spec.head:
        placed, res, channels = _place(layer, res, channels)
        out.append(placed)
    return replace(spec, layers=tuple(out))


def _stem(cfg):
    c = cfg.stage_widths[0]
    return (
        conv(3, c, 7, 2, "stem.conv"),
        _pointwise(LayerKind.BATCHNORM, c, "stem.bn"),
        _pointwise(LayerKind.RELU, c, "stem.relu"),
        LayerSpec(LayerKind.MAXPOOL, c, c, (3, 3), (2, 2), 1, name="stem.maxpool"),
    )


def _head(cfg, channels):
    return (
        _pointwise(LayerKind.GAP, channels, "head.avgpool"),
        LayerSpec(LayerKind.FC, channels, cfg.num_classes, bias=True, name="head.fc"),
    )


def _stages(cfg, first, in_channels, stride_blocks, stage2=None):
    """Bottleneck stages from residual-stage index `first` (0 = conv2_x).

    stride_blocks indexes the flattened list of retained blocks; stage2
    optionally overrides (width, out) of the conv2_x stage.
    """
    stages = []
    k = 0
    cin = in_channels
    for si in range(first, len(cfg.stage_widths)):
        width = cfg.stage_widths[si]
        out = width * cfg.expansion
        if si == 0 and stage2 is not None:
            width, out = stage2
        blocks = []
        for _ in range(cfg.stage_blocks[si]):
            blocks.append(Bottleneck(cin, width, out, 2 if k in stride_blocks else 1))
            cin = out
            k += 1
        stages.append((si + 2, tuple(blocks)))
    return tuple(stages), cin


def _dct_entry(cfg, n):
    """Chroma coefficient upsampling, concatenation and entry batch norm."""
    g = cfg.dct_resolution
    half = -(-g // 2)
    return (
        LayerSpec(LayerKind.UPSAMPLE, 2 * n, 2 * n, scale=2, name="entry.upsample_chroma",
                  input_resolution=(half, half)),
        LayerSpec(LayerKind.CONCAT, 3 * n, 3 * n, name="entry.concat"),
        _pointwise(LayerKind.BATCHNORM, 3 * n, "entry.bn"),
    )


@dataclass(frozen=True)
class Variant:
    family: str  # resnet50 | rfa | fbs | lp | la | ccpp | skip
    arg: int | None = None

    @property
    def label(self):
        return {
            "resnet50": "ResNet50",
            "rfa": "UpsamplingRFA",
            "fbs": f"FBS({self.arg})",
            "lp": f"LP{self.arg}",
            "la": f"LA{self.arg}",
            "ccpp": f"CCPP{self.arg}",
            "skip": f"SkipStages({self.arg})",
        }[self.family]


_PATTERNS = [
    (r"resnet-?50", "resnet50"),
    (r"(upsampling-?)?rfa", "rfa"),
    (r"fbs\(?(?:3x)?(\d+)\)?", "fbs"),
    (r"(lp|la|ccpp)(?:\(?(?:1x)?(\d+)\)?)?", None),
    (r"skip(?:stages)?[-_]?\(?(\d)\)?(?:-?ccpp)?", "skip"),
    (r"skip-([1-4](?:,[1-4])*|1\.\.4)", "skiplist"),
]


def parse_variant(name):
    if isinstance(name, Variant):
        return name
    text = str(name).strip().lower().replace(" ", "")
    for pattern, family in _PATTERNS:
        m = re.fullmatch(pattern, text)
        if not m:
            continue
        if family is None:
            kind, m_out = m.group(1), m.group(2)
            if m_out not in (None, "64"):
                raise UnknownVariant(f"{name}: reduction entries other than 64 outputs are the skip variants")
            return Variant(kind, 64)
        if family == "skiplist":
            body = m.group(1)
            k = 4 if body == "1..4" else len(body.split(","))
            return _checked(Variant("skip", k), name)
        arg = int(m.group(1)) if family in ("fbs", "skip") else None
        return _checked(Variant(family, arg), name)
    raise UnknownVariant(f"unknown variant {name!r}")


def _checked(v, name):
    if v.family == "fbs" and not 1 <= v.arg <= 64:
        raise UnknownVariant(f"{name}: FBS needs 1 <= n <= 64")
    if v.family == "skip" and not 1 <= v.arg <= 4:
        raise UnknownVariant(f"{name}: between 1 and 4 stages can be skipped")
    return v


ALL_VARIANTS = (
    "ResNet50", "UpsamplingRFA", "FBS(32)", "FBS(16)", "LP64", "LA64", "CCPP64",
    "SkipStages(2)", "SkipStages(3)", "SkipStages(4)",
)


def build_variant(name, config: CostConfig | None = None):
    """Elaborated ArchSpec for a named variant."""
    cfg = config or load_config()
    v = parse_variant(name)
    g = cfg.dct_resolution
    if v.family == "resnet50":
        r = cfg.rgb_resolution
        stages, out = _stages(cfg, 0, cfg.stage_widths[0], (3, 7, 13))
        spec = ArchSpec(v.label, ("rgb", 3, r, r), _stem(cfg), stages, _head(cfg, out))
    elif v.family in ("rfa", "fbs"):
        n = 64 if v.family == "rfa" else v.arg
        stages, out = _stages(cfg, 0, 3 * n, cfg.rfa_stride_blocks, cfg.rfa_stage2(n))
        spec = ArchSpec(v.label, ("dct", 3 * n, g, g), _dct_entry(cfg, n), stages, _head(cfg, out))
    else:
        if v.family == "skip":
            k, kind = v.arg, "ccpp"
        else:
            k, kind = 1, v.family
        first = k - 1
        m = cfg.stage_widths[first] if k > 1 else cfg.reduction_out
        n_in = cfg.reduction_in
        op_kind = {"lp": LayerKind.LP, "la": LayerKind.LA, "ccpp": LayerKind.CCPP}[kind]
        op = LayerSpec(op_kind, n_in, m, bias=kind == "ccpp", name=f"entry.{kind}")
        entry = _dct_entry(cfg, n_in // 3) + (op,)
        stages, out = _stages(cfg, first, m, cfg.skip_stride_blocks[k - 1])
        spec = ArchSpec(v.label, ("dct", n_in, g, g), entry, stages, _head(cfg, out))
    return elaborate(spec)


@dataclass(frozen=True)
class LayerCost:
    name: str
    kind: str
    params: int
    flops: int
    aux_ops: int
    output_shape: tuple


@dataclass(frozen=True)
class CostReport:
    name: str
    rows: tuple
    params: int
    flops: int
    aux_ops: int
    preprocessing_flops: int = 0
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    @property
    def gflops(self):
        return self.flops / 1e9

    @property
    def mparams(self):
        return self.params / 1e6

    def itemized(self):
        """Per layer kind: params, headline flops and excluded ops."""
        out = {}
        for r in self.rows:
            p, f, a = out.get(r.kind, (0, 0, 0))
            out[r.kind] = (p + r.params, f + r.flops, a + r.aux_ops)
        return out

    def entry_cost(self):
        """(params, flops, aux_ops) of the DCT entry layers."""
        rows = [r for r in self.rows if r.name.startswith("entry.")]
        return (sum(r.params for r in rows), sum(r.flops for r in rows), sum(r.aux_ops for r in rows))

    def to_json(self):
        obj = asdict(self)
        obj["rows"] = [asdict(r) for r in self.rows]
        return json.dumps(obj, indent=2)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "kind", "params", "flops", "aux_ops", "output_shape"])
        for r in self.rows:
            w.writerow([r.name, r.kind, r.params, r.flops, r.aux_ops, "x".join(map(str, r.output_shape))])
        w.writerow(["total", "", self.params, self.flops, self.aux_ops, ""])
        return buf.getvalue()


def _layer_cost(layer):
    h, w = layer.input_resolution
    oh, ow = layer.output_resolution()
    cin, cout = layer.in_channels, layer.out_channels
    pos, opos = h * w, oh * ow
    params = flops = aux = 0
    k = layer.kind
    if k is LayerKind.CONV:
        weights = cin * cout * layer.kernel[0] * layer.kernel[1]
        params = weights + (cout if layer.bias else 0)
        flops = weights * opos
    elif k is LayerKind.FC:
        params = cin * cout + (cout if layer.bias else 0)
        flops = cin * cout
    elif k in (LayerKind.LP, LayerKind.CCPP):
        params = cin * cout + (cout if layer.bias else 0)
        flops = cin * cout * pos
        aux = cout * pos if k is LayerKind.CCPP else 0  # ReLU
    elif k is LayerKind.LA:
        params = cin
        # scores, exp, group sum, divide, weighted product, group sum
        aux = 6 * cin * pos
    elif k is LayerKind.BATCHNORM:
        params = 2 * cin
        aux = 2 * cin * pos
    elif k in (LayerKind.RELU, LayerKind.ADD, LayerKind.GAP):
        aux = cin * pos
    elif k is LayerKind.MAXPOOL:
        aux = cin * opos * layer.kernel[0] * layer.kernel[1]
    shape = (cout, oh, ow) if k is not LayerKind.FC else (cout,)
    return LayerCost(layer.name, k.value, params, flops, aux, shape)


def dct_preprocessing_flops(height, width, subsampling="4:2:0"):
    """Forward-DCT cost of a (height, width) RGB crop, 1920 FLOPs per block."""
    luma = -(-height // 8) * -(-width // 8)
    if subsampling == "4:2:0":
        chroma = -(-height // 16) * -(-width // 16)
    else:
        chroma = luma
    return DCT_FLOPS_PER_BLOCK * (luma + 2 * chroma)


def count(spec, include_dct=False):
    if not isinstance(spec, ArchSpec) or not spec.elaborated:
        raise UnelaboratedSpec(f"{getattr(spec, 'name', spec)!r} must be elaborated before counting")
    rows = tuple(_layer_cost(l) for l in spec.layers)
    pre = 0
    if include_dct and spec.input_descriptor[0] == "dct":
        g = spec.input_descriptor[2]
        pre = dct_preprocessing_flops(8 * g, 8 * g)
    return CostReport(
        spec.name, rows,
        sum(r.params for r in rows), sum(r.flops for r in rows), sum(r.aux_ops for r in rows), pre,
    )


@dataclass(frozen=True)
class Comparison:
    name: str
    flops: int
    params: int
    flops_ratio: float
    params_ratio: float


def compare(reports, baseline="ResNet50"):
    reports = list(reports)
    if isinstance(baseline, str):
        try:
            label = parse_variant(baseline).label
        except UnknownVariant:
            label = baseline
        base = next((r for r in reports if r.name in (baseline, label)), None)
    else:
        base = baseline
    if base is None:
        raise MissingBaseline(f"baseline {baseline!r} is not among {[r.name for r in reports]}")
    return [Comparison(r.name, r.flops, r.params, r.flops / base.flops, r.params / base.params) for r in reports]


def comparison_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "gflops", "mparams", "flops_ratio", "params_ratio"])
    for r in rows:
        w.writerow([r.name, f"{r.flops / 1e9:.3f}", f"{r.params / 1e6:.3f}",
                    f"{r.flops_ratio:.4f}", f"{r.params_ratio:.4f}"])
    return buf.getvalue()


def comparison_json(rows):
    return json.dumps([asdict(r) for r in rows], indent=2)
