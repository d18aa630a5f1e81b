"""Loader for the versioned variant config (INI)."""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from dctpipe.errors import FormatVersionMismatch

CONFIG_VERSION = 1


def _ints(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


@dataclass(frozen=True)
class CostConfig:
    stage_widths: tuple = (64, 128, 256, 512)
    stage_blocks: tuple = (3, 4, 6, 3)
    expansion: int = 4
    num_classes: int = 1000
    rgb_resolution: int = 224
    dct_resolution: int = 28
    rfa_width_slope: float = 1.5
    rfa_width_offset: float = 16.0
    width_multiple: int = 8
    rfa_out_per_band: int = 4
    rfa_stride_blocks: tuple = (7, 13)
    reduction_in: int = 192
    reduction_out: int = 64
    # skip_stride_blocks[k - 1] for k stages skipped
    skip_stride_blocks: tuple = ((7, 13), (3, 10), (6,), ())

    def rfa_stage2(self, n):
        """(bottleneck width, output channels) of stage 2 fed by 3n channels."""
        c = 3 * n
        m = self.width_multiple
        width = int(round((self.rfa_width_slope * c + self.rfa_width_offset) / m)) * m
        return width, self.rfa_out_per_band * n


def load_config(path=None):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if path is None:
        text = resources.files("dctpipe.cost").joinpath("variants.ini").read_text()
    else:
        text = Path(path).read_text()
    parser.read_string(text)
    version = parser.getint("format", "version", fallback=None)
    if version != CONFIG_VERSION:
        raise FormatVersionMismatch(f"cost config version {version}, expected {CONFIG_VERSION}")
    r, a, red = parser["resnet50"], parser["rfa"], parser["reduction"]
    skips = (_ints(red["stride_blocks"]),) + tuple(
        _ints(parser[f"skip{k}"]["stride_blocks"]) for k in (2, 3, 4)
    )
    return CostConfig(
        stage_widths=_ints(r["stage_widths"]),
        stage_blocks=_ints(r["stage_blocks"]),
        expansion=r.getint("expansion"),
        num_classes=r.getint("num_classes"),
        rgb_resolution=r.getint("rgb_resolution"),
        dct_resolution=r.getint("dct_resolution"),
        rfa_width_slope=a.getfloat("stage2_width_slope"),
        rfa_width_offset=a.getfloat("stage2_width_offset"),
        width_multiple=a.getint("width_multiple"),
        rfa_out_per_band=a.getint("stage2_out_per_band"),
        rfa_stride_blocks=_ints(a["stride_blocks"]),
        reduction_in=red.getint("in_channels"),
        reduction_out=red.getint("out_channels"),
        skip_stride_blocks=skips,
    )
