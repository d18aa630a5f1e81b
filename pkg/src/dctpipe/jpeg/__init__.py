from dctpipe.jpeg.coeffs import (
    COMPONENT_NAMES,
    CoeffBlockGrid,
    decode_coefficients,
    dequantize,
    quant_table_for,
    read_coefficients,
)
from dctpipe.jpeg.headers import Component, HuffmanTable, ParsedJpeg, parse_headers
from dctpipe.jpeg.pixels import IDCT_BLOCKS, decode_rgb, reconstruct_rgb

__all__ = [
    "COMPONENT_NAMES",
    "CoeffBlockGrid",
    "Component",
    "HuffmanTable",
    "IDCT_BLOCKS",
    "ParsedJpeg",
    "decode_coefficients",
    "decode_rgb",
    "dequantize",
    "parse_headers",
    "quant_table_for",
    "read_coefficients",
    "reconstruct_rgb",
]
