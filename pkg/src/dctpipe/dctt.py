"""DCTT binary tensor container.

Layout (little-endian):
    magic "DCTT" | version u8 = 1 | dtype u8 (1 float32, 2 int16) | reserved u16 = 0
    ndim u8 = 3 | dims 3 x u32 (channels, rows, cols)
    channel meta: channels x (component code u8, frequency u8)
    crop extent 2 x u32 (width, height)
    payload, row-major | CRC32 of payload u32
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from dctpipe.errors import (
    ChecksumMismatch,
    FormatVersionMismatch,
    TruncatedFile,
    UnwritableOutput,
)
from dctpipe.tensor import COMPONENT_CODES, COMPONENT_FROM_CODE, DctTensor

MAGIC = b"DCTT"
VERSION = 1
DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<i2")}
DTYPE_CODES = {np.dtype(np.float32): 1, np.dtype(np.int16): 2}
_HEAD = struct.Struct("<4sBBHB3I")


def header_size(channels):
    return _HEAD.size + 2 * channels + 8


def encode(t):
    dtype = np.dtype(t.data.dtype)
    if dtype not in DTYPE_CODES:
        if dtype.kind == "f":
            dtype = np.dtype(np.float32)
        else:
            raise FormatVersionMismatch(f"DCTT cannot store dtype {dtype}")
    c, r, w = t.shape
    meta = bytearray()
    for comp, freq in t.channel_meta:
        meta += bytes((COMPONENT_CODES[comp], int(freq) & 0xFF))
    payload = np.ascontiguousarray(t.data, dtype=DTYPES[DTYPE_CODES[dtype]]).tobytes()
    return b"".join((
        _HEAD.pack(MAGIC, VERSION, DTYPE_CODES[dtype], 0, 3, c, r, w),
        bytes(meta),
        struct.pack("<2I", *t.crop),
        payload,
        struct.pack("<I", zlib.crc32(payload)),
    ))


def decode(buf):
    buf = bytes(buf)
    if len(buf) < _HEAD.size:
        if buf[:4] != MAGIC[:len(buf[:4])]:
            raise FormatVersionMismatch("not a DCTT file")
        raise TruncatedFile("file shorter than the DCTT header")
    magic, version, dcode, reserved, ndim, c, r, w = _HEAD.unpack_from(buf)
    if magic != MAGIC:
        raise FormatVersionMismatch(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatVersionMismatch(f"DCTT version {version}, expected {VERSION}")
    if dcode not in DTYPES or ndim != 3 or reserved != 0:
        raise FormatVersionMismatch(f"unsupported dtype code {dcode} / ndim {ndim}")
    dtype = DTYPES[dcode]
    pos = _HEAD.size
    need = pos + 2 * c + 8 + c * r * w * dtype.itemsize + 4
    if len(buf) < need:
        raise TruncatedFile(f"DCTT file has {len(buf)} bytes, header announces {need}")
    meta = []
    for k in range(c):
        code, freq = buf[pos + 2 * k], buf[pos + 2 * k + 1]
        if code not in COMPONENT_FROM_CODE:
            raise FormatVersionMismatch(f"unknown component code {code}")
        meta.append((COMPONENT_FROM_CODE[code], freq))
    pos += 2 * c
    crop = struct.unpack_from("<2I", buf, pos)
    pos += 8
    payload = buf[pos:pos + c * r * w * dtype.itemsize]
    pos += len(payload)
    (crc,) = struct.unpack_from("<I", buf, pos)
    if crc != zlib.crc32(payload):
        raise ChecksumMismatch("payload CRC32 mismatch")
    data = np.frombuffer(payload, dtype=dtype).reshape(c, r, w).astype(dtype.newbyteorder("="))
    return DctTensor(data, tuple(meta), tuple(crop)), pos + 4


def write_tensor(t, sink):
    """Write t to a path or a binary file object."""
    blob = encode(t)
    if hasattr(sink, "write"):
        sink.write(blob)
        return len(blob)
    try:
        Path(sink).write_bytes(blob)
    except OSError as e:
        raise UnwritableOutput(f"cannot write {sink}: {e}") from e
    return len(blob)


def read_tensor(source):
    """Read one DCTT tensor from a path, bytes or a binary file object."""
    if isinstance(source, (bytes, bytearray, memoryview)):
        buf = bytes(source)
    elif hasattr(source, "read"):
        buf = source.read()
    else:
        buf = Path(source).read_bytes()
    t, _ = decode(buf)
    return t


def read_all(buf):
    """Decode consecutive DCTT records from one buffer."""
    out = []
    data = bytes(buf)
    pos = 0
    while pos < len(data):
        t, used = decode(data[pos:])
        out.append(t)
        pos += used
    return out
