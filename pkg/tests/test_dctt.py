import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dctpipe import dctt
from dctpipe.errors import ChecksumMismatch, FormatVersionMismatch, TruncatedFile, UnwritableOutput
from dctpipe.tensor import DctTensor


def _meta(c):
    comps = ["Y", "Cb", "Cr"]
    return tuple((comps[i // 64], i % 64) for i in range(c))


@st.composite
def tensors(draw):
    c = draw(st.integers(1, 192))
    r, w = draw(st.integers(1, 5)), draw(st.integers(1, 5))
    dtype = draw(st.sampled_from([np.float32, np.int16]))
    elements = st.integers(-32768, 32767) if dtype is np.int16 else \
        st.floats(width=32, allow_nan=True, allow_infinity=True)
    data = draw(arrays(dtype, (c, r, w), elements=elements))
    crop = (draw(st.integers(0, 2**32 - 1)), draw(st.integers(0, 2**32 - 1)))
    return DctTensor(data, _meta(c), crop)


@given(tensors())
def test_bitwise_roundtrip(t):
    blob = dctt.encode(t)
    back, used = dctt.decode(blob)
    assert used == len(blob)
    assert back.data.dtype == t.data.dtype
    assert back.data.tobytes() == t.data.tobytes()
    assert back.channel_meta == t.channel_meta and back.crop == t.crop
    assert dctt.encode(back) == blob


def test_file_and_stream_io(tmp_path):
    t = DctTensor(np.arange(64 * 4, dtype=np.float32).reshape(64, 2, 2), _meta(64), (16, 16))
    p = tmp_path / "t.dctt"
    n = dctt.write_tensor(t, p)
    assert p.stat().st_size == n == dctt.header_size(64) + t.data.nbytes + 4
    assert dctt.read_tensor(p).data.tobytes() == t.data.tobytes()
    buf = io.BytesIO()
    dctt.write_tensor(t, buf)
    assert dctt.read_tensor(io.BytesIO(buf.getvalue())).channel_meta == t.channel_meta


def test_feature_channels_roundtrip():
    t = DctTensor(np.ones((300, 1, 1), np.float32), tuple(("feature", i % 256) for i in range(300)))
    assert dctt.read_tensor(dctt.encode(t)).channel_meta == t.channel_meta


def test_read_all_concatenated():
    a = DctTensor(np.zeros((1, 1, 1), np.float32), _meta(1))
    b = DctTensor(np.ones((2, 1, 3), np.int16), _meta(2))
    out = dctt.read_all(dctt.encode(a) + dctt.encode(b))
    assert [t.shape for t in out] == [(1, 1, 1), (2, 1, 3)]


def _blob():
    return bytearray(dctt.encode(DctTensor(np.ones((3, 2, 2), np.float32), _meta(3))))


def test_corrupt_payload():
    b = _blob()
    b[-6] ^= 1
    with pytest.raises(ChecksumMismatch):
        dctt.decode(b)


def test_bad_version_and_magic():
    b = _blob()
    b[4] = 2
    with pytest.raises(FormatVersionMismatch):
        dctt.decode(b)
    with pytest.raises(FormatVersionMismatch):
        dctt.decode(b"NOPE" + bytes(_blob()[4:]))


def test_truncated():
    b = bytes(_blob())
    for cut in (3, 10, len(b) - 1):
        with pytest.raises((TruncatedFile, FormatVersionMismatch)):
            dctt.decode(b[:cut])
    with pytest.raises(TruncatedFile):
        dctt.decode(b[:-1])


def test_unwritable(tmp_path):
    t = DctTensor(np.zeros((1, 1, 1), np.float32), _meta(1))
    with pytest.raises(UnwritableOutput):
        dctt.write_tensor(t, tmp_path / "missing" / "x.dctt")
