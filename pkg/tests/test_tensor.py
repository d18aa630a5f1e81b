import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import jpeg_writer as jw
from corpora import pil_jpeg
from dctpipe.errors import DimensionMismatch, IndexOutOfRange
from dctpipe.jpeg import dequantize, quant_table_for, read_coefficients
from dctpipe.jpeg.coeffs import CoeffBlockGrid
from dctpipe.tensor import (
    DctTensor,
    FbsSpec,
    assemble,
    channel_stats,
    grids_to_tensor,
    inverse_rearrange,
    jpeg_to_tensor,
    rearrange,
    select,
    standardize,
    upsample_chroma,
)


def _grid(rows, cols, comp="Y", seed=0):
    rng = np.random.default_rng(seed)
    return CoeffBlockGrid(comp, rng.normal(size=(rows, cols, 64)).astype(np.float32), True)


def _assembled(rows=4, cols=6, seed=0):
    y = rearrange(_grid(rows, cols, "Y", seed))
    cr_shape = (-(-rows // 2), -(-cols // 2))
    cb = upsample_chroma(rearrange(_grid(*cr_shape, "Cb", seed + 1)), (rows, cols))
    cr = upsample_chroma(rearrange(_grid(*cr_shape, "Cr", seed + 2)), (rows, cols))
    return assemble(y, cb, cr)


def test_rearrange_channel_is_zigzag_index():
    g = _grid(3, 5)
    t = rearrange(g)
    assert t.shape == (64, 3, 5)
    assert t.channel_meta[7] == ("Y", 7)
    assert np.array_equal(t.data[7], g.blocks[..., 7])


def test_inverse_rearrange_roundtrip():
    g = _grid(2, 9)
    back = inverse_rearrange(rearrange(g))
    assert np.array_equal(back.blocks, g.blocks)
    assert back.component == "Y"


def test_upsample_nearest_and_cropped():
    t = rearrange(_grid(2, 3, "Cb"))
    up = upsample_chroma(t, (3, 5))
    assert up.shape == (64, 3, 5)
    assert np.array_equal(up.data[:, 2, 4], t.data[:, 1, 2])
    assert np.array_equal(up.data[:, 1, 1], t.data[:, 0, 0])


def test_upsample_rejects_wrong_geometry():
    with pytest.raises(DimensionMismatch):
        upsample_chroma(rearrange(_grid(2, 3, "Cb")), (6, 6))


def test_assemble_order_and_size():
    t = _assembled()
    assert t.shape[0] == 192
    assert t.components == ("Y", "Cb", "Cr")
    assert t.channel_meta[64] == ("Cb", 0)


def test_assemble_luma_only():
    y = rearrange(_grid(2, 2))
    t = assemble(y)
    assert t.luma_only and t.shape[0] == 64


def test_assemble_mismatched_dims():
    with pytest.raises(DimensionMismatch):
        assemble(rearrange(_grid(2, 2)), rearrange(_grid(2, 3, "Cb")), rearrange(_grid(2, 2, "Cr")))


def test_duplicate_meta_rejected():
    with pytest.raises(DimensionMismatch):
        DctTensor(np.zeros((2, 1, 1)), (("Y", 0), ("Y", 0)))


@pytest.mark.parametrize("strategy,n,expected", [
    ("lowest", 32, list(range(32))),
    ("median", 32, list(range(16, 48))),
    ("highest", 32, list(range(32, 64))),
    ("extremes", 32, list(range(16)) + list(range(48, 64))),
    ("lowest", 16, list(range(16))),
])
def test_strategy_index_sets(strategy, n, expected):
    assert list(FbsSpec(strategy, n).index_set()) == expected


def test_list_strategy_and_errors():
    assert FbsSpec("list", indices=(5, 0, 9)).index_set() == (0, 5, 9)
    with pytest.raises(IndexOutOfRange):
        FbsSpec("list", indices=(64,))
    with pytest.raises(IndexOutOfRange):
        FbsSpec("lowest", 0)
    with pytest.raises(IndexOutOfRange):
        FbsSpec("extremes", 7)


def test_select_32_on_192_channels():
    out = select(_assembled(), FbsSpec.lowest(32))
    assert out.shape[0] == 96
    assert out.frequencies("Cr") == list(range(32))


def test_select_missing_frequency():
    t = select(_assembled(), FbsSpec.lowest(16))
    with pytest.raises(IndexOutOfRange):
        select(t, FbsSpec.lowest(32))


def test_fbs_lowest_64_identity():
    t = _assembled()
    out = select(t, FbsSpec.lowest(64))
    assert out.channel_meta == t.channel_meta
    assert out.data.tobytes() == t.data.tobytes()


specs = st.one_of(
    st.builds(FbsSpec, st.sampled_from(["lowest", "median", "highest"]), st.integers(1, 64)),
    st.builds(FbsSpec, st.just("extremes"), st.integers(1, 32).map(lambda k: 2 * k)),
    st.builds(lambda idx: FbsSpec("list", indices=tuple(idx)),
              st.sets(st.integers(0, 63), min_size=1, max_size=64)),
)


@given(spec=specs, rows=st.integers(1, 7), cols=st.integers(1, 7), seed=st.integers(0, 999))
def test_select_commutes_with_upsample(spec, rows, cols, seed):
    c = rearrange(_grid(-(-rows // 2), -(-cols // 2), "Cb", seed))
    a = select(upsample_chroma(c, (rows, cols)), spec)
    b = upsample_chroma(select(c, spec), (rows, cols))
    assert a.channel_meta == b.channel_meta
    assert np.array_equal(a.data, b.data)


@given(spec=specs)
def test_select_preserves_order_and_count(spec):
    t = _assembled(2, 2)
    out = select(t, spec)
    assert out.shape[0] == 3 * spec.n
    pos = [t.channel_meta.index(m) for m in out.channel_meta]
    assert pos == sorted(pos)


def test_fused_path_matches_composed(oracle_corpus):
    for _, data in oracle_corpus[:12]:
        jpeg, grids = read_coefficients(data, keep_quantized=True)
        deq = [dequantize(g, quant_table_for(jpeg, k)) for k, g in enumerate(grids)]
        parts = [rearrange(deq[0], (jpeg.width, jpeg.height))]
        for g in deq[1:]:
            t = rearrange(g, (jpeg.width, jpeg.height))
            if t.shape[1:] != parts[0].shape[1:]:
                t = upsample_chroma(t, parts[0].shape[1:])
            parts.append(t)
        full = assemble(*parts)
        for n in (64, 32, 16):
            spec = FbsSpec.lowest(n)
            fused = jpeg_to_tensor(data, fbs=spec)
            composed = select(full, spec)
            assert fused.channel_meta == composed.channel_meta
            assert np.array_equal(fused.data, composed.data)
            assert np.array_equal(grids_to_tensor(jpeg, deq, spec).data, composed.data)


def test_jpeg_to_tensor_shapes():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 255, (50, 70, 3), dtype=np.uint8)
    t = jpeg_to_tensor(pil_jpeg(img, subsampling=2))
    assert t.shape == (192, 7, 9)
    assert t.crop == (70, 50)
    assert t.data.dtype == np.float32
    q = jpeg_to_tensor(pil_jpeg(img), keep_quantized=True)
    assert q.data.dtype == np.int16
    assert jpeg_to_tensor(pil_jpeg(img), luma_only=True).shape == (64, 7, 9)
    gray = jpeg_to_tensor(pil_jpeg(img[..., 0]))
    assert gray.luma_only and gray.shape == (64, 7, 9)


def test_channel_stats_standardize():
    ts = [_assembled(seed=s) for s in range(3)]
    stats = channel_stats(ts)
    z = [standardize(t, stats).data for t in ts]
    flat = np.concatenate([a.reshape(192, -1) for a in z], axis=1)
    assert np.allclose(flat.mean(axis=1), 0, atol=1e-5)
    assert np.allclose(flat.std(axis=1), 1, atol=1e-4)
    again = type(stats).from_json(stats.to_json())
    assert np.array_equal(again.mean, stats.mean) and again.channel_meta == stats.channel_meta


def test_crafted_4_2_0_tensor_layout():
    grids = jw.random_grids(np.random.default_rng(1), 40, 24)
    t = jpeg_to_tensor(jw.encode(grids, 40, 24), keep_quantized=True)
    # chroma block (0, 0) covers luma blocks (0..1, 0..1)
    for r, c in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert np.array_equal(t.data[64:128, r, c], grids[1][0, 0])
    assert np.array_equal(t.data[:64, 2, 4], grids[0][2, 4])
