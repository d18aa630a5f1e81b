import csv
import io
import json

import numpy as np
import pytest
from PIL import Image

from corpora import pil_jpeg
from dctpipe import dctt
from dctpipe.cli import build_parser, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def jpg(tmp_path):
    rng = np.random.default_rng(0)
    p = tmp_path / "in.jpg"
    p.write_bytes(pil_jpeg(rng.integers(0, 255, (50, 70, 3), dtype=np.uint8), subsampling=2))
    return p


@pytest.fixture
def tensor192(tmp_path, jpg, capsys):
    out = tmp_path / "t.dctt"
    assert run(capsys, "decode", jpg, "--out", out)[0] == 0
    return out


def test_decode_geometry(tensor192):
    t = dctt.read_tensor(tensor192)
    assert t.shape == (192, 7, 9) and t.data.dtype == np.float32


def test_decode_flags(tmp_path, jpg, capsys):
    q = tmp_path / "q.dctt"
    assert run(capsys, "decode", jpg, "--out", q, "--keep-quantized")[0] == 0
    assert dctt.read_tensor(q).data.dtype == np.int16
    y = tmp_path / "y.dctt"
    assert run(capsys, "decode", jpg, "--out", y, "--luma-only")[0] == 0
    assert dctt.read_tensor(y).shape[0] == 64


def test_decode_progressive(tmp_path, capsys):
    p = tmp_path / "p.jpg"
    Image.new("RGB", (32, 32), (10, 200, 30)).save(p, "JPEG", progressive=True)
    code, _, err = run(capsys, "decode", p, "--out", tmp_path / "x.dctt")
    assert code == 1
    assert "unsupported: progressive" in err and str(p) in err


def test_decode_is_byte_identical(tmp_path, jpg, capsys):
    a, b = tmp_path / "a.dctt", tmp_path / "b.dctt"
    run(capsys, "decode", jpg, "--out", a)
    run(capsys, "decode", jpg, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_select(tmp_path, tensor192, capsys):
    out = tmp_path / "s.dctt"
    code, text, _ = run(capsys, "select", tensor192, "--strategy", "lowest", "--n", 32, "--out", out)
    assert code == 0 and dctt.read_tensor(out).shape[0] == 96
    code, text, _ = run(capsys, "select", tensor192, "--strategy", "lowest", "--n", 64, "--out", out)
    assert dctt.read_tensor(out).data.tobytes() == dctt.read_tensor(tensor192).data.tobytes()
    code, text, _ = run(capsys, "select", tensor192, "--strategy", "extremes", "--n", 32, "--out", out)
    assert "Y: 0..15,48..63" in text
    code, _, err = run(capsys, "select", tensor192, "--strategy", "list", "--indices", "3,70", "--out", out)
    assert code == 1 and "0..63" in err


def test_reduce(tmp_path, tensor192, capsys):
    out = tmp_path / "r.dctt"
    code, _, _ = run(capsys, "reduce", tensor192, "--op", "ccpp", "--seed", 7, "--out", out)
    t = dctt.read_tensor(out)
    assert code == 0 and t.shape[0] == 64 and (t.data >= 0).all()
    again = tmp_path / "r2.dctt"
    run(capsys, "reduce", tensor192, "--op", "ccpp", "--seed", 7, "--out", again)
    assert again.read_bytes() == out.read_bytes()


def test_reduce_with_weights(tmp_path, tensor192, capsys):
    from dctpipe.reduction import ReductionOperator, save_operator

    w = tmp_path / "w.bin"
    save_operator(ReductionOperator.init("lp", 192, 32, seed=1), w)
    out = tmp_path / "r.dctt"
    assert run(capsys, "reduce", tensor192, "--op", "lp", "--weights", w, "--out", out)[0] == 0
    assert dctt.read_tensor(out).shape[0] == 32
    assert run(capsys, "reduce", tensor192, "--op", "la", "--weights", w, "--out", out)[0] == 1


def test_reduce_la_group_error(tmp_path, capsys):
    t = tmp_path / "t100.dctt"
    from dctpipe.tensor import DctTensor

    dctt.write_tensor(DctTensor(np.zeros((100, 2, 2), np.float32),
                                tuple(("feature", i) for i in range(100))), t)
    code, _, err = run(capsys, "reduce", t, "--op", "la", "--out", tmp_path / "o.dctt")
    assert code == 1 and "64 does not divide 100" in err


def test_gradcheck(capsys):
    code, out, _ = run(capsys, "gradcheck", "--op", "la", "--trials", 10)
    assert code == 0 and out.startswith("PASS") and "< 1e-4" in out


def test_cost_single(capsys):
    code, out, _ = run(capsys, "cost", "--variant", "resnet50")
    assert code == 0 and "3.86 GFLOPs / 25.6M params" in out
    code, out, _ = run(capsys, "cost", "--variant", "skip2-ccpp")
    assert "2.86 GFLOPs" in out


def test_cost_all_csv(capsys):
    code, out, _ = run(capsys, "cost", "--all", "--format", "csv", "--baseline", "resnet50")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 10
    assert float(rows[0]["flops_ratio"]) == 1.0


def test_cost_json_and_layers(capsys):
    code, out, _ = run(capsys, "cost", "--variant", "LA64", "--format", "json")
    obj = json.loads(out)
    assert obj["variants"][0]["entry_params"] == 576 and "flop_unit" in obj["conventions"]
    code, out, _ = run(capsys, "cost", "--variant", "CCPP64", "--layers")
    assert out.splitlines()[0].startswith("name,kind,params")


def test_cost_unknown(capsys):
    code, _, err = run(capsys, "cost", "--variant", "vgg16")
    assert code == 1 and "unknown variant" in err


def test_bench_missing_corpus(tmp_path, capsys):
    code, _, err = run(capsys, "bench", "--corpus", tmp_path / "none")
    assert code == 1 and "corpus not prepared" in err


def test_bench_config_echo(tmp_path, prepared_corpus, capsys):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(f"corpus = {prepared_corpus}\nruns = 2\nbatches = 2\nbatch = 2\nwarmup = 0\n"
                   "modes = FullDecodeRGB, PartialDecodeDCT\n")
    out = tmp_path / "r.json"
    code, text, _ = run(capsys, "bench", "--config", cfg, "--out", out)
    assert code == 0
    rep = json.loads(out.read_text())
    assert (rep["runs"], rep["batches_per_run"], rep["batch_size"]) == (2, 2, 2)
    assert "2 runs x 2 batches x 2 images" in text


def test_prepare_and_synth(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", tmp_path / "raw", "--count", 4)
    assert code == 0 and "4 images" in out
    code, out, _ = run(capsys, "prepare", tmp_path / "raw", tmp_path / "prep")
    assert code == 0 and "4 images, 0 skipped" in out


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["cost", "--all", "--bogus"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_help_lists_every_flag():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for opt in action.option_strings:
                assert opt in text, (name, opt)
