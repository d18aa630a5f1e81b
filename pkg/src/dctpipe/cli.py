"""dctpipe command line.

Exit codes: 0 success, 1 domain error (message on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from dctpipe import dctt
from dctpipe.errors import DctPipeError


def _read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise DctPipeError(f"cannot read {path}: {e.strerror or e}") from e


def _ranges(idx):
    """[0,1,2,5] -> '0..2,5'."""
    out, start = [], None
    idx = list(idx)
    for i, v in enumerate(idx):
        if start is None:
            start = v
        if i + 1 == len(idx) or idx[i + 1] != v + 1:
            out.append(f"{start}..{v}" if v != start else f"{v}")
            start = None
    return ",".join(out)


def cmd_decode(args):
    from dctpipe.tensor import jpeg_to_tensor

    data = _read_bytes(args.input)
    try:
        t = jpeg_to_tensor(data, keep_quantized=args.keep_quantized, luma_only=args.luma_only)
    except DctPipeError as e:
        raise type(e)(f"{args.input}: {e}") from e
    dctt.write_tensor(t, args.out)
    c, r, w = t.shape
    print(f"{args.out}: {c}x{r}x{w} {t.data.dtype} components={','.join(t.components)}")


def cmd_select(args):
    from dctpipe.tensor import FbsSpec, select

    t = dctt.read_tensor(_read_bytes(args.tensor))
    indices = tuple(int(v) for v in args.indices.split(",")) if args.indices else ()
    if args.strategy == "list" and not indices:
        raise DctPipeError("--strategy list needs --indices")
    spec = FbsSpec(args.strategy, args.n, indices)
    out = select(t, spec)
    dctt.write_tensor(out, args.out)
    for comp in out.components:
        print(f"{comp}: {_ranges(out.frequencies(comp))}")
    print(f"{args.out}: {out.shape[0]} channels")


def cmd_reduce(args):
    from dctpipe.reduction import ReductionOperator, load_operator, reduce_tensor

    t = dctt.read_tensor(_read_bytes(args.tensor))
    if args.weights:
        op = load_operator(args.weights)
        if op.kind.value != args.op:
            raise DctPipeError(f"weight file holds a {op.kind.value} operator, --op is {args.op}")
    else:
        op = ReductionOperator.init(args.op, t.shape[0], args.out_channels, seed=args.seed)
    out = reduce_tensor(op, t)
    dctt.write_tensor(out, args.out)
    print(f"{args.out}: {op.kind.value} {op.in_channels}->{op.out_channels}, "
          f"min={float(out.data.min()):.6g} max={float(out.data.max()):.6g}")


def cmd_gradcheck(args):
    from dctpipe.reduction import ReductionOperator, grad_check

    op = ReductionOperator.init(args.op, args.in_channels, args.out_channels, seed=args.seed)
    report = grad_check(op, trials=args.trials, seed=args.seed, step=args.step)
    print(report.line())
    return 0 if report.passed else 1


def cmd_cost(args):
    from dctpipe.cost import ALL_VARIANTS, build_variant, compare, count, load_config

    cfg = load_config(args.config)
    names = ALL_VARIANTS if args.all else args.variant
    reports = [count(build_variant(n, cfg), include_dct=args.include_dct) for n in names]
    if args.layers:
        if len(reports) != 1:
            raise DctPipeError("--layers needs exactly one --variant")
        r = reports[0]
        print(r.to_json() if args.format == "json" else r.to_csv(), end="")
        return 0
    ratios = {}
    if args.baseline:
        base_reports = reports
        if args.baseline not in names:
            base_reports = reports + [count(build_variant(args.baseline, cfg))]
        ratios = {c.name: c for c in compare(base_reports, args.baseline)}
    rows = []
    for r in reports:
        ep, ef, ea = r.entry_cost()
        row = {"name": r.name, "gflops": round(r.gflops, 4), "mparams": round(r.mparams, 4),
               "flops": r.flops, "params": r.params,
               "entry_params": ep, "entry_flops": ef, "entry_aux_ops": ea}
        if args.include_dct:
            row["dct_preprocessing_flops"] = r.preprocessing_flops
        if r.name in ratios:
            row["flops_ratio"] = round(ratios[r.name].flops_ratio, 4)
            row["params_ratio"] = round(ratios[r.name].params_ratio, 4)
        rows.append(row)
    if args.format == "json":
        print(json.dumps({"conventions": reports[0].conventions, "variants": rows}, indent=2))
    elif args.format == "csv":
        keys = list(rows[0])
        print(",".join(keys))
        for row in rows:
            print(",".join(str(row[k]) for k in keys))
    else:
        for row in rows:
            line = f"{row['name']}: {row['gflops']:.2f} GFLOPs / {row['mparams']:.1f}M params"
            if "flops_ratio" in row:
                line += f"  (x{row['flops_ratio']:.3f} flops, x{row['params_ratio']:.3f} params vs {args.baseline})"
            print(line)
    return 0


def cmd_bench(args):
    from dctpipe.bench import emit_report, load_config, parse_config_text, run_bench

    overrides = dict(corpus_dir=args.corpus, runs=args.runs, batches_per_run=args.batches,
                     batch_size=args.batch_size, warmup_batches=args.warmup, seed=args.seed,
                     modes=tuple(args.mode) if args.mode else None,
                     parallel=True if args.parallel else None)
    cfg = load_config(args.config, **overrides) if args.config else parse_config_text("", **overrides)
    report = run_bench(cfg)
    if args.out:
        fmt = {".json": "json", ".csv": "csv"}.get(Path(args.out).suffix.lower(), "text")
        emit_report(report, fmt, args.out)
    print(emit_report(report, "text"), end="")


def cmd_prepare(args):
    from dctpipe.bench import prepare_corpus

    m = prepare_corpus(args.input_dir, args.output_dir, args.crop, args.quality)
    print(f"{args.output_dir}: {len(m.entries)} images, {len(m.skipped)} skipped")


def cmd_synth(args):
    from dctpipe.bench import make_synthetic_corpus

    paths = make_synthetic_corpus(args.output_dir, args.count, (args.size, args.size),
                                  seed=args.seed, subsampling=tuple(args.subsampling))
    print(f"{args.output_dir}: {len(paths)} images")


def build_parser():
    p = argparse.ArgumentParser(prog="dctpipe", description="JPEG DCT-domain preprocessing toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("decode", help="partial decode a JPEG to a DCTT tensor")
    s.add_argument("input", help="baseline JPEG file")
    s.add_argument("--out", required=True, help="output .dctt path")
    s.add_argument("--keep-quantized", action="store_true", help="store int16 quantized coefficients")
    s.add_argument("--luma-only", action="store_true", help="64 luma channels only")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("select", help="frequency band selection on a DCTT tensor")
    s.add_argument("tensor")
    s.add_argument("--strategy", default="lowest", choices=["lowest", "median", "highest", "extremes", "list"])
    s.add_argument("--n", type=int, default=32, help="retained coefficients per component")
    s.add_argument("--indices", default="", help="comma-separated zigzag indices for --strategy list")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("reduce", help="apply an LP/LA/CCPP channel reduction")
    s.add_argument("tensor")
    s.add_argument("--op", required=True, choices=["lp", "la", "ccpp"])
    g = s.add_mutually_exclusive_group()
    g.add_argument("--weights", help="operator weight file")
    g.add_argument("--seed", type=int, default=0, help="seed for a fresh operator")
    s.add_argument("--out-channels", type=int, default=64)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("gradcheck", help="finite-difference check of a reduction op backward")
    s.add_argument("--op", required=True, choices=["lp", "la", "ccpp"])
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--in-channels", type=int, default=12)
    s.add_argument("--out-channels", type=int, default=4)
    s.add_argument("--step", type=float, default=1e-5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("cost", help="parameter and FLOP counts of the architecture variants")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--variant", action="append", help="variant name, repeatable")
    g.add_argument("--all", action="store_true", help="every in-scope variant")
    s.add_argument("--format", default="text", choices=["csv", "json", "text"])
    s.add_argument("--baseline", help="add flops/params ratios against this variant")
    s.add_argument("--layers", action="store_true", help="per-layer rows of a single variant")
    s.add_argument("--include-dct", action="store_true", help="report forward-DCT preprocessing FLOPs")
    s.add_argument("--config", help="alternative variant config (INI)")
    s.set_defaults(func=cmd_cost)

    s = sub.add_parser("bench", help="preprocessing timing benchmark")
    s.add_argument("--config", help="key=value bench config")
    s.add_argument("--corpus", help="prepared corpus directory (default $DCTPIPE_CORPUS)")
    s.add_argument("--mode", action="append", help="mode, repeatable, e.g. FullDecodeRGB, FBS(16), Reduction(ccpp)")
    s.add_argument("--runs", type=int)
    s.add_argument("--batches", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--warmup", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--parallel", action="store_true", help="decode batch members concurrently")
    s.add_argument("--out", help="report file (.json, .csv, or text)")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("prepare", help="block-aligned center crops + manifest")
    s.add_argument("input_dir")
    s.add_argument("output_dir")
    s.add_argument("--crop", type=int, default=224)
    s.add_argument("--quality", type=int, help="re-encode quality (default: keep source tables)")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("synth", help="write the synthetic corpus")
    s.add_argument("output_dir")
    s.add_argument("--count", type=int, default=64)
    s.add_argument("--size", type=int, default=256)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--subsampling", action="append", choices=["4:2:0", "4:4:4"], default=None)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "subsampling", "unset") is None:
        args.subsampling = ["4:2:0"]
    try:
        rc = args.func(args)
    except DctPipeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
