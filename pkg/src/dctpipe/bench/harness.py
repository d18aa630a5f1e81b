"""Paired preprocessing benchmark.

All configured modes run on the same batch, back to back, with the mode order
rotated per batch, so slow drifts of the host affect every mode alike.
"""
from __future__ import annotations

import json
import os
import platform
import socket
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from dctpipe.bench.config import BadConfig, BenchConfig, parse_mode
from dctpipe.bench.corpus import load_corpus
from dctpipe.errors import ClockResolutionTooCoarse, CorpusTooSmall, UnwritableOutput
from dctpipe.jpeg.pixels import decode_rgb
from dctpipe.reduction import ReductionOperator, forward
from dctpipe.tensor import jpeg_to_tensor

# stand-in pipeline input: 192 x 28 x 28 == 224 x 224 x 3 elements
STANDIN_CHANNELS = 192
STANDIN_POSITIONS = 28 * 28


class PipelineStandIn:
    """Fixed downstream workload, identical for every mode: the
    preprocessing output is resized into a 192 x 784 buffer and passed
    through three seeded 1x1 convolutions with ReLU."""

    def __init__(self, seed=0, widths=(64, 128, 64)):
        rng = np.random.default_rng(seed)
        dims = (STANDIN_CHANNELS,) + tuple(widths)
        self.weights = [rng.standard_normal((o, i)).astype(np.float32) / np.sqrt(i)
                        for i, o in zip(dims[:-1], dims[1:])]

    def __call__(self, outputs):
        acc = 0.0
        for out in outputs:
            data = getattr(out, "data", out)
            x = np.resize(np.asarray(data, dtype=np.float32), (STANDIN_CHANNELS, STANDIN_POSITIONS))
            for w in self.weights:
                x = np.maximum(w @ x, 0)
            acc += float(x.mean())
        return acc


def make_preprocessor(mode, seed=0):
    """Callable bytes -> the mode's network-ready representation."""
    if mode.full:
        return decode_rgb
    if mode.reduction is not None:
        op = ReductionOperator.init(mode.reduction, 192, 64, seed=seed)
        return lambda data: forward(op, jpeg_to_tensor(data))
    fbs = mode.fbs
    return lambda data: jpeg_to_tensor(data, fbs=fbs)


def batch_plan(cfg, n_images):
    """Image indices per (run, batch); depends only on seed and corpus size."""
    need = cfg.images_per_run
    if n_images < need and not cfg.replacement:
        raise CorpusTooSmall(f"corpus has {n_images} images, protocol needs {need} per run")
    if n_images == 0:
        raise CorpusTooSmall("corpus is empty")
    rng = np.random.default_rng(cfg.seed)
    plan = []
    for _ in range(cfg.runs):
        if n_images >= need:
            idx = rng.permutation(n_images)[:need]
        else:
            idx = rng.integers(0, n_images, need)
        plan.append(idx.reshape(cfg.batches_per_run, cfg.batch_size))
    return np.stack(plan)


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float

    @classmethod
    def of(cls, values):
        v = np.asarray(values, dtype=np.float64)
        return cls(float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0)

    def __str__(self):
        return f"{self.mean:.2f} ± {self.std:.2f}"


@dataclass(frozen=True)
class ModeRow:
    """Per-batch times in ms. *_runs hold the per-run means the statistics are
    taken over; per_image is the mean time of one image's preprocessing."""

    mode: str
    preprocessing: Stat
    pipeline: Stat
    total: Stat
    fps: float
    per_image: Stat
    preprocessing_runs: tuple
    pipeline_runs: tuple


@dataclass(frozen=True)
class BenchReport:
    rows: tuple
    runs: int
    batches_per_run: int
    batch_size: int
    warmup_batches: int
    seed: int
    parallel: bool
    corpus_size: int
    environment: dict

    def row(self, mode):
        label = parse_mode(mode).label
        return next(r for r in self.rows if r.mode == label)

    def sign_agreement(self, slower, faster, strict=True):
        """Runs in which `faster` preprocessed below (or, strict=False, at
        most) `slower`."""
        a = np.asarray(self.row(slower).preprocessing_runs)
        b = np.asarray(self.row(faster).preprocessing_runs)
        return int((b < a).sum() if strict else (b <= a).sum())

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        rows = []
        for r in obj.pop("rows"):
            for k in ("preprocessing", "pipeline", "total", "per_image"):
                r[k] = Stat(**r[k])
            r["preprocessing_runs"] = tuple(r["preprocessing_runs"])
            r["pipeline_runs"] = tuple(r["pipeline_runs"])
            rows.append(ModeRow(**r))
        return cls(rows=tuple(rows), **obj)


def environment():
    import numba

    return {
        "host": socket.gethostname(),
        "cores": os.cpu_count(),
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "build_flags": f"numba opt={int(numba.config.OPT)} cache=on nogil=on",
        "timer": "time.perf_counter_ns",
        "timer_resolution_ns": time.get_clock_info("perf_counter").resolution * 1e9,
    }


def _timer_granularity_ns(samples=200):
    best = None
    for _ in range(samples):
        t0 = time.perf_counter_ns()
        t1 = time.perf_counter_ns()
        while t1 == t0:
            t1 = time.perf_counter_ns()
        d = t1 - t0
        best = d if best is None else min(best, d)
    return max(best, time.get_clock_info("perf_counter").resolution * 1e9)


def _time_batch(fn, batch, pool):
    """(wall ns, per-image ns list, outputs)."""
    def one(data):
        t0 = time.perf_counter_ns()
        out = fn(data)
        return time.perf_counter_ns() - t0, out

    t0 = time.perf_counter_ns()
    results = list(pool.map(one, batch)) if pool is not None else [one(d) for d in batch]
    wall = time.perf_counter_ns() - t0
    return wall, [r[0] for r in results], [r[1] for r in results]


def run_bench(cfg: BenchConfig, corpus=None):
    """Run the protocol. corpus: optional preloaded list of JPEG byte strings;
    otherwise cfg.corpus_dir is read into memory before any timing."""
    if corpus is None:
        corpus = [data for _, data in load_corpus(cfg.corpus_dir)]
    plan = batch_plan(cfg, len(corpus))
    modes = cfg.parsed_modes()
    fns = [make_preprocessor(m, cfg.seed) for m in modes]
    standin = PipelineStandIn(cfg.seed)
    workers = cfg.workers or os.cpu_count() or 1
    pool = ThreadPoolExecutor(workers) if cfg.parallel else None
    k = len(modes)
    pre = np.zeros((k, cfg.runs, cfg.batches_per_run))
    pipe = np.zeros_like(pre)
    per_image = [[] for _ in modes]
    try:
        flat = plan.reshape(-1, cfg.batch_size)
        for b in range(cfg.warmup_batches):
            batch = [corpus[i] for i in flat[b % len(flat)]]
            for fn in fns:
                standin(_time_batch(fn, batch, pool)[2])
        for r in range(cfg.runs):
            for b in range(cfg.batches_per_run):
                batch = [corpus[i] for i in plan[r, b]]
                shift = (r * cfg.batches_per_run + b) % k
                for j in list(range(shift, k)) + list(range(shift)):
                    wall, imgs, outs = _time_batch(fns[j], batch, pool)
                    t0 = time.perf_counter_ns()
                    standin(outs)
                    pipe[j, r, b] = time.perf_counter_ns() - t0
                    pre[j, r, b] = wall
                    per_image[j].extend(imgs)
    finally:
        if pool is not None:
            pool.shutdown()
    gran = _timer_granularity_ns()
    smallest = pre.mean(axis=(1, 2)).min()
    if gran > 0.01 * smallest:
        raise ClockResolutionTooCoarse(
            f"timer granularity {gran:.0f} ns exceeds 1% of the mean batch time {smallest:.0f} ns"
        )
    ms = 1e-6
    rows = []
    for j, m in enumerate(modes):
        pr = pre[j].mean(axis=1) * ms
        pp = pipe[j].mean(axis=1) * ms
        tot = pr + pp
        total = Stat.of(tot)
        rows.append(ModeRow(
            m.label, Stat.of(pr), Stat.of(pp), total,
            cfg.images_per_run / (total.mean * cfg.batches_per_run / 1e3),
            Stat.of(np.asarray(per_image[j]) * ms),
            tuple(float(v) for v in pr), tuple(float(v) for v in pp),
        ))
    return BenchReport(tuple(rows), cfg.runs, cfg.batches_per_run, cfg.batch_size, cfg.warmup_batches,
                       cfg.seed, cfg.parallel, len(corpus), environment())


def format_text(report):
    head = ("Mode", "Preprocessing (ms)", "Pipeline (ms)", "Total (ms)", "FPS")
    body = [(r.mode, str(r.preprocessing), str(r.pipeline), str(r.total), f"{r.fps:.1f}") for r in report.rows]
    widths = [max(len(x[i]) for x in [head] + body) for i in range(len(head))]
    fmt = lambda row: "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
    lines = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]
    lines.append("")
    lines.append(f"protocol: {report.runs} runs x {report.batches_per_run} batches x {report.batch_size} images, "
                 f"warmup {report.warmup_batches}, seed {report.seed}, "
                 f"{'parallel' if report.parallel else 'serial'}, corpus {report.corpus_size} images")
    lines.append("times are per batch; mean ± std over per-run means")
    for k, v in report.environment.items():
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def format_csv(report):
    lines = ["mode,preprocessing_ms,pipeline_ms,total_ms,fps"]
    for r in report.rows:
        lines.append(f"{r.mode},{r.preprocessing},{r.pipeline},{r.total},{r.fps:.1f}")
    lines.append("")
    for k, v in report.environment.items():
        lines.append(f"# {k}: {v}")
    return "\n".join(lines) + "\n"


def emit_report(report, fmt="text", path=None):
    fmt = fmt.lower()
    if fmt not in ("json", "csv", "text", "table-text"):
        raise BadConfig(f"unknown report format {fmt!r}")
    text = {"json": report.to_json, "csv": lambda: format_csv(report),
            "text": lambda: format_text(report), "table-text": lambda: format_text(report)}[fmt]()
    if path is not None:
        try:
            with open(path, "w") as f:
                f.write(text)
        except OSError as e:
            raise UnwritableOutput(f"cannot write {path}: {e}") from e
    return text
