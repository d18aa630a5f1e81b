"""BenchConfig and its key=value file form."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, fields
from pathlib import Path

from dctpipe.errors import BadConfig
from dctpipe.reduction import Kind
from dctpipe.tensor import FbsSpec

CORPUS_ENV = "DCTPIPE_CORPUS"

FULL = "FullDecodeRGB"
PARTIAL = "PartialDecodeDCT"
DEFAULT_MODES = (FULL, PARTIAL, f"{PARTIAL}+FBS(32)", f"{PARTIAL}+FBS(16)")


@dataclass(frozen=True)
class Mode:
    """One preprocessing variant. fbs / reduction are None unless configured."""

    label: str
    full: bool = False
    fbs: FbsSpec | None = None
    reduction: Kind | None = None


def parse_mode(text):
    t = text.strip()
    if t.lower() in ("fulldecodergb", "full", "rgb"):
        return Mode(FULL, full=True)
    if t.lower() in ("partialdecodedct", "partial", "dct"):
        return Mode(PARTIAL)
    m = re.fullmatch(r"(?:partialdecodedct\+)?fbs\((?:(lowest|median|highest|extremes),\s*)?(\d+)\)", t, re.I)
    if m:
        strategy = (m.group(1) or "lowest").lower()
        spec = FbsSpec(strategy, int(m.group(2)))
        label = f"{PARTIAL}+FBS({m.group(2)})" if strategy == "lowest" else f"{PARTIAL}+FBS({strategy},{m.group(2)})"
        return Mode(label, fbs=spec)
    m = re.fullmatch(r"(?:partialdecodedct\+)?reduction\((lp|la|ccpp)\)", t, re.I)
    if m:
        kind = Kind(m.group(1).lower())
        return Mode(f"{PARTIAL}+Reduction({kind.value})", reduction=kind)
    raise BadConfig(f"unknown bench mode {text!r}")


@dataclass(frozen=True)
class BenchConfig:
    corpus_dir: str = ""
    runs: int = 10
    batches_per_run: int = 25
    batch_size: int = 8
    modes: tuple = DEFAULT_MODES
    warmup_batches: int = 3
    seed: int = 0
    replacement: bool = True
    parallel: bool = False
    workers: int = 0  # 0 -> os.cpu_count()

    def __post_init__(self):
        if self.runs < 1 or self.batches_per_run < 1 or self.batch_size < 1:
            raise BadConfig("runs, batches_per_run and batch_size must be >= 1")
        if self.warmup_batches < 0:
            raise BadConfig("warmup_batches must be >= 0")
        modes = tuple(m if isinstance(m, str) else m.label for m in self.modes)
        if not modes:
            raise BadConfig("at least one mode is required")
        object.__setattr__(self, "modes", tuple(parse_mode(m).label for m in modes))
        if not self.corpus_dir:
            object.__setattr__(self, "corpus_dir", os.environ.get(CORPUS_ENV, ""))

    @property
    def images_per_run(self):
        return self.batches_per_run * self.batch_size

    def parsed_modes(self):
        return tuple(parse_mode(m) for m in self.modes)


_ALIASES = {"batches": "batches_per_run", "batch": "batch_size", "corpus": "corpus_dir",
            "warmup": "warmup_batches", "mode": "modes"}


def _coerce(name, value):
    kind = {f.name: f.type for f in fields(BenchConfig)}[name]
    if kind == "int":
        try:
            return int(value)
        except ValueError:
            raise BadConfig(f"{name} must be an integer, got {value!r}") from None
    if kind == "bool":
        return value.strip().lower() in ("1", "true", "yes", "on")
    if kind == "tuple":
        return tuple(v.strip() for v in value.split(";") if v.strip()) if ";" in value else \
            tuple(v.strip() for v in re.split(r",(?![^()]*\))", value) if v.strip())
    return value.strip()


def parse_config_text(text, **overrides):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in {f.name for f in fields(BenchConfig)}:
            raise BadConfig(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return BenchConfig(**values)


def load_config(path, **overrides):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise BadConfig(f"cannot read bench config {path}: {e}") from e
    return parse_config_text(text, **overrides)


def config_text(cfg):
    lines = []
    for f in fields(BenchConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = "; ".join(v)
        elif isinstance(v, bool):
            v = str(v).lower()
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
