"""Corpus preparation (block-aligned center crops), the synthetic corpus
generator, and in-memory loading for timing."""
from __future__ import annotations

import io
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image, JpegImagePlugin

from dctpipe.errors import DctPipeError, EmptyCorpus, UnwritableOutput
from dctpipe.jpeg.headers import parse_headers

log = logging.getLogger(__name__)

MANIFEST = "manifest.jsonl"
JPEG_SUFFIXES = (".jpg", ".jpeg", ".jpe", ".jfif")
SUBSAMPLING = {"4:4:4": 0, "4:2:0": 2}


@dataclass(frozen=True)
class CorpusEntry:
    file: str
    bytes: int
    width: int
    height: int
    orig_width: int
    orig_height: int
    offset: tuple
    quality: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple
    skipped: tuple  # (source name, reason)

    def __len__(self):
        return len(self.entries)


def crop_offset(size, crop, align=16):
    """Centered crop start rounded down to a multiple of align."""
    return ((size - crop) // 2) // align * align


def _jpeg_files(directory):
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in JPEG_SUFFIXES and p.is_file())


def prepare_corpus(input_dir, output_dir, crop_size=224, quality=None):
    """Center-crop every decodable baseline JPEG in input_dir to crop_size^2.

    The crop starts on a multiple of 16 pixels so it coincides with whole
    MCUs. quality=None re-uses the source quantization tables and chroma
    sampling; an integer re-encodes at that libjpeg quality.
    """
    files = _jpeg_files(input_dir)
    if not files:
        raise EmptyCorpus(f"no JPEG files in {input_dir}")
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UnwritableOutput(f"cannot create {out}: {e}") from e
    entries, skipped = [], []
    for src in files:
        data = src.read_bytes()
        try:
            parse_headers(data)
            im = Image.open(io.BytesIO(data))
            im.load()
        except (DctPipeError, OSError, ValueError) as e:
            log.warning("skipping %s: %s", src.name, e)
            skipped.append((src.name, str(e)))
            continue
        w, h = im.size
        if w < crop_size or h < crop_size:
            reason = f"smaller than crop ({w}x{h} < {crop_size})"
            log.info("skipping %s: %s", src.name, reason)
            skipped.append((src.name, reason))
            continue
        x0, y0 = crop_offset(w, crop_size), crop_offset(h, crop_size)
        cropped = im.crop((x0, y0, x0 + crop_size, y0 + crop_size))
        if quality is None:
            kwargs = {"qtables": im.quantization}
            if im.mode != "L":
                kwargs["subsampling"] = JpegImagePlugin.get_sampling(im)
            q = "source"
        else:
            kwargs = {"quality": int(quality)}
            q = str(int(quality))
        dest = out / (src.stem + ".jpg")
        try:
            cropped.save(dest, "JPEG", **kwargs)
        except OSError as e:
            raise UnwritableOutput(f"cannot write {dest}: {e}") from e
        entries.append(CorpusEntry(dest.name, dest.stat().st_size, crop_size, crop_size, w, h, (x0, y0), q))
    if not entries:
        raise EmptyCorpus(f"no usable images in {input_dir} ({len(skipped)} skipped)")
    manifest = Manifest(tuple(entries), tuple(skipped))
    write_manifest(manifest, out / MANIFEST)
    return manifest


def write_manifest(manifest, path):
    lines = [json.dumps(asdict(e), sort_keys=True) for e in manifest.entries]
    lines += [json.dumps({"skipped": name, "reason": reason}, sort_keys=True) for name, reason in manifest.skipped]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise UnwritableOutput(f"cannot write {path}: {e}") from e


def read_manifest(path):
    entries, skipped = [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "skipped" in obj:
            skipped.append((obj["skipped"], obj["reason"]))
        else:
            obj["offset"] = tuple(obj["offset"])
            entries.append(CorpusEntry(**obj))
    return Manifest(tuple(entries), tuple(skipped))


def load_corpus(corpus_dir):
    """Read every corpus image into memory: list of (name, bytes)."""
    if not corpus_dir:
        raise EmptyCorpus("corpus not prepared: no corpus directory given")
    d = Path(corpus_dir)
    if not d.is_dir():
        raise EmptyCorpus(f"corpus not prepared: {d} does not exist")
    if (d / MANIFEST).exists():
        names = [e.file for e in read_manifest(d / MANIFEST).entries]
    else:
        names = [p.name for p in _jpeg_files(d)]
    if not names:
        raise EmptyCorpus(f"corpus not prepared: no images in {d}")
    return [(n, (d / n).read_bytes()) for n in names]


def synthetic_image(rng, size=(256, 256)):
    """Gradients plus smooth blobs plus noise, uint8 RGB."""
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.empty((h, w, 3))
    for c in range(3):
        a, b = rng.uniform(-1, 1, 2)
        grad = 128 + 100 * (a * xx / w + b * yy / h)
        fx, fy = rng.uniform(0.5, 6, 2) * 2 * np.pi
        wave = 40 * np.sin(fx * xx / w + rng.uniform(0, 6)) * np.cos(fy * yy / h)
        img[..., c] = grad + wave + rng.normal(0, rng.uniform(2, 30), (h, w))
    return np.clip(img, 0, 255).astype(np.uint8)


def make_synthetic_corpus(output_dir, count=64, size=(256, 256), qualities=(25, 50, 75, 100),
                          subsampling=("4:2:0",), seed=0):
    """Write `count` synthetic JPEGs cycling through qualities and chroma
    samplings. Returns the written paths."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UnwritableOutput(f"cannot create {out}: {e}") from e
    rng = np.random.default_rng(seed)
    paths = []
    for i in range(count):
        q = qualities[i % len(qualities)]
        ss = subsampling[(i // len(qualities)) % len(subsampling)]
        im = Image.fromarray(synthetic_image(rng, size))
        p = out / f"synth_{i:03d}_q{q}.jpg"
        im.save(p, "JPEG", quality=q, subsampling=SUBSAMPLING[ss])
        paths.append(p)
    return paths
