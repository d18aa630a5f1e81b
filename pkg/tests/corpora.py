"""Deterministic in-memory JPEG corpora for tests."""
import io

import numpy as np
from PIL import Image

from dctpipe.bench.corpus import synthetic_image

QUALITIES = (25, 50, 75, 100)
SIZES = [(224, 224), (37, 53), (100, 131), (64, 64), (17, 250), (9, 9), (160, 120), (33, 48)]


def pil_jpeg(arr, quality=75, subsampling=2, **kw):
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, "JPEG", quality=quality, subsampling=subsampling, **kw)
    return buf.getvalue()


def oracle_corpus(count=64, seed=2024):
    """Qualities x {4:2:0, 4:4:4} x assorted sizes, some odd, every 16th
    image grayscale. Returns a list of (name, bytes)."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        q = QUALITIES[i % 4]
        h, w = SIZES[(i // 4) % len(SIZES)]
        img = synthetic_image(rng, (h, w))
        if i % 16 == 15:
            data = pil_jpeg(img[..., 0], quality=q)
            kind = "gray"
        else:
            ss = 2 if (i // 2) % 2 == 0 else 0
            data = pil_jpeg(img, quality=q, subsampling=ss)
            kind = "420" if ss == 2 else "444"
        out.append((f"img{i:02d}_{kind}_q{q}_{w}x{h}", data))
    return out
