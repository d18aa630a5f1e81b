"""Reference-codec oracles (libjpeg via jpeglib). Kept apart from the package:
jpeglib is a test-only dependency."""
import math
import os
import tempfile

import numpy as np

import jpeglib
from jpeglib._cenum import DCTMethod

# libjpeg-turbo 2.1 with the floating-point IDCT: spatial chroma upsampling
# like ours, and an IDCT whose rounding stays within one unit of exact
REFERENCE_VERSION = "turbo210"


def _with_file(data, fn):
    fd, path = tempfile.mkstemp(suffix=".jpg")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        return fn(path)
    finally:
        os.unlink(path)


def reference_coefficients(data):
    """Quantized coefficients per component, (rows, cols, 8, 8) natural order."""
    def read(path):
        d = jpeglib.read_dct(path)
        planes = [d.Y] + ([d.Cb, d.Cr] if d.Cb is not None else [])
        return [np.asarray(p) for p in planes], np.asarray(d.qt)
    return _with_file(data, read)


def reference_rgb(data):
    def read(path):
        jpeglib.version.set(REFERENCE_VERSION)
        return np.asarray(jpeglib.read_spatial(path, dct_method=DCTMethod.JDCT_FLOAT).spatial)
    return _with_file(data, read)


# naive per-position oracles, double accumulation via math.fsum

def lp_loop(w, x):
    m, n = w.shape
    _, h, wd = x.shape
    y = np.zeros((m, h, wd))
    for i in range(h):
        for j in range(wd):
            for o in range(m):
                y[o, i, j] = math.fsum(float(w[o, c]) * float(x[c, i, j]) for c in range(n))
    return y


def ccpp_loop(w, b, x):
    y = lp_loop(w, x)
    for o in range(w.shape[0]):
        y[o] = np.maximum(y[o] + float(b[o]), 0.0)
    return y


def la_loop(w, x):
    m, g = w.shape
    _, h, wd = x.shape
    y = np.zeros((m, h, wd))
    for i in range(h):
        for j in range(wd):
            for o in range(m):
                r = [float(x[o * g + k, i, j]) for k in range(g)]
                s = [float(w[o, k]) * r[k] for k in range(g)]
                top = max(s)
                e = [math.exp(v - top) for v in s]
                z = math.fsum(e)
                y[o, i, j] = math.fsum(e[k] / z * r[k] for k in range(g))
    return y
