import numpy as np

# ZIGZAG[k] = raster index (row * 8 + col) of zigzag position k
ZIGZAG = np.array([
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.intp)

# RASTER_TO_ZIGZAG[r] = zigzag position of raster index r
RASTER_TO_ZIGZAG = np.argsort(ZIGZAG)


def zigzag(blocks):
    """(..., 8, 8) natural-order blocks -> (..., 64) zigzag vectors."""
    blocks = np.asarray(blocks)
    flat = blocks.reshape(blocks.shape[:-2] + (64,))
    return flat[..., ZIGZAG]


def dezigzag(vectors):
    """(..., 64) zigzag vectors -> (..., 8, 8) natural-order blocks."""
    vectors = np.asarray(vectors)
    flat = vectors[..., RASTER_TO_ZIGZAG]
    return flat.reshape(vectors.shape[:-1] + (8, 8))
