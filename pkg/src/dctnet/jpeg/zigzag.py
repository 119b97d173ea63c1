"""Zig-zag scan order of the 64 frequencies of an 8x8 block.

ZIGZAG_ORDER[i] is the raster (row-major frequency) index of the i-th
element of the scan: index 0 is DC at (0,0), index 1 is (0,1), index 2 is
(1,0), ..., index 63 is (7,7).
"""

import numpy as np

ZIGZAG_ORDER = np.array([
     0,  1,  8, 16,  9,  2,  3, 10,
    17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.int64)

# RASTER_TO_ZIGZAG[r] is the scan position of raster frequency index r.
RASTER_TO_ZIGZAG = np.argsort(ZIGZAG_ORDER)


def zigzag_to_raster(values):
    """Reorder 64 values from zig-zag scan order into an 8x8 raster block."""
    v = np.asarray(values)
    if v.shape[-1] != 64:
        raise ValueError(f"expected 64 values, got {v.shape[-1]}")
    out = np.empty_like(v)
    out[..., ZIGZAG_ORDER] = v
    return out.reshape(v.shape[:-1] + (8, 8))


def raster_to_zigzag(block):
    """Reorder an 8x8 raster block (or trailing 64-vector) into scan order."""
    b = np.asarray(block)
    if b.shape[-2:] == (8, 8):
        b = b.reshape(b.shape[:-2] + (64,))
    if b.shape[-1] != 64:
        raise ValueError(f"expected an 8x8 block or 64 values, got shape {b.shape}")
    return b[..., ZIGZAG_ORDER]
