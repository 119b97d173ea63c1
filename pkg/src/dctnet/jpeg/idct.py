"""Inverse DCT and color conversion.

This module exists only as a verification oracle for the partial decoder:
the tensor pipeline never runs it. Every call bumps the `idct_blocks`
instrumentation counter so tests can assert the no-IDCT guarantee.
"""

import numpy as np

from .. import instrument

# Orthonormal DCT-II basis: BASIS[u, x] = c(u) * cos((2x+1) u pi / 16),
# c(0)=sqrt(1/8), c(u>0)=sqrt(2/8). Pixels = BASIS.T @ coeffs @ BASIS.
_x = np.arange(8)
BASIS = np.cos((2.0 * _x[None, :] + 1.0) * _x[:, None] * np.pi / 16.0)
BASIS *= np.sqrt(2.0 / 8.0)
BASIS[0] *= np.sqrt(0.5)


def inverse_dct_block(block, level_shift=True):
    """2-D type-III DCT of one raster-order 8x8 coefficient block.

    Returns float64 pixel values; with `level_shift` the +128 shift and
    clamp to [0, 255] of the JPEG reconstruction path are applied.
    """
    b = np.asarray(block, dtype=np.float64).reshape(8, 8)
    instrument.bump("idct_blocks")
    px = BASIS.T @ b @ BASIS
    if level_shift:
        px = np.clip(px + 128.0, 0.0, 255.0)
    return px


def idct_grid(blocks):
    """IDCT every block of a (hb, wb, 64) raster-order grid at once."""
    g = np.asarray(blocks, dtype=np.float64)
    hb, wb = g.shape[:2]
    instrument.bump("idct_blocks", hb * wb)
    g = g.reshape(hb, wb, 8, 8)
    return np.einsum("ux,hwuv,vy->hwxy", BASIS, g, BASIS, optimize=True)


def grid_to_plane(grid, level_shift=True):
    """Reassemble a DctBlockGrid into a full sample plane (float64)."""
    px = idct_grid(grid.blocks)
    hb, wb = px.shape[:2]
    plane = px.transpose(0, 2, 1, 3).reshape(hb * 8, wb * 8)
    if level_shift:
        plane = np.clip(plane + 128.0, 0.0, 255.0)
    return plane


def upsample_nearest(plane, factor=2):
    return np.repeat(np.repeat(plane, factor, axis=0), factor, axis=1)


def _round_half_up(x):
    return np.floor(x + 0.5)


def planes_to_rgb(y, cb, cr, width, height):
    """JFIF full-range YCbCr -> RGB, cropped to the frame size, uint8.

    Rounding mirrors the reference integer pipeline: samples are rounded
    to integers first and each chroma contribution is rounded separately
    before being added, so agreement with a reference decoder is within
    the +/-1 of its fixed-point arithmetic.
    """
    if cb.shape != y.shape:
        cb = upsample_nearest(cb)
        cr = upsample_nearest(cr)
    y = np.clip(_round_half_up(y[:height, :width]), 0, 255)
    cb = np.clip(_round_half_up(cb[:height, :width]), 0, 255) - 128.0
    cr = np.clip(_round_half_up(cr[:height, :width]), 0, 255) - 128.0
    r = y + _round_half_up(1.402 * cr)
    g = y + _round_half_up(-0.344136 * cb - 0.714136 * cr)
    b = y + _round_half_up(1.772 * cb)
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(rgb, 0, 255).astype(np.uint8)
