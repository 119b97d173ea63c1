"""Flat binary debug dump of decoded coefficient grids.

Layout (all little-endian int32 unless noted):
  16-byte header: magic b"DCT1", component count (u32),
                  luma grid width and height in blocks (u32 each)
  per component:  grid width (u32), grid height (u32),
                  then width*height*64 coefficients in
                  (block-row, block-col, raster-frequency) order
"""

import struct

import numpy as np

from .decoder import DctBlockGrid

MAGIC = b"DCT1"


def write_coefficient_dump(path, grids):
    with open(path, "wb") as f:
        luma = grids[0]
        f.write(MAGIC)
        f.write(struct.pack("<III", len(grids), luma.width_blocks,
                            luma.height_blocks))
        for g in grids:
            f.write(struct.pack("<II", g.width_blocks, g.height_blocks))
            f.write(np.ascontiguousarray(g.blocks, dtype="<i4").tobytes())


def read_coefficient_dump(path):
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != MAGIC:
            raise ValueError("not a coefficient dump file")
        ncomp, _, _ = struct.unpack("<III", header[4:])
        grids = []
        for ci in range(ncomp):
            w, h = struct.unpack("<II", f.read(8))
            data = np.frombuffer(f.read(w * h * 64 * 4), dtype="<i4")
            grids.append(DctBlockGrid(ci, data.reshape(h, w, 64).astype(np.int32)))
        return tuple(grids)
