from .zigzag import ZIGZAG_ORDER, zigzag_to_raster, raster_to_zigzag
from .decoder import (
    QuantTable,
    HuffmanTable,
    ComponentLayout,
    DctBlockGrid,
    ParsedJpeg,
    parse_jpeg,
    entropy_decode,
    dequantize,
    decode_dct_tensor,
)
from .idct import inverse_dct_block, grid_to_plane, planes_to_rgb
from .dump import write_coefficient_dump, read_coefficient_dump

__all__ = [
    "ZIGZAG_ORDER",
    "zigzag_to_raster",
    "raster_to_zigzag",
    "QuantTable",
    "HuffmanTable",
    "ComponentLayout",
    "DctBlockGrid",
    "ParsedJpeg",
    "parse_jpeg",
    "entropy_decode",
    "dequantize",
    "decode_dct_tensor",
    "inverse_dct_block",
    "grid_to_plane",
    "planes_to_rgb",
    "write_coefficient_dump",
    "read_coefficient_dump",
]
