"""Baseline JPEG partial decoder.

Parses the container (DQT/DHT/SOF0/DRI/SOS), entropy-decodes the scan and
dequantizes, stopping right before the inverse DCT. Only baseline
sequential Huffman frames (SOF0) with 4:4:4 or 4:2:0 chroma layouts are
accepted; everything else raises a typed error.

Marker layout reference: ITU-T T.81. Segments carry a big-endian length
that includes the two length bytes themselves; SOI/EOI/RSTn do not.
"""

from dataclasses import dataclass, field
from struct import unpack

import numpy as np

from ..errors import (
    BadMarker,
    CoefficientIndexOverflow,
    InvalidHuffmanCode,
    TruncatedStream,
    UnsupportedFrame,
    UnsupportedSampling,
)
from .zigzag import ZIGZAG_ORDER

SOI = 0xD8
EOI = 0xD9
SOS = 0xDA
DQT = 0xDB
DNL = 0xDC
DRI = 0xDD
DHT = 0xC4
DAC = 0xCC
COM = 0xFE
TEM = 0x01
SOF0 = 0xC0
RST0, RST7 = 0xD0, 0xD7

# All SOFn values except SOF0 describe frames we do not decode.
_UNSUPPORTED_SOF = {0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7,
                    0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF}


@dataclass
class QuantTable:
    """64 quantization divisors in zig-zag order."""
    id: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int32)
        if self.id < 0 or self.id > 3:
            raise BadMarker(f"quantization table id {self.id} out of range")
        if self.values.shape != (64,) or (self.values < 1).any():
            raise BadMarker("quantization table must hold 64 values >= 1")


@dataclass
class HuffmanTable:
    table_class: str          # "dc" or "ac"
    id: int
    code_lengths: np.ndarray  # 16 counts, lengths 1..16
    symbols: np.ndarray
    # canonical code assignment: (length, code) -> symbol
    codes: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.code_lengths = np.asarray(self.code_lengths, dtype=np.int64)
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.code_lengths.shape != (16,):
            raise BadMarker("Huffman table needs 16 code-length counts")
        if int(self.code_lengths.sum()) != len(self.symbols):
            raise BadMarker("Huffman symbol count does not match code lengths")
        code = 0
        k = 0
        for length in range(1, 17):
            for _ in range(int(self.code_lengths[length - 1])):
                if code >= (1 << length):
                    raise BadMarker("Huffman code lengths overflow prefix space")
                self.codes[(length, code)] = int(self.symbols[k])
                code += 1
                k += 1
            code <<= 1


@dataclass
class ComponentLayout:
    id: int
    h: int                    # horizontal sampling factor
    v: int                    # vertical sampling factor
    quant_id: int
    width_blocks: int = 0     # MCU-padded grid dimensions
    height_blocks: int = 0
    real_width_blocks: int = 0   # blocks covering actual samples
    real_height_blocks: int = 0
    dc_table: int = -1        # filled in by the SOS header
    ac_table: int = -1


@dataclass
class DctBlockGrid:
    """Per-component grid of 8x8 blocks, 64 coefficients each.

    `blocks` has shape (height_blocks, width_blocks, 64) in raster
    (row-major frequency) order; values are dequantized DCT amplitudes.
    """
    component_id: int
    blocks: np.ndarray

    @property
    def height_blocks(self):
        return self.blocks.shape[0]

    @property
    def width_blocks(self):
        return self.blocks.shape[1]


@dataclass
class ParsedJpeg:
    width: int
    height: int
    quant_tables: dict
    dc_tables: dict
    ac_tables: dict
    components: list
    scan_order: list          # component ids in scan order
    scan_data: bytes          # raw entropy-coded bytes (stuffed, with RSTs)
    restart_interval: int = 0

    @property
    def mcu_geometry(self):
        hmax = max(c.h for c in self.components)
        vmax = max(c.v for c in self.components)
        mcus_x = -(-self.width // (8 * hmax))
        mcus_y = -(-self.height // (8 * vmax))
        return mcus_x, mcus_y


def _u16(data, pos):
    if pos + 2 > len(data):
        raise TruncatedStream("unexpected end of stream reading a length")
    return unpack(">H", data[pos:pos + 2])[0]


def _segment(data, pos):
    """Return (payload, next_pos) for a length-prefixed marker segment."""
    length = _u16(data, pos)
    if length < 2:
        raise BadMarker("segment length smaller than its own length field")
    end = pos + length
    if end > len(data):
        raise TruncatedStream("segment runs past end of stream")
    return data[pos + 2:end], end


def _parse_dqt(payload, tables):
    pos = 0
    while pos < len(payload):
        info = payload[pos]
        pos += 1
        precision, table_id = info >> 4, info & 0x0F
        if precision not in (0, 1):
            raise BadMarker(f"bad DQT precision {precision}")
        n = 64 * (2 if precision else 1)
        if pos + n > len(payload):
            raise TruncatedStream("DQT payload truncated")
        if precision:
            values = np.frombuffer(payload[pos:pos + n], dtype=">u2").astype(np.int32)
        else:
            values = np.frombuffer(payload[pos:pos + n], dtype=np.uint8).astype(np.int32)
        tables[table_id] = QuantTable(table_id, values)
        pos += n


def _parse_dht(payload, dc_tables, ac_tables):
    pos = 0
    while pos < len(payload):
        info = payload[pos]
        pos += 1
        is_ac, table_id = info >> 4, info & 0x0F
        if is_ac not in (0, 1) or table_id > 3:
            raise BadMarker(f"bad DHT table spec {info:#x}")
        if pos + 16 > len(payload):
            raise TruncatedStream("DHT counts truncated")
        counts = np.frombuffer(payload[pos:pos + 16], dtype=np.uint8)
        pos += 16
        total = int(counts.sum())
        if pos + total > len(payload):
            raise TruncatedStream("DHT symbols truncated")
        symbols = np.frombuffer(payload[pos:pos + total], dtype=np.uint8)
        pos += total
        table = HuffmanTable("ac" if is_ac else "dc", table_id, counts, symbols)
        (ac_tables if is_ac else dc_tables)[table_id] = table


def _parse_sof0(payload):
    if len(payload) < 6:
        raise TruncatedStream("SOF0 payload truncated")
    precision, height, width, ncomp = unpack(">BHHB", payload[:6])
    if precision != 8:
        raise UnsupportedFrame(f"{precision}-bit precision not supported")
    if ncomp not in (1, 3):
        raise UnsupportedSampling(f"{ncomp} color components not supported")
    if len(payload) != 6 + 3 * ncomp:
        raise BadMarker("SOF0 payload has the wrong size")
    components = []
    for i in range(ncomp):
        cid, hv, tq = unpack("BBB", payload[6 + 3 * i:9 + 3 * i])
        components.append(ComponentLayout(cid, hv >> 4, hv & 0x0F, tq))
    _check_sampling(components)
    hmax = max(c.h for c in components)
    vmax = max(c.v for c in components)
    mcus_x = -(-width // (8 * hmax))
    mcus_y = -(-height // (8 * vmax))
    for c in components:
        c.width_blocks = mcus_x * c.h
        c.height_blocks = mcus_y * c.v
        # blocks covering real samples (padding blocks at the MCU edge excluded)
        c.real_width_blocks = -(-(width * c.h) // (8 * hmax))
        c.real_height_blocks = -(-(height * c.v) // (8 * vmax))
    return width, height, components


def _check_sampling(components):
    if len(components) == 1:
        if (components[0].h, components[0].v) != (1, 1):
            raise UnsupportedSampling("single-component frames must be 1x1 sampled")
        return
    factors = [(c.h, c.v) for c in components]
    if factors not in ([(1, 1), (1, 1), (1, 1)], [(2, 2), (1, 1), (1, 1)]):
        raise UnsupportedSampling(f"chroma layout {factors} is not 4:4:4 or 4:2:0")


def _parse_sos_header(payload, components):
    if len(payload) < 1:
        raise TruncatedStream("SOS payload truncated")
    ncomp = payload[0]
    if ncomp != len(components):
        raise UnsupportedFrame("non-interleaved scans are not supported")
    if len(payload) != 1 + 2 * ncomp + 3:
        raise BadMarker("SOS payload has the wrong size")
    by_id = {c.id: c for c in components}
    order = []
    for i in range(ncomp):
        cid, tables = payload[1 + 2 * i], payload[2 + 2 * i]
        if cid not in by_id:
            raise BadMarker(f"scan references unknown component {cid}")
        by_id[cid].dc_table = tables >> 4
        by_id[cid].ac_table = tables & 0x0F
        order.append(cid)
    ss, se, a = payload[-3], payload[-2], payload[-1]
    if (ss, se, a) != (0, 63, 0):
        raise UnsupportedFrame("spectral selection / successive approximation "
                               "imply a non-baseline scan")
    return order


def _find_eoi(data, pos):
    """Return (scan_bytes, pos_after_eoi) for the entropy-coded segment."""
    i = pos
    n = len(data)
    while i < n - 1:
        if data[i] == 0xFF:
            nxt = data[i + 1]
            if nxt == 0x00 or RST0 <= nxt <= RST7 or nxt == 0xFF:
                i += 2 if nxt != 0xFF else 1
                continue
            if nxt == EOI:
                return data[pos:i], i + 2
            raise BadMarker(f"unexpected marker 0xFF{nxt:02X} inside scan data")
        i += 1
    raise TruncatedStream("scan data ended without an EOI marker")


def parse_jpeg(data):
    """Parse a baseline JPEG byte stream into tables, layouts and scan bytes."""
    data = bytes(data)
    if len(data) < 4 or data[0] != 0xFF or data[1] != SOI:
        raise BadMarker("stream does not begin with an SOI marker")
    quant_tables, dc_tables, ac_tables = {}, {}, {}
    width = height = None
    components = []
    restart_interval = 0
    scan_order = None
    scan_data = None
    pos = 2
    while True:
        if pos + 2 > len(data):
            raise TruncatedStream("stream ended while looking for a marker")
        if data[pos] != 0xFF:
            raise BadMarker(f"expected a marker at offset {pos}, "
                            f"found {data[pos]:#04x}")
        marker = data[pos + 1]
        pos += 2
        if marker == 0xFF:       # fill byte before a marker
            pos -= 1
            continue
        if marker == EOI:
            break
        if marker == SOI or RST0 <= marker <= RST7 or marker == TEM:
            raise BadMarker(f"misplaced marker 0xFF{marker:02X} in header")
        if marker == SOF0:
            payload, pos = _segment(data, pos)
            width, height, components = _parse_sof0(payload)
        elif marker in _UNSUPPORTED_SOF or marker == DAC:
            kind = "progressive" if marker == 0xC2 else f"0xFF{marker:02X}"
            raise UnsupportedFrame(f"unsupported frame type {kind}; "
                                   "only baseline sequential (SOF0) is decoded")
        elif marker == DQT:
            payload, pos = _segment(data, pos)
            _parse_dqt(payload, quant_tables)
        elif marker == DHT:
            payload, pos = _segment(data, pos)
            _parse_dht(payload, dc_tables, ac_tables)
        elif marker == DRI:
            payload, pos = _segment(data, pos)
            if len(payload) != 2:
                raise BadMarker("DRI payload must be 2 bytes")
            restart_interval = unpack(">H", payload)[0]
        elif marker == SOS:
            if not components:
                raise BadMarker("SOS before SOF0")
            payload, pos = _segment(data, pos)
            scan_order = _parse_sos_header(payload, components)
            scan_data, pos = _find_eoi(data, pos)
            break
        else:
            # APPn, COM, DNL and anything else we can safely skip
            _, pos = _segment(data, pos)
    if width is None or scan_data is None:
        raise TruncatedStream("stream ended before SOF0/SOS")
    for c in components:
        if c.quant_id not in quant_tables:
            raise BadMarker(f"component {c.id} references missing "
                            f"quantization table {c.quant_id}")
    return ParsedJpeg(width, height, quant_tables, dc_tables, ac_tables,
                      components, scan_order, scan_data, restart_interval)


class _BitReader:
    """MSB-first bit reader over unstuffed entropy-coded bytes."""

    __slots__ = ("data", "nbytes", "pos", "bit")

    def __init__(self, data):
        self.data = data
        self.nbytes = len(data)
        self.pos = 0
        self.bit = 0

    def read_bit(self):
        if self.pos >= self.nbytes:
            raise TruncatedStream("entropy-coded data exhausted")
        b = (self.data[self.pos] >> (7 - self.bit)) & 1
        self.bit += 1
        if self.bit == 8:
            self.bit = 0
            self.pos += 1
        return b

    def read_bits(self, n):
        v = 0
        for _ in range(n):
            v = (v << 1) | self.read_bit()
        return v


def _unstuff_and_split(scan_data):
    """Strip byte stuffing and split the scan at restart markers.

    Returns a list of entropy-coded byte chunks, one per restart interval,
    after validating that RST markers cycle 0..7.
    """
    segments = []
    current = bytearray()
    expected_rst = 0
    i = 0
    n = len(scan_data)
    while i < n:
        b = scan_data[i]
        if b != 0xFF:
            current.append(b)
            i += 1
            continue
        if i + 1 >= n:
            raise TruncatedStream("dangling 0xFF at end of scan data")
        nxt = scan_data[i + 1]
        if nxt == 0x00:
            current.append(0xFF)
            i += 2
        elif nxt == 0xFF:
            i += 1
        elif RST0 <= nxt <= RST7:
            if nxt - RST0 != expected_rst:
                raise BadMarker(f"restart marker out of order: got RST{nxt - RST0},"
                                f" expected RST{expected_rst}")
            expected_rst = (expected_rst + 1) & 7
            segments.append(bytes(current))
            current = bytearray()
            i += 2
        else:
            raise BadMarker(f"unexpected marker 0xFF{nxt:02X} in scan data")
    segments.append(bytes(current))
    return segments


def _extend(value, size):
    # T.81 F.2.2.1: map the `size`-bit magnitude to a signed coefficient.
    if size == 0:
        return 0
    if value < (1 << (size - 1)):
        return value - (1 << size) + 1
    return value


def _read_symbol(reader, table):
    code = 0
    codes = table.codes
    for length in range(1, 17):
        code = (code << 1) | reader.read_bit()
        sym = codes.get((length, code))
        if sym is not None:
            return sym
    raise InvalidHuffmanCode("bit pattern matches no Huffman code")


def _decode_block(reader, dc_table, ac_table, pred):
    block = np.zeros(64, dtype=np.int32)
    size = _read_symbol(reader, dc_table)
    if size > 11:
        raise InvalidHuffmanCode(f"DC magnitude category {size} out of range")
    pred += _extend(reader.read_bits(size), size)
    block[0] = pred
    k = 1
    while k < 64:
        sym = _read_symbol(reader, ac_table)
        run, size = sym >> 4, sym & 0x0F
        if size == 0:
            if run == 15:          # ZRL: sixteen zero coefficients
                k += 16
                if k > 64:
                    raise CoefficientIndexOverflow("ZRL ran past index 63")
                continue
            break                  # EOB: rest of the block is zero
        k += run
        if k > 63:
            raise CoefficientIndexOverflow(f"AC run reached index {k}")
        if size > 10:
            raise InvalidHuffmanCode(f"AC magnitude category {size} out of range")
        block[k] = _extend(reader.read_bits(size), size)
        k += 1
    return block, pred


def entropy_decode(parsed):
    """Decode the scan into per-component quantized blocks (zig-zag order).

    Returns {component_id: int32 array (height_blocks, width_blocks, 64)}.
    DC differentials are accumulated into absolute values; restart markers
    reset the predictors. Partial MCUs at the edges are decoded in full.
    """
    comps = {c.id: c for c in parsed.components}
    for cid in parsed.scan_order:
        c = comps[cid]
        if c.dc_table not in parsed.dc_tables or c.ac_table not in parsed.ac_tables:
            raise BadMarker(f"component {cid} references a missing Huffman table")
    mcus_x, mcus_y = parsed.mcu_geometry
    total_mcus = mcus_x * mcus_y
    grids = {c.id: np.zeros((c.height_blocks, c.width_blocks, 64), dtype=np.int32)
             for c in parsed.components}
    segments = _unstuff_and_split(parsed.scan_data)
    interval = parsed.restart_interval
    if interval == 0 and len(segments) > 1:
        raise BadMarker("restart markers present but no DRI segment")

    preds = {cid: 0 for cid in parsed.scan_order}
    reader = _BitReader(segments[0])
    seg_idx = 0
    for mcu in range(total_mcus):
        if interval and mcu and mcu % interval == 0:
            seg_idx += 1
            if seg_idx >= len(segments):
                raise TruncatedStream("missing restart marker segment")
            reader = _BitReader(segments[seg_idx])
            preds = {cid: 0 for cid in parsed.scan_order}
        my, mx = divmod(mcu, mcus_x)
        for cid in parsed.scan_order:
            c = comps[cid]
            grid = grids[cid]
            for by in range(c.v):
                for bx in range(c.h):
                    block, preds[cid] = _decode_block(
                        reader, parsed.dc_tables[c.dc_table],
                        parsed.ac_tables[c.ac_table], preds[cid])
                    grid[my * c.v + by, mx * c.h + bx] = block
    return grids


def dequantize(quantized, qtable):
    """Multiply zig-zag quantized blocks by the table, reorder to raster.

    `quantized` is (..., 64) in zig-zag order; the result has the same
    shape with coefficients in raster frequency order, int32.
    """
    q = np.asarray(quantized, dtype=np.int32)
    if q.shape[-1] != 64:
        raise ValueError("blocks must have 64 coefficients")
    deq = q * qtable.values
    out = np.empty_like(deq)
    out[..., ZIGZAG_ORDER] = deq
    return out


def decode_dct_tensor(data):
    """Partial-decode a JPEG: parse, entropy-decode, dequantize.

    Returns a tuple of DctBlockGrid, one per component (Y, Cb, Cr for
    color, a single grid for grayscale). No inverse DCT is performed.
    """
    parsed = parse_jpeg(data)
    quantized = entropy_decode(parsed)
    grids = []
    for c in parsed.components:
        raster = dequantize(quantized[c.id], parsed.quant_tables[c.quant_id])
        grids.append(DctBlockGrid(c.id, raster))
    return tuple(grids)
