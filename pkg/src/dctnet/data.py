"""Dataset ingestion and DCT-domain augmentation."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CropTooLarge, EmptyDataset, UnreadablePath
from .jpeg import decode_dct_tensor
from .jpeg.zigzag import ZIGZAG_ORDER
from .jpeg.idct import BASIS
from .resnet import assemble_dct_input

logger = logging.getLogger(__name__)


@dataclass
class DatasetIndex:
    entries: list            # (path, class_id)
    classes: list            # class names, id = position
    split: str = "train"
    skipped: int = 0


def ingest(root, split="train", classes=None):
    """Index root/<class>/*.jpg deterministically; skip non-JPEG files."""
    root = Path(root)
    if not root.is_dir():
        raise UnreadablePath(f"{root} is not a readable directory")
    if classes is None:
        classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise EmptyDataset(f"no class directories under {root}")
    entries = []
    skipped = 0
    for cid, cname in enumerate(classes):
        cdir = root / cname
        if not cdir.is_dir():
            raise UnreadablePath(f"missing class directory {cdir}")
        for f in sorted(cdir.iterdir()):
            if not f.is_file():
                continue
            try:
                head = f.open("rb").read(2)
            except OSError as e:
                raise UnreadablePath(f"cannot read {f}: {e}") from None
            if head != b"\xff\xd8":
                skipped += 1
                continue
            entries.append((str(f), cid))
    if skipped:
        logger.warning("skipped %d non-JPEG files under %s", skipped, root)
    if not entries:
        raise EmptyDataset(f"no JPEG files under {root}")
    return DatasetIndex(entries, list(classes), split, skipped)


def load_dct_tensors(index):
    """Decode every file of an index to its [192, Hb, Wb] coefficient tensor."""
    tensors = []
    for path, _ in index.entries:
        try:
            grids = decode_dct_tensor(Path(path).read_bytes())
        except Exception as e:
            raise type(e)(f"{path}: {e}") from None
        if len(grids) != 3:
            raise EmptyDataset(f"{path}: expected a color JPEG")
        tensors.append(assemble_dct_input(*grids))
    return tensors


# Horizontal mirroring negates coefficients with odd horizontal frequency.
# Channel z is raster index ZIGZAG_ORDER[z]; its column is the horizontal
# frequency.
_FLIP_SIGNS_64 = np.where(ZIGZAG_ORDER % 8 % 2 == 1, -1.0, 1.0).astype(np.float32)


def flip_dct(x):
    """Horizontal flip of a [C, Hb, Wb] DCT tensor (C a multiple of 64)."""
    c = x.shape[0]
    signs = np.tile(_FLIP_SIGNS_64, c // 64).astype(x.dtype)
    return x[:, :, ::-1] * signs[:, None, None]


def augment_dct(x, crop_blocks, flip, rng):
    """Random block-aligned crop and optional DCT-domain horizontal flip."""
    hb, wb = x.shape[1:]
    ch = cw = int(crop_blocks)
    if ch > hb or cw > wb:
        raise CropTooLarge(f"crop {ch}x{cw} exceeds grid {hb}x{wb}")
    r = int(rng.integers(0, hb - ch + 1))
    c = int(rng.integers(0, wb - cw + 1))
    out = x[:, r:r + ch, c:c + cw]
    if flip:
        out = flip_dct(out)
    return np.ascontiguousarray(out)


def center_crop_dct(x, crop_blocks):
    hb, wb = x.shape[1:]
    ch = cw = int(crop_blocks)
    if ch > hb or cw > wb:
        raise CropTooLarge(f"crop {ch}x{cw} exceeds grid {hb}x{wb}")
    r = (hb - ch) // 2
    c = (wb - cw) // 2
    return np.ascontiguousarray(x[:, r:r + ch, c:c + cw])


def dct_tensor_to_rgb(x):
    """Reconstruct pixels from a [192, Hb, Wb] tensor (training-path only).

    Inverse-transforms each component plane and converts YCbCr to RGB,
    returning float32 [3, 8*Hb, 8*Wb] scaled to roughly unit range.
    """
    hb, wb = x.shape[1:]
    planes = []
    for comp in range(3):
        chans = x[64 * comp:64 * (comp + 1)].astype(np.float64)
        blocks = np.empty((hb, wb, 64))
        blocks[:, :, ZIGZAG_ORDER] = chans.transpose(1, 2, 0)
        blocks = blocks.reshape(hb, wb, 8, 8)
        px = np.einsum("ux,hwuv,vy->hwxy", BASIS, blocks, BASIS, optimize=True)
        planes.append(px.transpose(0, 2, 1, 3).reshape(hb * 8, wb * 8) + 128.0)
    y, cb, cr = planes
    r = y + 1.402 * (cr - 128.0)
    g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0)
    b = y + 1.772 * (cb - 128.0)
    rgb = np.stack([r, g, b], axis=0)
    return ((np.clip(rgb, 0.0, 255.0) - 128.0) / 64.0).astype(np.float32)
