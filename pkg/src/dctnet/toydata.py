"""Two-class toy JPEG corpus for desk-scale training runs.

Class "horizontal" holds horizontally-striped images (intensity varies
along y), class "vertical" the transpose. Frequency, phase, amplitude,
base color and noise are jittered per image. Requires cv2 for encoding;
the toolkit itself never decodes through it.
"""

from pathlib import Path

import numpy as np

CLASSES = ("horizontal", "vertical")


def _stripe_image(rng, size, vertical):
    h = w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    t = xx if vertical else yy
    freq = rng.uniform(0.25, 0.8)
    phase = rng.uniform(0, 2 * np.pi)
    amp = rng.uniform(45, 75)
    wave = np.sin(t * freq + phase) * amp
    img = np.empty((h, w, 3))
    for c in range(3):
        base = rng.uniform(95, 160)
        img[:, :, c] = base + wave * rng.uniform(0.7, 1.0) \
            + rng.normal(0, 4, (h, w))
    return np.clip(img, 0, 255).astype(np.uint8)


def make_toy_corpus(root, train_per_class=150, test_per_class=120, size=40,
                    quality=88, seed=1234):
    """Write root/{train,test}/{horizontal,vertical}/NNNN.jpg; returns counts."""
    import cv2

    root = Path(root)
    rng = np.random.default_rng(seed)
    counts = {}
    for split, per_class in (("train", train_per_class), ("test", test_per_class)):
        for cid, cname in enumerate(CLASSES):
            out = root / split / cname
            out.mkdir(parents=True, exist_ok=True)
            for i in range(per_class):
                img = _stripe_image(rng, size, vertical=(cid == 1))
                ok, buf = cv2.imencode(".jpg", img[:, :, ::-1], [
                    cv2.IMWRITE_JPEG_QUALITY, quality,
                    cv2.IMWRITE_JPEG_SAMPLING_FACTOR,
                    cv2.IMWRITE_JPEG_SAMPLING_FACTOR_420])
                if not ok:
                    raise RuntimeError("JPEG encoding failed")
                (out / f"{i:04d}.jpg").write_bytes(buf.tobytes())
            counts[f"{split}/{cname}"] = per_class
    return counts
