import numpy as np
import pytest

cv2 = pytest.importorskip("cv2")


def encode_jpeg(img, quality=85, subsampling="420", restart=0):
    """Encode an RGB uint8 array with the reference encoder; returns bytes."""
    flags = [cv2.IMWRITE_JPEG_QUALITY, int(quality),
             cv2.IMWRITE_JPEG_SAMPLING_FACTOR,
             {"420": cv2.IMWRITE_JPEG_SAMPLING_FACTOR_420,
              "444": cv2.IMWRITE_JPEG_SAMPLING_FACTOR_444,
              "422": cv2.IMWRITE_JPEG_SAMPLING_FACTOR_422}[subsampling]]
    if restart:
        flags += [cv2.IMWRITE_JPEG_RST_INTERVAL, int(restart)]
    ok, buf = cv2.imencode(".jpg", img[:, :, ::-1], flags)
    assert ok
    return buf.tobytes()


def smooth_image(rng, h, w, noise=8.0):
    """Natural-ish random image: low-frequency waves plus mild noise."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.empty((h, w, 3))
    for c in range(3):
        img[:, :, c] = (np.sin(xx / rng.uniform(5, 20) + rng.uniform(0, 6))
                        * rng.uniform(20, 70)
                        + np.cos(yy / rng.uniform(5, 20)) * rng.uniform(10, 50)
                        + rng.normal(0, noise, (h, w)) + rng.uniform(90, 160))
    return np.clip(img, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    from dctnet.toydata import make_toy_corpus

    root = tmp_path_factory.mktemp("toy-corpus")
    counts = make_toy_corpus(root, seed=7)
    total = sum(counts.values())
    assert total >= 400
    return root


@pytest.fixture(scope="session")
def reference_tools():
    from dctnet.jpeg import reference

    try:
        reference._build_tools()
    except reference.ReferenceUnavailable as e:
        pytest.skip(f"reference decoder unavailable: {e}")
    return reference
