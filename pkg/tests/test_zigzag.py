import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from dctnet.jpeg.zigzag import ZIGZAG_ORDER, raster_to_zigzag, zigzag_to_raster

# ITU-T T.81 figure 5 scan order (raster index of each scan position).
T81_ORDER = [
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
]


def test_matches_t81_sequence():
    assert ZIGZAG_ORDER.tolist() == T81_ORDER


def test_low_indices_and_corner():
    v = np.arange(64)
    block = zigzag_to_raster(v)
    assert block[0, 0] == 0          # DC
    assert block[0, 1] == 1
    assert block[1, 0] == 2
    assert block[7, 7] == 63         # last element of the scan


@given(st.permutations(list(range(64))))
def test_bijection(perm):
    v = np.asarray(perm)
    assert np.array_equal(raster_to_zigzag(zigzag_to_raster(v)), v)


def test_inverse_on_blocks():
    rng = np.random.default_rng(0)
    block = rng.integers(-500, 500, size=(8, 8))
    assert np.array_equal(zigzag_to_raster(raster_to_zigzag(block)), block)


def test_batched_reorder():
    rng = np.random.default_rng(1)
    grids = rng.integers(-100, 100, size=(3, 4, 64))
    out = zigzag_to_raster(grids)
    assert out.shape == (3, 4, 8, 8)
    assert np.array_equal(out[2, 1], zigzag_to_raster(grids[2, 1]))
