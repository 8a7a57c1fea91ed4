import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdcluster.encoding import (
    ApertureGrid,
    EncodingSpec,
    digit_table,
    digits_to_index,
    index_to_digits,
    partner_aperture,
    photon_apertures,
)
from hdcluster.errors import EncodingError


@pytest.mark.parametrize(
    "m, d, n, digits",
    [(0, 2, 4, (0, 0, 0, 0)), (15, 2, 4, (1, 1, 1, 1)), (7, 5, 2, (1, 2))],
)
def test_index_to_digits_examples(m, d, n, digits):
    assert index_to_digits(m, EncodingSpec(d, n)) == digits


@pytest.mark.parametrize(
    "digits, d, n, m",
    [([0, 0], 5, 2, 0), ([4, 4], 5, 2, 24), ([1, 0, 1, 1], 2, 4, 11)],
)
def test_digits_to_index_examples(digits, d, n, m):
    assert digits_to_index(digits, EncodingSpec(d, n)) == m


def test_out_of_range_errors():
    spec = EncodingSpec(2, 4)
    with pytest.raises(EncodingError):
        index_to_digits(16, spec)
    with pytest.raises(EncodingError):
        index_to_digits(-1, spec)
    with pytest.raises(EncodingError):
        digits_to_index([0, 2, 0, 0], spec)
    with pytest.raises(EncodingError):
        digits_to_index([0, 1], spec)


def test_partner_examples():
    grid32 = EncodingSpec(2, 4).grid
    assert partner_aperture(0, grid32) == 31
    assert partner_aperture(15, grid32) == 16
    assert partner_aperture(3, ApertureGrid(5, 10)) == 46
    with pytest.raises(EncodingError):
        partner_aperture(32, grid32)


def _reflect_bruteforce(i, rows, cols):
    # reflect physical coordinates through the mask center and look the result up
    pts = [(r - (rows - 1) / 2, c - (cols - 1) / 2) for r in range(rows) for c in range(cols)]
    y, x = pts[i]
    return pts.index((-y, -x))


@pytest.mark.parametrize("rows, cols", [(4, 8), (5, 10), (2, 2), (3, 6)])
def test_partner_matches_point_reflection(rows, cols):
    grid = ApertureGrid(rows, cols)
    for i in range(grid.size):
        assert partner_aperture(i, grid) == _reflect_bruteforce(i, rows, cols)
        assert partner_aperture(partner_aperture(i, grid), grid) == i


def test_photon_apertures_are_disjoint_halves():
    spec = EncodingSpec(5, 2, ApertureGrid(5, 10))
    a, b = photon_apertures(spec, "A"), photon_apertures(spec, "B")
    assert sorted(a + b) == list(range(50))
    with pytest.raises(EncodingError):
        photon_apertures(spec, "C")


def test_spec_validation_and_roundtrip():
    with pytest.raises(EncodingError):
        EncodingSpec(1, 2)
    with pytest.raises(EncodingError):
        EncodingSpec(2, 0)
    with pytest.raises(EncodingError):
        EncodingSpec(2, 2, ApertureGrid(2, 2))
    with pytest.raises(EncodingError):
        ApertureGrid(2, 2, pitch_um=150, radius_um=100)
    spec = EncodingSpec(5, 2, ApertureGrid(5, 10))
    assert EncodingSpec.from_dict(spec.to_dict()) == spec


def test_digit_table_matches_scalar_route():
    spec = EncodingSpec(3, 3)
    table = digit_table(spec)
    for m in range(spec.M):
        assert tuple(table[m]) == index_to_digits(m, spec)


@given(st.integers(2, 6), st.integers(1, 4), st.data())
def test_roundtrip_property(d, n, data):
    spec = EncodingSpec(d, n)
    m = data.draw(st.integers(0, spec.M - 1))
    assert digits_to_index(index_to_digits(m, spec), spec) == m
    assert np.prod(spec.grid.rows * spec.grid.cols) == 2 * spec.M
