"""
Tests for field serialization.
"""

import json

import numpy as np
import pytest

from src.errors import ShapeError
from src.field_io import HEADER_DTYPE, MAGIC, from_bytes, from_json, load_field, save_field, to_bytes, to_json
from src.fourier_field import GridSpec, SpaceTimeSpectrum, SpatialSpectrum, random_spatial, random_spectrum


class TestBinaryLayout:
    """Header and payload of the binary form."""

    def test_header_is_packed(self):
        assert HEADER_DTYPE.itemsize == 25

    def test_length_and_header_fields(self, small_grid, rng):
        u = random_spectrum(small_grid, rng)
        data = to_bytes(u)
        assert len(data) == 25 + 16 * small_grid.size
        assert data[:4] == MAGIC
        assert data[4] == 1
        assert int.from_bytes(data[5:9], "little") == small_grid.K

    def test_spatial_kind(self, rng):
        u = random_spatial(1, 2, rng)
        data = to_bytes(u)
        assert data[4] == 2
        parsed = from_bytes(data)
        assert isinstance(parsed, SpatialSpectrum)
        np.testing.assert_array_equal(parsed.coeffs, u.coeffs)

    def test_space_time_keeps_the_window(self, rng):
        grid = GridSpec(K=1, M=1, J=2, T_w=3.5)
        u = random_spectrum(grid, rng)
        parsed = from_bytes(to_bytes(u))
        assert parsed.grid == grid
        np.testing.assert_array_equal(parsed.coeffs, u.coeffs)

    def test_save_and_load(self, tmp_path, small_grid, rng):
        u = random_spectrum(small_grid, rng)
        path = save_field(u, str(tmp_path / "fields" / "u.kptf"))
        np.testing.assert_array_equal(load_field(path).coeffs, u.coeffs)


class TestMalformedPayloads:
    """Payloads that do not describe a field."""

    def test_bad_magic(self, small_grid, rng):
        data = to_bytes(random_spectrum(small_grid, rng))
        with pytest.raises(ShapeError):
            from_bytes(b"XXXX" + data[4:])

    def test_truncated_body(self, small_grid, rng):
        data = to_bytes(random_spectrum(small_grid, rng))
        with pytest.raises(ShapeError):
            from_bytes(data[:-16])
        with pytest.raises(ShapeError):
            from_bytes(data[:10])

    def test_unknown_kind(self, small_grid, rng):
        data = bytearray(to_bytes(random_spectrum(small_grid, rng)))
        data[4] = 7
        with pytest.raises(ShapeError):
            from_bytes(bytes(data))


class TestJson:
    """Debug form listing nonzero modes."""

    def test_lists_nonzero_modes_only(self, small_grid):
        u = SpaceTimeSpectrum.from_modes(small_grid, {(1, 0, 2, -1): 2.0 - 1.0j, (-2, 1, 1, 0): 0.5})
        data = json.loads(to_json(u))
        assert data["kind"] == "space_time"
        assert sorted(data["modes"]) == [[-2, 1, 1, 0, 0.5, 0.0], [1, 0, 2, -1, 2.0, -1.0]]

    def test_parse(self):
        u = SpatialSpectrum.from_modes(2, 1, {(1, -1, 0): 1j})
        assert from_json(to_json(u)).mode(1, (-1, 0)) == 1j

    def test_unknown_kind(self):
        with pytest.raises(ShapeError):
            from_json(json.dumps({"kind": "other"}))
