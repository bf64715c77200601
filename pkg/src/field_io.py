"""
Field serialization.

Binary layout, little-endian throughout:

    magic   4 bytes  b"KPTF"
    kind    u1       1 = space-time spectrum, 2 = spatial spectrum
    K, M, J i4 each  (J = 0 for spatial data)
    T_w     f8       (0.0 for spatial data)
    coeffs  pairs of f8 (real, imag) in centred C order

The JSON debug form lists the nonzero modes only.
"""

import json
import logging
import os
from typing import Union

import numpy as np

from src.errors import ShapeError
from src.fourier_field import GridSpec, SpaceTimeSpectrum, SpatialSpectrum

logger = logging.getLogger(__name__)

MAGIC = b"KPTF"
KIND_SPACE_TIME = 1
KIND_SPATIAL = 2

HEADER_DTYPE = np.dtype(
    [("magic", "S4"), ("kind", "u1"), ("K", "<i4"), ("M", "<i4"), ("J", "<i4"), ("T_w", "<f8")]
)

Field = Union[SpaceTimeSpectrum, SpatialSpectrum]


def _header(u: Field) -> np.ndarray:
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    if isinstance(u, SpaceTimeSpectrum):
        header["kind"] = KIND_SPACE_TIME
        header["K"], header["M"], header["J"] = u.grid.K, u.grid.M, u.grid.J
        header["T_w"] = u.grid.T_w
    else:
        header["kind"] = KIND_SPATIAL
        header["K"], header["M"] = u.K, u.M
    return header


def to_bytes(u: Field) -> bytes:
    """Serialize a spectrum to the binary layout."""
    body = np.ascontiguousarray(u.coeffs, dtype="<c16")
    return _header(u).tobytes() + body.tobytes()


def from_bytes(data: bytes) -> Field:
    """
    Parse the binary layout.

    Raises:
        ShapeError: On a bad magic number, unknown kind or truncated payload
    """
    if len(data) < HEADER_DTYPE.itemsize:
        raise ShapeError("field payload shorter than its header")
    header = np.frombuffer(data[: HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]
    if bytes(header["magic"]) != MAGIC:
        raise ShapeError(f"bad field magic {bytes(header['magic'])!r}")
    kind = int(header["kind"])
    K, M, J = int(header["K"]), int(header["M"]), int(header["J"])
    if kind == KIND_SPACE_TIME:
        shape = (2 * K + 1, 2 * M + 1, 2 * M + 1, 2 * J + 1)
    elif kind == KIND_SPATIAL:
        shape = (2 * K + 1, 2 * M + 1, 2 * M + 1)
    else:
        raise ShapeError(f"unknown field kind {kind}")
    body = data[HEADER_DTYPE.itemsize:]
    expected = int(np.prod(shape)) * 16
    if len(body) != expected:
        raise ShapeError(f"field body has {len(body)} bytes, expected {expected}")
    coeffs = np.frombuffer(body, dtype="<c16").reshape(shape)
    if kind == KIND_SPACE_TIME:
        return SpaceTimeSpectrum(GridSpec(K=K, M=M, J=J, T_w=float(header["T_w"])), coeffs)
    return SpatialSpectrum(K, M, coeffs)


def save_field(u: Field, path: str) -> str:
    """Write the binary form to path and return the path."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(to_bytes(u))
    logger.debug(f"Saved field to {path}")
    return path


def load_field(path: str) -> Field:
    with open(path, "rb") as f:
        return from_bytes(f.read())


def to_json(u: Field) -> str:
    """JSON debug form: bounds plus the nonzero modes as [index..., re, im] rows."""
    if isinstance(u, SpaceTimeSpectrum):
        bounds = {"kind": "space_time", "K": u.grid.K, "M": u.grid.M, "J": u.grid.J, "T_w": u.grid.T_w}
        offsets = (u.grid.K, u.grid.M, u.grid.M, u.grid.J)
    else:
        bounds = {"kind": "spatial", "K": u.K, "M": u.M}
        offsets = (u.K, u.M, u.M)
    modes = []
    for index in zip(*np.nonzero(u.coeffs)):
        value = complex(u.coeffs[index])
        modes.append([int(i) - o for i, o in zip(index, offsets)] + [value.real, value.imag])
    return json.dumps({**bounds, "modes": modes}, indent=2, sort_keys=True)


def from_json(text: str) -> Field:
    """Parse the JSON debug form."""
    data = json.loads(text)
    if data["kind"] == "space_time":
        grid = GridSpec(K=data["K"], M=data["M"], J=data["J"], T_w=data["T_w"])
        modes = {tuple(row[:4]): complex(row[4], row[5]) for row in data["modes"]}
        return SpaceTimeSpectrum.from_modes(grid, modes)
    if data["kind"] == "spatial":
        modes = {tuple(row[:3]): complex(row[3], row[4]) for row in data["modes"]}
        return SpatialSpectrum.from_modes(data["K"], data["M"], modes)
    raise ShapeError(f"unknown field kind {data['kind']!r}")
