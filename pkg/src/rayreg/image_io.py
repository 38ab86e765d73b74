"""Image interchange: CSV of reals, raw RRM1 binary, and P5 PGM masks.

Formats are chosen for zero-dependency, bit-exact round trips:

* CSV: one image row per line, comma-separated ``repr`` floats (shortest
  exact decimal for float64).
* RRM1: 4-byte magic ``RRM1``, two little-endian uint32 (rows, cols),
  then rows*cols little-endian float64, row-major.
* PGM: binary P5, maxval 255, anomaly pixels written as 255.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = [
    "read_image",
    "read_image_csv",
    "write_image_csv",
    "read_image_rrm",
    "write_image_rrm",
    "write_mask_pgm",
    "read_mask_pgm",
    "write_mask_csv",
]

_MAGIC = b"RRM1"


def _check_2d(arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    return arr


def write_image_csv(arr, path) -> None:
    arr = _check_2d(arr)
    with open(path, "w", encoding="ascii") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_image_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: empty image")
    width = len(rows[0])
    for lineno, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ValueError(f"{path}: line {lineno} has {len(row)} values, expected {width}")
    return np.asarray(rows, dtype=np.float64)


def write_image_rrm(arr, path) -> None:
    arr = _check_2d(arr)
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_image_rrm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != _MAGIC:
        raise ValueError(f"{path}: not an RRM1 image (bad magic)")
    rows, cols = struct.unpack("<II", data[4:12])
    expected = 12 + rows * cols * 8
    if len(data) != expected:
        raise ValueError(f"{path}: truncated RRM1 image ({len(data)} bytes, expected {expected})")
    return np.frombuffer(data, dtype="<f8", offset=12).reshape(rows, cols).copy()


def read_image(path) -> np.ndarray:
    """Dispatch on extension: ``.csv`` text, anything else RRM1 binary."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image file not found: {path}")
    if path.suffix.lower() == ".csv":
        return read_image_csv(path)
    return read_image_rrm(path)


def write_mask_pgm(mask, path) -> None:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    rows, cols = mask.shape
    payload = np.where(mask.astype(bool), 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(payload.tobytes())


def read_mask_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary P5 PGM")
    cols, rows = (int(tok) for tok in parts[1].split())
    if parts[2] != b"255":
        raise ValueError(f"{path}: expected maxval 255")
    pixels = np.frombuffer(parts[3][: rows * cols], dtype=np.uint8).reshape(rows, cols)
    return pixels > 0


def write_mask_csv(mask, path) -> None:
    mask = np.asarray(mask).astype(int)
    with open(path, "w", encoding="ascii") as fh:
        for row in mask:
            fh.write(",".join(str(int(v)) for v in row))
            fh.write("\n")
