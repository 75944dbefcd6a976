"""Writer for the binary embedding interchange format.

Layout (little-endian): magic "EKGE", version u16, row count u32,
dimension u32, then rows of float32 values in row-major order.  This
file is the only contract with the downstream completion engine.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"EKGE"
VERSION = 1


def write_ekge(data: np.ndarray, path: str) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("embedding matrix contains non-finite values")
    rows, dim = data.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HII", VERSION, rows, dim))
        fh.write(data.tobytes())
