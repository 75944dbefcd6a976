"""Dense node-embedding matrices and cosine kernels.

Storage is float32 row-major; all similarity accumulation happens in
float64.  The binary "EKGE" file is the contract with the offline
embedding extractor.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError

EMB_MAGIC = b"EKGE"
EMB_VERSION = 1


@dataclass(frozen=True)
class EmbeddingMatrix:
    data: np.ndarray  # (N, d) float32
    normalized: bool = False

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def _check_finite(data: np.ndarray, context: str) -> None:
    bad = ~np.isfinite(data)
    if bad.any():
        row = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise ValidationError(f"{context}: non-finite value at row {row}")


def matrix(data: np.ndarray, normalized: bool = False) -> EmbeddingMatrix:
    """Wrap an array as an EmbeddingMatrix, validating invariants."""
    data = np.ascontiguousarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValidationError(f"embedding matrix must be 2-D, got shape {data.shape}")
    _check_finite(data, "embedding matrix")
    if normalized:
        norms = np.linalg.norm(data.astype(np.float64), axis=1)
        off = np.abs(norms - 1.0) > 1e-5
        if off.any():
            row = int(np.argwhere(off)[0, 0])
            raise ValidationError(
                f"row {row} has L2 norm {norms[row]:.6g}, not unit under `normalized`"
            )
    return EmbeddingMatrix(data=data, normalized=normalized)


def normalize(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """L2-normalize every row.  Idempotent: a normalized matrix is returned as-is."""
    if m.normalized:
        return m
    norms = np.linalg.norm(m.data.astype(np.float64), axis=1)
    if (norms == 0.0).any():
        row = int(np.argwhere(norms == 0.0)[0, 0])
        raise ValidationError(f"cannot normalize: row {row} is all-zero")
    out = (m.data.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(data=out, normalized=True)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, accumulated in float64 and clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValidationError(f"cosine: dimension mismatch {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def random_init(rows: int, dim: int, seed: int, scale: float) -> EmbeddingMatrix:
    """Uniform [-scale, scale] entries from a PCG64 stream; deterministic."""
    if rows <= 0 or dim <= 0 or scale <= 0:
        raise ValidationError("random_init requires rows>0, dim>0, scale>0")
    rng = np.random.Generator(np.random.PCG64(seed))
    data = rng.uniform(-scale, scale, size=(rows, dim)).astype(np.float32)
    return EmbeddingMatrix(data=data, normalized=False)


def save_embeddings(m: EmbeddingMatrix, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<HII", EMB_VERSION, m.rows, m.dim))
        fh.write(np.ascontiguousarray(m.data, dtype="<f4").tobytes())


def load_embeddings(path: str, expected_rows: int | None = None) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head != EMB_MAGIC:
            raise FormatError(f"{path}: bad magic, not an embedding file")
        meta = fh.read(10)
        if len(meta) != 10:
            raise FormatError(f"{path}: truncated header")
        version, n, d = struct.unpack("<HII", meta)
        if version != EMB_VERSION:
            raise FormatError(f"{path}: unsupported embedding version {version}")
        if expected_rows is not None and n != expected_rows:
            raise FormatError(
                f"{path}: file declares {n} rows but {expected_rows} were expected"
            )
        buf = fh.read(4 * n * d)
        if len(buf) != 4 * n * d:
            raise FormatError(f"{path}: truncated data section")
    data = np.frombuffer(buf, dtype="<f4").reshape(n, d).copy()
    _check_finite(data, path)
    return EmbeddingMatrix(data=data, normalized=False)
