"""Exact top-k entailed-node lists and inductive coverage statistics.

The index stores, per node, its k_max most cosine-similar neighbors in
descending-score order with ties broken by ascending node id.  Search is
exact (blocked matrix products), never approximate, so results match a
naive double-loop oracle bit for bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import FormatError, ValidationError

INDEX_MAGIC = b"EKGI"
INDEX_VERSION = 1

_BLOCK = 1024


@dataclass(frozen=True)
class EntailIndex:
    k_max: int
    neighbor_ids: np.ndarray  # (N, k_max) int64
    scores: np.ndarray  # (N, k_max) float32

    @property
    def num_nodes(self) -> int:
        return self.neighbor_ids.shape[0]

    def top(self, node: int, k: int) -> np.ndarray:
        if k > self.k_max:
            raise ValidationError(f"k={k} exceeds index k_max={self.k_max}")
        return self.neighbor_ids[node, :k]


def build_index(
    emb: EmbeddingMatrix, k_max: int, restrict_to: set[int] | None = None
) -> EntailIndex:
    """Exact top-k_max cosine neighbors for every node.

    When restrict_to is given, neighbors are drawn only from that id set.
    The query node itself is always excluded from its own list.
    """
    if not emb.normalized:
        raise ValidationError("build_index requires a normalized embedding matrix")
    n = emb.rows
    if restrict_to is None:
        cand = np.arange(n, dtype=np.int64)
    else:
        cand = np.array(sorted(restrict_to), dtype=np.int64)
        if len(cand) and (cand[0] < 0 or cand[-1] >= n):
            raise ValidationError("restrict_to contains out-of-range node ids")
    if k_max < 1 or k_max >= len(cand):
        raise ValidationError(
            f"k_max={k_max} must be in [1, candidate count {len(cand)})"
        )

    cand_pos = {int(c): i for i, c in enumerate(cand)}
    cand_mat = emb.data[cand].astype(np.float64)

    ids = np.empty((n, k_max), dtype=np.int64)
    out_scores = np.empty((n, k_max), dtype=np.float32)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        sims = emb.data[start:stop].astype(np.float64) @ cand_mat.T
        np.clip(sims, -1.0, 1.0, out=sims)
        for row, node in enumerate(range(start, stop)):
            pos = cand_pos.get(node)
            if pos is not None:
                sims[row, pos] = -np.inf
        # candidates are in ascending-id column order, so a stable sort on
        # -score breaks ties by ascending node id
        order = np.argsort(-sims, axis=1, kind="stable")[:, :k_max]
        ids[start:stop] = cand[order]
        out_scores[start:stop] = np.take_along_axis(
            sims, order, axis=1
        ).astype(np.float32)
    return EntailIndex(k_max=k_max, neighbor_ids=ids, scores=out_scores)


def coverage_at_k(
    index: EntailIndex, train_nodes: set[int], eval_nodes: set[int], k: int
) -> float:
    """Percentage of eval nodes present in the top-k list of >=1 train node."""
    if not eval_nodes:
        raise ValidationError("coverage_at_k: empty eval node set")
    if k < 1 or k > index.k_max:
        raise ValidationError(f"k={k} out of range [1, k_max={index.k_max}]")
    train_list = np.array(sorted(train_nodes), dtype=np.int64)
    covered = set(np.unique(index.neighbor_ids[train_list, :k]).tolist())
    return 100.0 * len(eval_nodes & covered) / len(eval_nodes)


def truncate(index: EntailIndex, k: int) -> EntailIndex:
    """Restrict an index to its first k neighbors per node."""
    if k < 1 or k > index.k_max:
        raise ValidationError(f"cannot truncate to k={k} from k_max={index.k_max}")
    return EntailIndex(
        k_max=k,
        neighbor_ids=index.neighbor_ids[:, :k].copy(),
        scores=index.scores[:, :k].copy(),
    )


def save_index(index: EntailIndex, path: str) -> None:
    n = index.num_nodes
    pairs = np.empty((n, index.k_max), dtype=[("id", "<u4"), ("score", "<f4")])
    pairs["id"] = index.neighbor_ids
    pairs["score"] = index.scores
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<HIH", INDEX_VERSION, n, index.k_max))
        fh.write(pairs.tobytes())


def load_index(path: str) -> EntailIndex:
    with open(path, "rb") as fh:
        if fh.read(4) != INDEX_MAGIC:
            raise FormatError(f"{path}: bad magic, not an index file")
        meta = fh.read(8)
        if len(meta) != 8:
            raise FormatError(f"{path}: truncated header")
        version, n, k_max = struct.unpack("<HIH", meta)
        if version != INDEX_VERSION:
            raise FormatError(f"{path}: unsupported index version {version}")
        buf = fh.read(8 * n * k_max)
        if len(buf) != 8 * n * k_max:
            raise FormatError(f"{path}: truncated data section")
    pairs = np.frombuffer(buf, dtype=[("id", "<u4"), ("score", "<f4")]).reshape(n, k_max)
    return EntailIndex(
        k_max=k_max,
        neighbor_ids=pairs["id"].astype(np.int64),
        scores=pairs["score"].copy(),
    )
