"""Synthetic clustered knowledge graphs for desk-scale experiments.

Head nodes come in clusters whose members share the same tails; the
embedding space mirrors the clusters, so entailed-node lists recover
cluster membership.  A fraction of heads per cluster is held out of the
train split (they appear only in valid/test), giving a controlled
inductive evaluation population.
"""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingMatrix, matrix, normalize
from .errors import ValidationError
from .graph import Graph, _with_inductive


def clustered_toy(
    num_clusters: int = 6,
    heads_per_cluster: int = 7,
    tails_per_cluster: int = 3,
    num_relations: int = 8,
    relations_per_cluster: int = 2,
    holdout_frac: float = 0.3,
    dim: int = 16,
    seed: int = 0,
    noise: float = 0.05,
    duplicate_holdout_embeddings: bool = False,
) -> tuple[Graph, EmbeddingMatrix]:
    """Build a clustered toy graph plus matching normalized embeddings.

    With duplicate_holdout_embeddings=True each held-out head copies the
    embedding of a distinct seen head from its cluster (requires at
    least as many seen heads as held-out heads per cluster).
    """
    if not (0 < holdout_frac < 1):
        raise ValidationError("holdout_frac must lie in (0, 1)")
    rng = np.random.default_rng(seed)

    node_texts: list[str] = []
    head_ids: list[list[int]] = []
    tail_ids: list[list[int]] = []
    for c in range(num_clusters):
        head_ids.append([])
        for m in range(heads_per_cluster):
            head_ids[c].append(len(node_texts))
            node_texts.append(f"cluster{c} head{m}")
    for c in range(num_clusters):
        tail_ids.append([])
        for j in range(tails_per_cluster):
            tail_ids[c].append(len(node_texts))
            node_texts.append(f"cluster{c} tail{j}")
    relation_texts = [f"rel{j}" for j in range(num_relations)]

    n_hold = max(1, int(round(holdout_frac * heads_per_cluster)))
    if duplicate_holdout_embeddings and heads_per_cluster - n_hold < n_hold:
        raise ValidationError("not enough seen heads to pair with held-out heads")

    train, valid, test = [], [], []
    holdout_heads: list[int] = []
    eval_flip = 0
    for c in range(num_clusters):
        rels = [(c + j) % num_relations for j in range(relations_per_cluster)]
        seen = head_ids[c][n_hold:]
        held = head_ids[c][:n_hold]
        holdout_heads.extend(held)
        for h in seen:
            for r in rels:
                for t in tail_ids[c]:
                    train.append((h, r, t))
        for h in held:
            for r in rels:
                for t in tail_ids[c]:
                    (valid if eval_flip % 2 == 0 else test).append((h, r, t))
                    eval_flip += 1

    g = Graph(
        node_texts=tuple(node_texts),
        relation_texts=tuple(relation_texts),
        train=np.array(train, dtype=np.int64),
        valid=np.array(valid, dtype=np.int64),
        test=np.array(test, dtype=np.int64),
    )
    g = _with_inductive(g)

    data = np.empty((len(node_texts), dim), dtype=np.float64)
    for c in range(num_clusters):
        center = rng.normal(size=dim)
        center /= np.linalg.norm(center)
        for h in head_ids[c]:
            data[h] = center + noise * rng.normal(size=dim)
        if duplicate_holdout_embeddings:
            seen = head_ids[c][n_hold:]
            for i, h in enumerate(head_ids[c][:n_hold]):
                data[h] = data[seen[i]]
    for c in range(num_clusters):
        for t in tail_ids[c]:
            vec = rng.normal(size=dim)
            data[t] = vec / np.linalg.norm(vec)
    emb = normalize(matrix(data.astype(np.float32)))
    return g, emb
