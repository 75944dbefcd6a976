"""Training objectives: KvsAll BCE, synthetic-triplet BCE, entity contrast.

All losses return float64 scalars together with exact gradients.  BCE is
always evaluated in log-space from logits so saturated predictions stay
finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import decoder
from .decoder import DecoderParams, Gradients, Tape
from .entail import EntailIndex
from .errors import ValidationError
from .graph import Graph


@dataclass(frozen=True)
class LossConfig:
    gamma1: float = 0.0
    gamma2: float = 0.0
    temperature: float = 0.07
    k1: int = 5
    k2: int = 10
    sim: str = "cosine"  # cosine | dot
    label_smoothing: float = 0.0

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValidationError("loss weights must be non-negative")
        if self.temperature <= 0:
            raise ValidationError("temperature must be positive")
        if self.sim not in ("cosine", "dot"):
            raise ValidationError(f"unknown similarity {self.sim!r}")
        if self.gamma1 > 0 and self.k1 < 1:
            raise ValidationError("k1 must be >= 1 when the synthetic loss is enabled")
        if self.gamma2 > 0 and self.k2 < 1:
            raise ValidationError("k2 must be >= 1 when the contrast loss is enabled")


class TrainQueries:
    """Deduplicated (head, relation) groups of the train split with inverses,
    and their multi-hot tail labels."""

    def __init__(self, g: Graph):
        self.num_nodes = g.num_nodes
        trips = g.with_inverses(g.train)
        tails: dict[tuple[int, int], list[int]] = {}
        for h, r, t in trips:
            tails.setdefault((int(h), int(r)), []).append(int(t))
        self.groups: list[tuple[int, int]] = sorted(tails)
        self._tails = {q: np.array(sorted(set(v)), dtype=np.int64) for q, v in tails.items()}

    def tails(self, head: int, relation: int) -> np.ndarray:
        return self._tails[(head, relation)]

    def labels(self, head: int, relation: int) -> np.ndarray:
        vec = np.zeros(self.num_nodes, dtype=np.float64)
        vec[self._tails[(head, relation)]] = 1.0
        return vec


def make_labels(g: Graph, head: int, relation: int) -> np.ndarray:
    """Multi-hot vector over entities of all train tails of (head, relation)."""
    return TrainQueries(g).labels(head, relation)


def kvsall_bce(
    values: np.ndarray, labels: np.ndarray, from_logits: bool = True
) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy over all entities.

    Returns (loss, gradient w.r.t. logits).  With from_logits=False the
    values are taken as probabilities and converted internally.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if values.shape != labels.shape:
        raise ValidationError(f"shape mismatch {values.shape} vs {labels.shape}")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ValidationError("labels must be binary")
    if from_logits:
        logits = values
    else:
        if ((values <= 0.0) | (values >= 1.0)).any():
            raise ValidationError("probabilities must lie strictly inside (0, 1)")
        logits = np.log(values) - np.log1p(-values)
    n = logits.shape[0]
    # -(t log p + (1-t) log(1-p)) == softplus(logit) - t * logit
    loss = float(np.sum(np.logaddexp(0.0, logits) - labels * logits) / n)
    grad = (decoder.sigmoid(logits) - labels) / n
    return loss, grad


def original_loss(
    params: DecoderParams,
    queries: TrainQueries,
    batch: list[tuple[int, int]],
    label_smoothing: float = 0.0,
) -> tuple[float, Gradients, list[Tape]]:
    """KvsAll BCE over a batch of original (head, relation) groups."""
    return _kvsall_batch(params, [(h, r, h, r) for h, r in batch], queries, label_smoothing)


def synthetic_loss(
    params: DecoderParams,
    queries: TrainQueries,
    index: EntailIndex,
    batch: list[tuple[int, int]],
    k1: int,
    rng: np.random.Generator,
    label_smoothing: float = 0.0,
) -> tuple[float, Gradients, list[int]]:
    """BCE of entailed-head rewrites scored against the ORIGINAL labels.

    For each (h, r) a substitute head is drawn uniformly from h's top-k1
    entailed list; the label vector stays that of (h, r).  The synthetic
    triplets never enter the train set.
    """
    if k1 > index.k_max:
        raise ValidationError(f"k1={k1} exceeds index k_max={index.k_max}")
    if k1 < 1:
        raise ValidationError("k1 must be >= 1")
    sampled = []
    jobs = []
    for h, r in batch:
        h_sub = int(index.neighbor_ids[h, rng.integers(k1)])
        sampled.append(h_sub)
        jobs.append((h_sub, r, h, r))
    loss, grads, _ = _kvsall_batch(params, jobs, queries, label_smoothing)
    return loss, grads, sampled


def _kvsall_batch(params, jobs, queries: TrainQueries, label_smoothing: float = 0.0):
    """Average KvsAll BCE over (score_head, score_rel, label_head, label_rel)."""
    total = 0.0
    grads = decoder.zero_gradients(params)
    tapes = []
    for score_h, score_r, label_h, label_r in jobs:
        logits, tape = decoder.forward(params, score_h, score_r, want_tape=True)
        labels = queries.labels(label_h, label_r)
        if label_smoothing > 0.0:
            targets = labels * (1.0 - label_smoothing) + 0.5 * label_smoothing
            n = logits.shape[0]
            loss = float(np.sum(np.logaddexp(0.0, logits) - targets * logits) / n)
            grad_logits = (decoder.sigmoid(logits) - targets) / n
        else:
            loss, grad_logits = kvsall_bce(logits, labels)
        total += loss
        grads.add_(decoder.backward_logits(tape, grad_logits))
        tapes.append(tape)
    b = max(len(jobs), 1)
    grads.scale_(1.0 / b)
    return total / b, grads, tapes


def entity_contrast(
    entity_table: np.ndarray,
    batch_heads: list[int],
    index: EntailIndex,
    k2: int,
    temperature: float,
    rng: np.random.Generator,
    sim: str = "cosine",
) -> tuple[float, np.ndarray, list[int]]:
    """In-batch InfoNCE over (head, sampled entailed head) pairs.

    Positives of the other batch members serve as negatives.  Returns
    (loss, dense entity-table gradient, sampled positives).
    """
    length = len(batch_heads)
    if length < 2:
        raise ValidationError("entity contrast needs a batch of at least 2 heads")
    if k2 > index.k_max:
        raise ValidationError(f"k2={k2} exceeds index k_max={index.k_max}")
    if temperature <= 0:
        raise ValidationError("temperature must be positive")
    positives = [int(index.neighbor_ids[h, rng.integers(k2)]) for h in batch_heads]

    table = np.asarray(entity_table, dtype=np.float64)
    heads = np.array(batch_heads, dtype=np.int64)
    pos = np.array(positives, dtype=np.int64)
    a = table[heads]  # (L, d)
    b = table[pos]

    if sim == "cosine":
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        if (na == 0).any() or (nb == 0).any():
            raise ValidationError("cosine contrast undefined for zero entity rows")
        an = a / na[:, None]
        bn = b / nb[:, None]
        sims = an @ bn.T  # (L, L)
    elif sim == "dot":
        sims = a @ b.T
    else:
        raise ValidationError(f"unknown similarity {sim!r}")

    logits = sims / temperature
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    softmax = expl / expl.sum(axis=1, keepdims=True)
    loss = float(-np.mean(np.log(softmax[np.arange(length), np.arange(length)])))

    d_sims = softmax.copy()
    d_sims[np.arange(length), np.arange(length)] -= 1.0
    d_sims /= length * temperature  # (L, L) = d loss / d sims

    grad = np.zeros_like(table)
    if sim == "dot":
        da = d_sims @ b  # (L, d)
        db = d_sims.T @ a
    else:
        # c_ij = an_i . bn_j; dc/da_i = (bn_j - c_ij an_i) / |a_i|
        da = (d_sims @ bn - (d_sims * sims).sum(axis=1)[:, None] * an) / na[:, None]
        db = (d_sims.T @ an - (d_sims * sims).sum(axis=0)[:, None] * bn) / nb[:, None]
    np.add.at(grad, heads, da)
    np.add.at(grad, pos, db)
    return loss, grad, positives


def combined_loss(l1: float, l2: float, lc: float, cfg: LossConfig) -> float:
    """Weighted sum of the three objectives."""
    for name, value in (("original", l1), ("synthetic", l2), ("contrast", lc)):
        if not np.isfinite(value):
            raise ValidationError(f"{name} loss component is not finite: {value}")
    return l1 + cfg.gamma1 * l2 + cfg.gamma2 * lc
