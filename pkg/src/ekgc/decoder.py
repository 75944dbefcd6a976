"""Convolutional triplet scorer with hand-written forward and backward.

A (head, relation) query stacks the head and relation embeddings, runs K
1-D kernels of width W over them (zero right-padding keeps the output
length at d), flattens, projects back to d with a ReLU in between, and
dot-products against every entity row.  Scores are the sigmoid of those
logits.

Parameters live in float32; all forward/backward arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .embeddings import EmbeddingMatrix, random_init
from .errors import ValidationError


@dataclass
class DecoderParams:
    entity: np.ndarray  # (N, d) float32
    relation: np.ndarray  # (num_relations, d) float32
    kernels: np.ndarray  # (K, 2, W) float32, [:, 0] over head, [:, 1] over relation
    projection: np.ndarray  # (K*d, d) float32

    @property
    def num_entities(self) -> int:
        return self.entity.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation.shape[0]

    @property
    def dim(self) -> int:
        return self.entity.shape[1]

    @property
    def num_kernels(self) -> int:
        return self.kernels.shape[0]

    @property
    def kernel_width(self) -> int:
        return self.kernels.shape[2]

    def parameter_count(self) -> int:
        return (
            self.entity.size + self.relation.size + self.kernels.size + self.projection.size
        )

    def copy(self) -> "DecoderParams":
        return DecoderParams(
            entity=self.entity.copy(),
            relation=self.relation.copy(),
            kernels=self.kernels.copy(),
            projection=self.projection.copy(),
        )


@dataclass
class Gradients:
    """Dense float64 gradients mirroring DecoderParams shapes."""

    entity: np.ndarray
    relation: np.ndarray
    kernels: np.ndarray
    projection: np.ndarray

    def add_(self, other: "Gradients", weight: float = 1.0) -> None:
        self.entity += weight * other.entity
        self.relation += weight * other.relation
        self.kernels += weight * other.kernels
        self.projection += weight * other.projection

    def scale_(self, s: float) -> None:
        self.entity *= s
        self.relation *= s
        self.kernels *= s
        self.projection *= s


def zero_gradients(params: DecoderParams) -> Gradients:
    return Gradients(
        entity=np.zeros(params.entity.shape, dtype=np.float64),
        relation=np.zeros(params.relation.shape, dtype=np.float64),
        kernels=np.zeros(params.kernels.shape, dtype=np.float64),
        projection=np.zeros(params.projection.shape, dtype=np.float64),
    )


@dataclass
class Tape:
    """Forward activations cached for one (head, relation) query."""

    head: int
    relation: int
    e_h: np.ndarray  # (d,) float64
    e_r: np.ndarray
    windows_h: np.ndarray  # (d, W) sliding windows of padded e_h
    windows_r: np.ndarray
    feature: np.ndarray  # (K, d) kernel outputs
    pre_activation: np.ndarray  # (d,) before ReLU
    hidden: np.ndarray  # (d,) after ReLU
    logits: np.ndarray  # (N,)
    entity64: np.ndarray = field(repr=False)  # (N, d) float64 copy of entity table
    projection64: np.ndarray = field(repr=False)  # (K*d, d) float64
    kernels64: np.ndarray = field(repr=False)  # (K, 2, W) float64
    num_relations: int = 0


def init_params(
    num_entities: int,
    num_relations: int,
    dim: int,
    num_kernels: int,
    kernel_width: int,
    seed: int,
    entity_init: EmbeddingMatrix | None = None,
    init_scale: float = 0.1,
) -> DecoderParams:
    """Fresh trainable parameters.

    The entity table copies `entity_init` when given (pretrained context
    embeddings), otherwise falls back to uniform random; relation table,
    kernels and projection are always random with derived seeds.
    """
    if entity_init is not None:
        if entity_init.rows != num_entities or entity_init.dim != dim:
            raise ValidationError(
                f"entity init shape {entity_init.rows}x{entity_init.dim} does not "
                f"match {num_entities}x{dim}"
            )
        entity = entity_init.data.copy()
    else:
        entity = random_init(num_entities, dim, seed=seed, scale=init_scale).data
    relation = random_init(num_relations, dim, seed=seed + 1, scale=init_scale).data
    kern = random_init(num_kernels, 2 * kernel_width, seed=seed + 2, scale=init_scale)
    kernels = kern.data.reshape(num_kernels, 2, kernel_width).copy()
    proj = random_init(num_kernels * dim, dim, seed=seed + 3, scale=init_scale).data
    return DecoderParams(entity=entity, relation=relation, kernels=kernels, projection=proj)


def _pad_windows(vec: np.ndarray, width: int) -> np.ndarray:
    padded = np.zeros(vec.shape[0] + width - 1, dtype=np.float64)
    padded[: vec.shape[0]] = vec
    return sliding_window_view(padded, width)


def conv_feature(params: DecoderParams, head: int, relation: int) -> np.ndarray:
    """K x d kernel-output matrix for one query (float64)."""
    e_h = params.entity[head].astype(np.float64)
    e_r = params.relation[relation].astype(np.float64)
    return _conv(params.kernels.astype(np.float64), e_h, e_r)[0]


def _conv(kernels64: np.ndarray, e_h: np.ndarray, e_r: np.ndarray):
    w = kernels64.shape[2]
    wins_h = _pad_windows(e_h, w)  # (d, W)
    wins_r = _pad_windows(e_r, w)
    # feature[i, n] = sum_tau w[i,0,tau] e_h[n+tau] + w[i,1,tau] e_r[n+tau]
    feature = wins_h @ kernels64[:, 0, :].T + wins_r @ kernels64[:, 1, :].T  # (d, K)
    return feature.T.copy(), wins_h, wins_r


def forward(
    params: DecoderParams, head: int, relation: int, want_tape: bool = False
) -> tuple[np.ndarray, Tape | None]:
    """Logits against every entity; optionally a tape for backward."""
    if not (0 <= head < params.num_entities):
        raise ValidationError(f"head id {head} out of range")
    if not (0 <= relation < params.num_relations):
        raise ValidationError(f"relation id {relation} out of range")
    e_h = params.entity[head].astype(np.float64)
    e_r = params.relation[relation].astype(np.float64)
    kernels64 = params.kernels.astype(np.float64)
    feature, wins_h, wins_r = _conv(kernels64, e_h, e_r)
    projection64 = params.projection.astype(np.float64)
    pre = feature.reshape(-1) @ projection64  # (d,)
    hidden = np.maximum(pre, 0.0)
    entity64 = params.entity.astype(np.float64)
    logits = entity64 @ hidden  # (N,)
    tape = None
    if want_tape:
        tape = Tape(
            head=head,
            relation=relation,
            e_h=e_h,
            e_r=e_r,
            windows_h=wins_h,
            windows_r=wins_r,
            feature=feature,
            pre_activation=pre,
            hidden=hidden,
            logits=logits,
            entity64=entity64,
            projection64=projection64,
            kernels64=kernels64,
            num_relations=params.num_relations,
        )
    return logits, tape


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def score_all(
    params: DecoderParams, head: int, relation: int, want_tape: bool = False
) -> tuple[np.ndarray, Tape | None]:
    """Sigmoid scores against every entity (each strictly inside (0, 1))."""
    logits, tape = forward(params, head, relation, want_tape=want_tape)
    return sigmoid(logits), tape


def backward_logits(tape: Tape, grad_logits: np.ndarray) -> Gradients:
    """Exact gradients of a scalar loss given d(loss)/d(logits)."""
    grad_logits = np.asarray(grad_logits, dtype=np.float64)
    if grad_logits.shape != tape.logits.shape:
        raise ValidationError(
            f"upstream shape {grad_logits.shape} does not match logits {tape.logits.shape}"
        )
    n, d = tape.entity64.shape
    k = tape.feature.shape[0]
    w = tape.windows_h.shape[1]

    # logits = entity64 @ hidden: every entity row is a tail candidate
    grad_entity = np.outer(grad_logits, tape.hidden)
    d_hidden = tape.entity64.T @ grad_logits
    # hidden = relu(pre); subgradient 0 at the kink
    d_pre = d_hidden * (tape.pre_activation > 0.0)
    # pre = vec(feature) @ projection
    grad_projection = np.outer(tape.feature.reshape(-1), d_pre)
    d_feature = (tape.projection64 @ d_pre).reshape(k, d)
    # feature[i, n] = windows_h[n] . w[i,0] + windows_r[n] . w[i,1]
    grad_kernels = np.empty((k, 2, w), dtype=np.float64)
    grad_kernels[:, 0, :] = d_feature @ tape.windows_h
    grad_kernels[:, 1, :] = d_feature @ tape.windows_r

    d_eh, d_er = _backprop_embeddings(tape, d_feature)
    grad_entity[tape.head] += d_eh
    grad_relation = np.zeros((tape.num_relations, d), dtype=np.float64)
    grad_relation[tape.relation] = d_er
    return Gradients(
        entity=grad_entity,
        relation=grad_relation,
        kernels=grad_kernels,
        projection=grad_projection,
    )


def _backprop_embeddings(tape: Tape, d_feature: np.ndarray):
    """Gradient of the kernel outputs w.r.t. e_h and e_r (zero right-pad)."""
    d = tape.e_h.shape[0]
    w = tape.windows_h.shape[1]
    # d e_pad[n+tau] += sum_i d_feature[i, n] * w[i, ch, tau]
    k0 = tape.kernels64[:, 0, :]
    k1 = tape.kernels64[:, 1, :]
    u_h = d_feature.T @ k0  # (d, W)
    u_r = d_feature.T @ k1
    d_eh_pad = np.zeros(d + w - 1, dtype=np.float64)
    d_er_pad = np.zeros(d + w - 1, dtype=np.float64)
    for tau in range(w):
        d_eh_pad[tau : tau + d] += u_h[:, tau]
        d_er_pad[tau : tau + d] += u_r[:, tau]
    return d_eh_pad[:d], d_er_pad[:d]


def backward(tape: Tape, upstream: np.ndarray) -> Gradients:
    """Gradients given d(loss)/d(scores), scores being the sigmoid outputs."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != tape.logits.shape:
        raise ValidationError(
            f"upstream shape {upstream.shape} does not match scores {tape.logits.shape}"
        )
    s = sigmoid(tape.logits)
    return backward_logits(tape, upstream * s * (1.0 - s))
