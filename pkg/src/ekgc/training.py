"""Adam optimization, the alternating training schedule, and checkpoints.

Every source of randomness in an epoch is a pure function of
(seed, epoch index), so interrupted runs resume bit-for-bit from a
checkpoint and two runs with the same seed are identical.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from . import decoder, losses
from .config import TrainConfig
from .decoder import DecoderParams, Gradients
from .entail import EntailIndex
from .errors import FormatError, ValidationError
from .graph import Graph
from .losses import TrainQueries

CKPT_MAGIC = b"EKGC-CKPT"
CKPT_VERSION = 1

_TENSORS = ("entity", "relation", "kernels", "projection")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: dict[str, int]

    @classmethod
    def fresh(cls, params: DecoderParams) -> "AdamState":
        return cls(
            m={n: np.zeros(getattr(params, n).shape, dtype=np.float64) for n in _TENSORS},
            v={n: np.zeros(getattr(params, n).shape, dtype=np.float64) for n in _TENSORS},
            t={n: 0 for n in _TENSORS},
        )


def adam_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> np.ndarray:
    """One bias-corrected Adam step on a single tensor (in-place moments).

    `t` is the step count AFTER this update (>= 1).  Returns the updated
    parameter values in the parameter's dtype.
    """
    if param.shape != grad.shape:
        raise ValidationError(f"shape mismatch {param.shape} vs {grad.shape}")
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * np.square(grad)
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    step = lr * m_hat / (np.sqrt(v_hat) + eps)
    return (param.astype(np.float64) - step).astype(param.dtype)


def adam_step(
    params: DecoderParams,
    grads: Gradients,
    state: AdamState,
    cfg: TrainConfig,
    tensors: tuple[str, ...] = _TENSORS,
) -> None:
    """Apply Adam to the named tensors in place.

    Entity rows use sparse-touch semantics: rows with an all-zero
    gradient keep their moments and values untouched.
    """
    for name in tensors:
        param = getattr(params, name)
        grad = getattr(grads, name)
        if param.shape != grad.shape:
            raise ValidationError(f"{name}: shape mismatch {param.shape} vs {grad.shape}")
        state.t[name] += 1
        t = state.t[name]
        if name == "entity":
            rows = np.flatnonzero(np.any(grad != 0.0, axis=1))
            if len(rows) == 0:
                continue
            m_rows = state.m[name][rows]
            v_rows = state.v[name][rows]
            param[rows] = adam_update(
                param[rows], grad[rows], m_rows, v_rows,
                t, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon,
            )
            state.m[name][rows] = m_rows
            state.v[name][rows] = v_rows
        else:
            param[...] = adam_update(
                param, grad, state.m[name], state.v[name],
                t, cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon,
            )


def _clip_gradients(grads: Gradients, max_norm: float) -> None:
    total = 0.0
    for name in _TENSORS:
        g = getattr(grads, name)
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > max_norm > 0:
        grads.scale_(max_norm / norm)


def _epoch_rngs(seed: int, epoch: int):
    shuffle = np.random.default_rng([seed, epoch, 0])
    entail = np.random.default_rng([seed, epoch, 1])
    return shuffle, entail


def _batches(groups: list[tuple[int, int]], order: np.ndarray, batch_size: int):
    for start in range(0, len(order), batch_size):
        yield [groups[i] for i in order[start : start + batch_size]]


def train_epoch(
    g: Graph,
    params: DecoderParams,
    index: EntailIndex | None,
    cfg: TrainConfig,
    state: AdamState,
    epoch: int,
    queries: TrainQueries | None = None,
) -> dict[str, float]:
    """One pass over the shuffled (head, relation) groups.

    Under the alternating schedule a triplet step (all parameters,
    l1 + gamma1*l2) is followed by a contrast step (entity table only,
    gamma2*lc).  With gamma2 = 0 only triplet steps run.
    """
    loss_cfg = cfg.loss
    if (loss_cfg.gamma1 > 0 or loss_cfg.gamma2 > 0) and index is None:
        raise ValidationError("entailment index required when gamma1>0 or gamma2>0")
    if queries is None:
        queries = TrainQueries(g)
    rng_shuffle, rng_entail = _epoch_rngs(cfg.seed, epoch)
    order = rng_shuffle.permutation(len(queries.groups))

    sums = {"l1": 0.0, "l2": 0.0, "lc": 0.0}
    counts = {"l1": 0, "l2": 0, "lc": 0}
    contrast_this_epoch = loss_cfg.gamma2 > 0 and (
        cfg.schedule != "alternating_epoch" or epoch % 2 == 1
    )
    triplet_this_epoch = cfg.schedule != "alternating_epoch" or epoch % 2 == 0

    for batch in _batches(queries.groups, order, cfg.batch_size):
        if triplet_this_epoch:
            l1, grads, _ = losses.original_loss(
                params, queries, batch, loss_cfg.label_smoothing
            )
            sums["l1"] += l1
            counts["l1"] += 1
            if loss_cfg.gamma1 > 0:
                l2, grads2, _ = losses.synthetic_loss(
                    params, queries, index, batch, loss_cfg.k1, rng_entail,
                    loss_cfg.label_smoothing,
                )
                grads.add_(grads2, weight=loss_cfg.gamma1)
                sums["l2"] += l2
                counts["l2"] += 1
            if cfg.schedule == "joint" and contrast_this_epoch and len(batch) >= 2:
                lc, grad_entity, _ = _contrast(params, index, batch, loss_cfg, rng_entail)
                grads.entity += loss_cfg.gamma2 * grad_entity
                sums["lc"] += lc
                counts["lc"] += 1
            if cfg.grad_clip > 0:
                _clip_gradients(grads, cfg.grad_clip)
            adam_step(params, grads, state, cfg)
        if cfg.schedule != "joint" and contrast_this_epoch and len(batch) >= 2:
            lc, grad_entity, _ = _contrast(params, index, batch, loss_cfg, rng_entail)
            cgrads = decoder.zero_gradients(params)
            cgrads.entity += loss_cfg.gamma2 * grad_entity
            if cfg.grad_clip > 0:
                _clip_gradients(cgrads, cfg.grad_clip)
            adam_step(params, cgrads, state, cfg, tensors=("entity",))
            sums["lc"] += lc
            counts["lc"] += 1

    out = {k: (sums[k] / counts[k] if counts[k] else 0.0) for k in sums}
    out["combined"] = losses.combined_loss(out["l1"], out["l2"], out["lc"], loss_cfg)
    return out


def _contrast(params, index, batch, loss_cfg, rng_entail):
    heads = [h for h, _ in batch]
    return losses.entity_contrast(
        params.entity, heads, index, loss_cfg.k2, loss_cfg.temperature,
        rng_entail, loss_cfg.sim,
    )


def baseline_epoch(
    g: Graph,
    params: DecoderParams,
    cfg: TrainConfig,
    state: AdamState,
    epoch: int,
    queries: TrainQueries | None = None,
) -> dict[str, float]:
    """Plain KvsAll training pass: no entailment machinery at all.

    Kept as an independent code path; with gamma1 = gamma2 = 0,
    train_epoch must match it bitwise.
    """
    if queries is None:
        queries = TrainQueries(g)
    rng_shuffle, _ = _epoch_rngs(cfg.seed, epoch)
    order = rng_shuffle.permutation(len(queries.groups))
    total = 0.0
    steps = 0
    for batch in _batches(queries.groups, order, cfg.batch_size):
        l1, grads, _ = losses.original_loss(params, queries, batch, cfg.loss.label_smoothing)
        if cfg.grad_clip > 0:
            _clip_gradients(grads, cfg.grad_clip)
        adam_step(params, grads, state, cfg)
        total += l1
        steps += 1
    avg = total / max(steps, 1)
    return {"l1": avg, "l2": 0.0, "lc": 0.0, "combined": avg}


def save_checkpoint(
    path: str,
    params: DecoderParams,
    state: AdamState,
    epoch: int,
    seed: int,
    with_optimizer: bool = True,
) -> None:
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<H", CKPT_VERSION))
        fh.write(
            struct.pack(
                "<IIIIIIq",
                params.num_entities,
                params.num_relations,
                params.dim,
                params.num_kernels,
                params.kernel_width,
                epoch,
                seed,
            )
        )
        for name in _TENSORS:
            fh.write(np.ascontiguousarray(getattr(params, name), dtype="<f4").tobytes())
        fh.write(struct.pack("<B", 1 if with_optimizer else 0))
        if with_optimizer:
            for name in _TENSORS:
                fh.write(struct.pack("<q", state.t[name]))
                fh.write(np.ascontiguousarray(state.m[name], dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(state.v[name], dtype="<f8").tobytes())


def _read(fh, n: int, what: str) -> bytes:
    b = fh.read(n)
    if len(b) != n:
        raise FormatError(f"truncated checkpoint while reading {what}")
    return b


def load_checkpoint(
    path: str, expected_entities: int | None = None
) -> tuple[DecoderParams, AdamState, int, int]:
    """Returns (params, adam state, epoch, seed)."""
    with open(path, "rb") as fh:
        if _read(fh, len(CKPT_MAGIC), "magic") != CKPT_MAGIC:
            raise FormatError(f"{path}: bad magic, not a checkpoint")
        (version,) = struct.unpack("<H", _read(fh, 2, "version"))
        if version != CKPT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        n, r, d, k, w, epoch, seed = struct.unpack("<IIIIIIq", _read(fh, 32, "header"))
        if expected_entities is not None and n != expected_entities:
            raise FormatError(
                f"{path}: checkpoint holds {n} entities, graph has {expected_entities}"
            )
        shapes = {
            "entity": (n, d),
            "relation": (r, d),
            "kernels": (k, 2, w),
            "projection": (k * d, d),
        }
        tensors = {}
        for name in _TENSORS:
            count = int(np.prod(shapes[name]))
            buf = _read(fh, 4 * count, name)
            tensors[name] = (
                np.frombuffer(buf, dtype="<f4").astype(np.float32).reshape(shapes[name]).copy()
            )
        params = DecoderParams(**tensors)
        state = AdamState.fresh(params)
        (has_opt,) = struct.unpack("<B", _read(fh, 1, "optimizer flag"))
        if has_opt:
            for name in _TENSORS:
                (state.t[name],) = struct.unpack("<q", _read(fh, 8, f"{name} step"))
                count = int(np.prod(shapes[name]))
                state.m[name] = (
                    np.frombuffer(_read(fh, 8 * count, f"{name} m"), dtype="<f8")
                    .reshape(shapes[name]).copy()
                )
                state.v[name] = (
                    np.frombuffer(_read(fh, 8 * count, f"{name} v"), dtype="<f8")
                    .reshape(shapes[name]).copy()
                )
    return params, state, epoch, seed


def run_training(
    g: Graph,
    cfg: TrainConfig,
    run_dir: str,
    index: EntailIndex | None = None,
    entity_init=None,
    resume: bool = False,
    evaluator=None,
    log_fn=print,
) -> tuple[DecoderParams, list[dict]]:
    """Train with per-epoch metrics JSONL, checkpointing and early stopping.

    `evaluator(params) -> float` is called every cfg.eval_every epochs
    (validation MRR); training stops after cfg.patience evaluations
    without improvement.
    """
    os.makedirs(run_dir, exist_ok=True)
    ckpt_path = os.path.join(run_dir, "checkpoint.ckpt")
    best_path = os.path.join(run_dir, "best.ckpt")
    metrics_path = os.path.join(run_dir, "metrics.jsonl")

    queries = TrainQueries(g)
    if resume:
        params, state, next_epoch, seed = load_checkpoint(ckpt_path, g.num_nodes)
        if seed != cfg.seed:
            raise ValidationError(
                f"checkpoint seed {seed} does not match configured seed {cfg.seed}"
            )
    else:
        params = decoder.init_params(
            g.num_nodes, g.num_relations, cfg.dim, cfg.kernels, cfg.kernel_width,
            seed=cfg.seed, entity_init=entity_init, init_scale=cfg.init_scale,
        )
        state = AdamState.fresh(params)
        next_epoch = 0
        for stale in (metrics_path,):
            if os.path.exists(stale):
                os.remove(stale)

    history: list[dict] = []
    best_metric = -np.inf
    evals_without_improvement = 0
    for epoch in range(next_epoch, cfg.epochs):
        metrics = train_epoch(g, params, index, cfg, state, epoch, queries)
        record = {"epoch": epoch, **metrics}
        if evaluator is not None and cfg.eval_every > 0 and (epoch + 1) % cfg.eval_every == 0:
            score = float(evaluator(params))
            record["valid_mrr"] = score
            if score > best_metric:
                best_metric = score
                evals_without_improvement = 0
                save_checkpoint(best_path, params, state, epoch + 1, cfg.seed)
            else:
                evals_without_improvement += 1
        history.append(record)
        with open(metrics_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        save_checkpoint(ckpt_path, params, state, epoch + 1, cfg.seed)
        if log_fn is not None:
            log_fn(
                f"epoch {epoch}: l1={metrics['l1']:.6f} l2={metrics['l2']:.6f} "
                f"lc={metrics['lc']:.6f}"
            )
        if evaluator is not None and evals_without_improvement >= cfg.patience:
            break
    return params, history
