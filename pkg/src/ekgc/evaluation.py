"""Ranking evaluation: MRR and Hits@{1,3,10} over both query directions.

Queries are built from eval triplets in both directions: (h, r, ?) and,
through the materialized inverse relation, (t, r_inv, ?).  Ties are
broken pessimistically: candidates scoring equal to the gold entity
count as ranked above it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import decoder, training
from .config import TrainConfig
from .decoder import DecoderParams
from .entail import EntailIndex
from .errors import ValidationError
from .graph import Graph
from .losses import TrainQueries

HITS_AT = (1, 3, 10)


@dataclass
class EvalReport:
    query_count: int
    mrr: float
    hits: dict[int, float]
    per_query_ranks: list[int] = field(repr=False)
    setting: str = "general"  # general | inductive
    filtered: bool = True
    entail_averaged: bool = False
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "query_count": self.query_count,
            "mrr": self.mrr,
            "hits": {str(n): v for n, v in self.hits.items()},
            "setting": self.setting,
            "filtered": self.filtered,
            "entail_averaged": self.entail_averaged,
            "label": self.label,
            "per_query_ranks": self.per_query_ranks,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def rank_of(scores: np.ndarray, gold: int, excluded: set[int]) -> int:
    """Pessimistic filtered rank of the gold entity in a score vector."""
    scores = np.asarray(scores, dtype=np.float64)
    if not (0 <= gold < scores.shape[0]):
        raise ValidationError(f"gold id {gold} out of range for {scores.shape[0]} scores")
    if gold in excluded:
        raise ValidationError("gold entity must not be excluded")
    mask = np.ones(scores.shape[0], dtype=bool)
    if excluded:
        mask[np.fromiter(excluded, dtype=np.int64)] = False
    mask[gold] = False
    competitors = scores[mask]
    gold_score = scores[gold]
    return 1 + int(np.sum(competitors > gold_score) + np.sum(competitors == gold_score))


def aggregate(ranks: list[int]) -> tuple[float, dict[int, float]]:
    if not ranks:
        raise ValidationError("cannot aggregate an empty rank list")
    arr = np.asarray(ranks, dtype=np.float64)
    mrr = float(np.mean(1.0 / arr))
    hits = {n: float(np.mean(arr <= n)) for n in HITS_AT}
    return mrr, hits


def build_queries(g: Graph, split: str, setting: str = "general"):
    """(query_head, query_relation, gold_tail) pairs over both directions."""
    trips = g.split(split)
    if setting == "inductive":
        inductive = g.inductive_nodes
        keep = [
            i for i, (h, _, t) in enumerate(trips)
            if int(h) in inductive or int(t) in inductive
        ]
        trips = trips[keep] if keep else trips[:0]
    elif setting != "general":
        raise ValidationError(f"unknown setting {setting!r}")
    nr = g.num_base_relations
    queries = []
    for h, r, t in trips:
        queries.append((int(h), int(r), int(t)))
        queries.append((int(t), int(r) + nr, int(h)))
    return queries


def known_tails(g: Graph) -> dict[tuple[int, int], set[int]]:
    """All true tails per (head, relation) across every split, with inverses."""
    known: dict[tuple[int, int], set[int]] = {}
    for split in (g.train, g.valid, g.test):
        for h, r, t in g.with_inverses(split):
            known.setdefault((int(h), int(r)), set()).add(int(t))
    return known


def evaluate(
    g: Graph,
    params: DecoderParams,
    split: str = "valid",
    setting: str = "general",
    filtered: bool = True,
    index: EntailIndex | None = None,
    entail_averaged: bool = False,
    label: str = "",
) -> EvalReport:
    """Score every query against all entities and aggregate MRR / Hits@n.

    With entail_averaged=True the score is the mean of the query head's
    sigmoid scores and those of its top-1 entailed node.
    """
    if entail_averaged and index is None:
        raise ValidationError("entail-averaged evaluation needs an entailment index")
    queries = build_queries(g, split, setting)
    if not queries:
        raise ValidationError(f"no queries in split {split!r} under setting {setting!r}")
    known = known_tails(g) if filtered else None
    ranks = []
    for h, r, gold in queries:
        logits, _ = decoder.forward(params, h, r)
        scores = decoder.sigmoid(logits)
        if entail_averaged:
            h_sub = int(index.neighbor_ids[h, 0])
            logits_sub, _ = decoder.forward(params, h_sub, r)
            scores = 0.5 * (scores + decoder.sigmoid(logits_sub))
        excluded = (known.get((h, r), set()) - {gold}) if filtered else set()
        ranks.append(rank_of(scores, gold, excluded))
    mrr, hits = aggregate(ranks)
    return EvalReport(
        query_count=len(queries),
        mrr=mrr,
        hits=hits,
        per_query_ranks=ranks,
        setting=setting,
        filtered=filtered,
        entail_averaged=entail_averaged,
        label=label,
    )


def ablation_sweep(
    g: Graph,
    index: EntailIndex | None,
    base_cfg: TrainConfig,
    grid: dict[str, list],
    split: str = "valid",
    setting: str = "general",
    filtered: bool = True,
    entity_init=None,
) -> list[dict]:
    """Train one model per grid point and evaluate it.

    Grid keys are gamma1, k1, gamma2, k2 (any subset); rows come out in
    lexicographic order over that key order.
    """
    allowed = ("gamma1", "k1", "gamma2", "k2")
    for key in grid:
        if key not in allowed:
            raise ValidationError(f"unknown sweep key {key!r}")
        if not grid[key]:
            raise ValidationError(f"empty value list for sweep key {key!r}")
    axes = [(key, list(grid[key])) for key in allowed if key in grid]
    rows: list[dict] = []
    for combo in _lexicographic(axes):
        loss_cfg = replace(base_cfg.loss, **combo)
        cfg = replace(base_cfg, loss=loss_cfg)
        params = decoder.init_params(
            g.num_nodes, g.num_relations, cfg.dim, cfg.kernels, cfg.kernel_width,
            seed=cfg.seed, entity_init=entity_init, init_scale=cfg.init_scale,
        )
        state = training.AdamState.fresh(params)
        queries = TrainQueries(g)
        for epoch in range(cfg.epochs):
            training.train_epoch(g, params, index, cfg, state, epoch, queries)
        report = evaluate(
            g, params, split=split, setting=setting, filtered=filtered,
            index=index, entail_averaged=False,
        )
        row = dict(combo)
        row["MRR"] = report.mrr
        for n in HITS_AT:
            row[f"Hits@{n}"] = report.hits[n]
        rows.append(row)
    return rows


def _lexicographic(axes: list[tuple[str, list]]):
    if not axes:
        yield {}
        return
    key, values = axes[0]
    for value in values:
        for rest in _lexicographic(axes[1:]):
            yield {key: value, **rest}


def write_sweep_csv(rows: list[dict], path: str) -> None:
    if not rows:
        raise ValidationError("no sweep rows to write")
    grid_keys = [k for k in ("gamma1", "k1", "gamma2", "k2") if k in rows[0]]
    header = grid_keys + ["MRR"] + [f"Hits@{n}" for n in HITS_AT]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[k] for k in header])
