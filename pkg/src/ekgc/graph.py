"""Vocabularies, triplet stores and TSV/binary graph ingestion.

Node and relation ids are dense integers assigned in first-appearance
order while scanning train, then valid, then test (head before tail
within a line).  Inverse relations are materialized: for a base relation
r the id ``r + num_base_relations`` denotes its inverse, so a tail query
(?, r, t) becomes the head query (t, r_inv, ?).
"""

from __future__ import annotations

import io
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ParseError, ValidationError

log = logging.getLogger(__name__)

GRAPH_MAGIC = b"EKGC"
GRAPH_VERSION = 1


@dataclass(frozen=True)
class Graph:
    """Immutable knowledge graph with train/valid/test splits.

    Triplet arrays hold forward triplets only, shape (M, 3) int64 columns
    (head, relation, tail) with relation < num_base_relations.  Inverse
    triplets are derived on demand.
    """

    node_texts: tuple[str, ...]
    relation_texts: tuple[str, ...]
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    inductive_nodes: frozenset[int] = field(default_factory=frozenset)

    @property
    def num_nodes(self) -> int:
        return len(self.node_texts)

    @property
    def num_base_relations(self) -> int:
        return len(self.relation_texts)

    @property
    def num_relations(self) -> int:
        """Relation count with inverses materialized."""
        return 2 * len(self.relation_texts)

    def inverse_relation(self, r: int) -> int:
        nr = self.num_base_relations
        return r + nr if r < nr else r - nr

    def with_inverses(self, split: np.ndarray) -> np.ndarray:
        """Forward triplets plus their (t, r_inv, h) counterparts."""
        if len(split) == 0:
            return split.reshape(0, 3)
        inv = np.stack(
            [split[:, 2], split[:, 1] + self.num_base_relations, split[:, 0]], axis=1
        )
        return np.concatenate([split, inv], axis=0)

    def split(self, name: str) -> np.ndarray:
        try:
            return {"train": self.train, "valid": self.valid, "test": self.test}[name]
        except KeyError:
            raise ValidationError(f"unknown split {name!r}") from None

    def train_nodes(self) -> frozenset[int]:
        if len(self.train) == 0:
            return frozenset()
        return frozenset(np.unique(self.train[:, [0, 2]]).tolist())


def _parse_tsv(path: str) -> list[tuple[str, str, str]]:
    triples = []
    with io.open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if line == "":
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            triples.append((fields[0], fields[1], fields[2]))
    return triples


def ingest(train_path: str, valid_path: str, test_path: str) -> Graph:
    """Read three TSV triplet files and build a Graph.

    Ids are assigned in first-appearance order (train, valid, test; head
    before tail within a line).  Duplicate triplets within one file are
    dropped with a logged count.
    """
    raw = {
        "train": _parse_tsv(train_path),
        "valid": _parse_tsv(valid_path),
        "test": _parse_tsv(test_path),
    }
    if not raw["train"]:
        raise ParseError(f"{train_path}: train file contains no triplets")

    node_ids: dict[str, int] = {}
    rel_ids: dict[str, int] = {}

    def node_id(text: str) -> int:
        if text not in node_ids:
            node_ids[text] = len(node_ids)
        return node_ids[text]

    def rel_id(text: str) -> int:
        if text not in rel_ids:
            rel_ids[text] = len(rel_ids)
        return rel_ids[text]

    splits: dict[str, np.ndarray] = {}
    for name in ("train", "valid", "test"):
        seen: set[tuple[int, int, int]] = set()
        rows: list[tuple[int, int, int]] = []
        dupes = 0
        for h_text, r_text, t_text in raw[name]:
            trip = (node_id(h_text), rel_id(r_text), node_id(t_text))
            if trip in seen:
                dupes += 1
                continue
            seen.add(trip)
            rows.append(trip)
        if dupes:
            log.info("%s split: dropped %d duplicate triplets", name, dupes)
        splits[name] = np.array(rows, dtype=np.int64).reshape(len(rows), 3)

    g = Graph(
        node_texts=tuple(node_ids),
        relation_texts=tuple(rel_ids),
        train=splits["train"],
        valid=splits["valid"],
        test=splits["test"],
    )
    return _with_inductive(g)


def _with_inductive(g: Graph) -> Graph:
    train_nodes = g.train_nodes()
    eval_nodes: set[int] = set()
    for split in (g.valid, g.test):
        if len(split):
            eval_nodes.update(np.unique(split[:, [0, 2]]).tolist())
    return Graph(
        node_texts=g.node_texts,
        relation_texts=g.relation_texts,
        train=g.train,
        valid=g.valid,
        test=g.test,
        inductive_nodes=frozenset(eval_nodes - train_nodes),
    )


def degree_stats(g: Graph) -> tuple[float, int, int, float]:
    """(avg in-degree, node count, base relation count, unseen node pct).

    Avg in-degree is train size over the number of nodes with at least
    one incoming train edge.
    """
    if len(g.train):
        sinks = len(np.unique(g.train[:, 2]))
        avg_in = len(g.train) / sinks
    else:
        avg_in = 0.0
    unseen_pct = 100.0 * len(g.inductive_nodes) / g.num_nodes if g.num_nodes else 0.0
    return avg_in, g.num_nodes, g.num_base_relations, unseen_pct


def write_tsv(g: Graph, train_path: str, valid_path: str, test_path: str) -> None:
    """Write the splits back out as TSV with surface texts."""
    for path, split in ((train_path, g.train), (valid_path, g.valid), (test_path, g.test)):
        with io.open(path, "w", encoding="utf-8", newline="") as fh:
            for h, r, t in split:
                fh.write(
                    f"{g.node_texts[h]}\t{g.relation_texts[r]}\t{g.node_texts[t]}\n"
                )


def _write_str(fh, s: str) -> None:
    b = s.encode("utf-8")
    fh.write(struct.pack("<I", len(b)))
    fh.write(b)


def _read_exact(fh, n: int, what: str) -> bytes:
    b = fh.read(n)
    if len(b) != n:
        raise FormatError(f"truncated graph file while reading {what}")
    return b


def _read_str(fh) -> str:
    (n,) = struct.unpack("<I", _read_exact(fh, 4, "string length"))
    return _read_exact(fh, n, "string bytes").decode("utf-8")


def save_graph(g: Graph, path: str) -> None:
    """Serialize to the versioned binary graph format (little-endian u32)."""
    with open(path, "wb") as fh:
        fh.write(GRAPH_MAGIC)
        fh.write(struct.pack("<H", GRAPH_VERSION))
        fh.write(struct.pack("<I", g.num_nodes))
        for text in g.node_texts:
            _write_str(fh, text)
        fh.write(struct.pack("<I", g.num_base_relations))
        for text in g.relation_texts:
            _write_str(fh, text)
        for split in (g.train, g.valid, g.test):
            fh.write(struct.pack("<I", len(split)))
            fh.write(split.astype("<u4").tobytes())


def load_graph(path: str) -> Graph:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != GRAPH_MAGIC:
            raise FormatError(f"{path}: bad magic, not a graph file")
        (version,) = struct.unpack("<H", _read_exact(fh, 2, "version"))
        if version != GRAPH_VERSION:
            raise FormatError(f"{path}: unsupported graph version {version}")
        (n_nodes,) = struct.unpack("<I", _read_exact(fh, 4, "node count"))
        node_texts = tuple(_read_str(fh) for _ in range(n_nodes))
        (n_rels,) = struct.unpack("<I", _read_exact(fh, 4, "relation count"))
        relation_texts = tuple(_read_str(fh) for _ in range(n_rels))
        splits = []
        for name in ("train", "valid", "test"):
            (m,) = struct.unpack("<I", _read_exact(fh, 4, f"{name} size"))
            buf = _read_exact(fh, 12 * m, f"{name} triplets")
            arr = np.frombuffer(buf, dtype="<u4").astype(np.int64).reshape(m, 3)
            splits.append(arr)
    g = Graph(
        node_texts=node_texts,
        relation_texts=relation_texts,
        train=splits[0],
        valid=splits[1],
        test=splits[2],
    )
    _validate(g)
    return _with_inductive(g)


def _validate(g: Graph) -> None:
    for name, split in (("train", g.train), ("valid", g.valid), ("test", g.test)):
        if len(split) == 0:
            continue
        if split[:, [0, 2]].max() >= g.num_nodes or split.min() < 0:
            raise ValidationError(f"{name} split references an unknown node id")
        if split[:, 1].max() >= g.num_base_relations:
            raise ValidationError(f"{name} split references an unknown relation id")
