import numpy as np
import pytest

from ekgc import graph as graph_mod
from ekgc.errors import FormatError, ParseError, ValidationError
from conftest import write_tsv


def test_ingest_assigns_dense_first_appearance_ids(tiny_graph):
    g = tiny_graph
    assert g.node_texts == ("a", "b", "c", "d")
    assert g.relation_texts == ("r",)
    assert g.num_nodes == 4
    assert g.num_relations == 2
    assert g.inductive_nodes == {3}  # "d" never appears in train


def test_ingest_counts(tiny_graph):
    g = tiny_graph
    assert len(g.train) == 2 and len(g.valid) == 1 and len(g.test) == 1


def test_valid_only_node_is_inductive(tiny_graph):
    assert 3 in tiny_graph.inductive_nodes
    assert tiny_graph.inductive_nodes.isdisjoint(tiny_graph.train_nodes())


def test_two_field_line_is_parse_error_with_line_number(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a\tr\tb\na\tr\n", encoding="utf-8")
    write_tsv(tmp_path / "v.tsv", [("a", "r", "b")])
    write_tsv(tmp_path / "t.tsv", [("a", "r", "b")])
    with pytest.raises(ParseError, match=":2"):
        graph_mod.ingest(str(path), str(tmp_path / "v.tsv"), str(tmp_path / "t.tsv"))


def test_empty_train_file_rejected(tmp_path):
    (tmp_path / "e.tsv").write_text("", encoding="utf-8")
    write_tsv(tmp_path / "v.tsv", [("a", "r", "b")])
    write_tsv(tmp_path / "t.tsv", [("a", "r", "b")])
    with pytest.raises(ParseError, match="no triplets"):
        graph_mod.ingest(str(tmp_path / "e.tsv"), str(tmp_path / "v.tsv"), str(tmp_path / "t.tsv"))


def test_duplicates_within_a_file_are_dropped(tmp_path):
    write_tsv(tmp_path / "train.tsv", [("a", "r", "b")] * 3 + [("b", "r", "a")])
    write_tsv(tmp_path / "v.tsv", [("a", "r", "b")])
    write_tsv(tmp_path / "t.tsv", [("b", "r", "a")])
    g = graph_mod.ingest(
        str(tmp_path / "train.tsv"), str(tmp_path / "v.tsv"), str(tmp_path / "t.tsv")
    )
    assert len(g.train) == 2


def test_inverse_triplets_are_exact_transpose(tiny_graph):
    g = tiny_graph
    both = g.with_inverses(g.train)
    fwd = both[: len(g.train)]
    inv = both[len(g.train):]
    assert np.array_equal(inv[:, 0], fwd[:, 2])
    assert np.array_equal(inv[:, 2], fwd[:, 0])
    assert np.array_equal(inv[:, 1], fwd[:, 1] + g.num_base_relations)
    # inverse of inverse is the original relation id
    for r in range(g.num_relations):
        assert g.inverse_relation(g.inverse_relation(r)) == r


def test_degree_stats_star_graph(tmp_path):
    write_tsv(
        tmp_path / "train.tsv",
        [("a", "r", "sink"), ("b", "r", "sink"), ("c", "r", "sink"), ("d", "r", "sink")],
    )
    write_tsv(tmp_path / "v.tsv", [("a", "r", "sink")])
    write_tsv(tmp_path / "t.tsv", [("b", "r", "sink")])
    g = graph_mod.ingest(
        str(tmp_path / "train.tsv"), str(tmp_path / "v.tsv"), str(tmp_path / "t.tsv")
    )
    avg_in, nodes, rels, unseen = graph_mod.degree_stats(g)
    assert avg_in == 4.0
    assert nodes == 5 and rels == 1
    assert unseen == 0.0


def test_tsv_round_trip_preserves_ids_and_triplets(tiny_graph, tmp_path):
    g = tiny_graph
    paths = [str(tmp_path / f"{s}.tsv") for s in ("train2", "valid2", "test2")]
    graph_mod.write_tsv(g, *paths)
    g2 = graph_mod.ingest(*paths)
    assert g2.node_texts == g.node_texts
    assert g2.relation_texts == g.relation_texts
    for a, b in ((g.train, g2.train), (g.valid, g2.valid), (g.test, g2.test)):
        assert np.array_equal(a, b)


def test_binary_round_trip_is_byte_identical(tiny_graph, tmp_path):
    g = tiny_graph
    p1, p2 = str(tmp_path / "g1.bin"), str(tmp_path / "g2.bin")
    graph_mod.save_graph(g, p1)
    g2 = graph_mod.load_graph(p1)
    graph_mod.save_graph(g2, p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()
    assert g2.inductive_nodes == g.inductive_nodes


def test_ingest_is_deterministic(tiny_graph, tmp_path):
    write_tsv(tmp_path / "train.tsv", [("a", "r", "b"), ("b", "r", "c")])
    write_tsv(tmp_path / "valid.tsv", [("a", "r", "d")])
    write_tsv(tmp_path / "test.tsv", [("c", "r", "a")])
    args = [str(tmp_path / f"{s}.tsv") for s in ("train", "valid", "test")]
    g1 = graph_mod.ingest(*args)
    g2 = graph_mod.ingest(*args)
    graph_mod.save_graph(g1, str(tmp_path / "a.bin"))
    graph_mod.save_graph(g2, str(tmp_path / "b.bin"))
    assert open(tmp_path / "a.bin", "rb").read() == open(tmp_path / "b.bin", "rb").read()


def test_load_graph_rejects_bad_magic(tmp_path):
    path = tmp_path / "bogus.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(FormatError, match="magic"):
        graph_mod.load_graph(str(path))


def test_load_graph_rejects_truncation(tiny_graph, tmp_path):
    path = str(tmp_path / "g.bin")
    graph_mod.save_graph(tiny_graph, path)
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-5])
    with pytest.raises(FormatError, match="truncated"):
        graph_mod.load_graph(path)


def test_split_lookup_rejects_unknown_name(tiny_graph):
    with pytest.raises(ValidationError):
        tiny_graph.split("nope")
