"""End-to-end walkthrough on a generated clustered toy graph.

Generates a small knowledge graph with planted head clusters, dumps the
node texts, extracts pseudo-encoder embeddings, builds the entailed-node
index, trains a baseline model and an entailment-densified model, and
compares their inductive link-prediction quality.

Run from the repository root after installing both packages:

    python3 demos/toy_pipeline.py [workdir]
"""

import json
import os
import subprocess
import sys

import numpy as np

from ekgc import cli as ekgc_cli
from ekgc import embeddings as em
from ekgc import graph as graph_mod
from ekgc.toydata import clustered_toy


def run(argv):
    print(f"$ ekgc {' '.join(argv)}")
    code = ekgc_cli.main(argv)
    if code != 0:
        sys.exit(code)


def main():
    workdir = sys.argv[1] if len(sys.argv) > 1 else "demo_run"
    os.makedirs(workdir, exist_ok=True)
    p = lambda name: os.path.join(workdir, name)

    # 1. generate the toy graph and write it out as plain TSV splits
    g, planted_emb = clustered_toy(dim=16, seed=0)
    graph_mod.write_tsv(g, p("train.tsv"), p("valid.tsv"), p("test.tsv"))
    print(f"generated {g.num_nodes} nodes, {len(g.train)} train triplets")

    # 2. ingest assigns ids by first appearance in the TSVs, so embedding
    #    rows must follow the *ingested* id order, not the generator's
    run(["ingest", "--train", p("train.tsv"), "--valid", p("valid.tsv"),
         "--test", p("test.tsv"), "--out", p("graph.ekgc"), "--force"])
    ingested = graph_mod.load_graph(p("graph.ekgc"))
    with open(p("nodes.txt"), "w", encoding="utf-8") as fh:
        for text in ingested.node_texts:
            fh.write(text + "\n")

    # 3. node embeddings -- here the planted ones that encode the clusters,
    #    permuted into ingested id order; a hash pseudo-encoder run is shown
    #    alongside for the format path
    original_id = {text: i for i, text in enumerate(g.node_texts)}
    order = [original_id[text] for text in ingested.node_texts]
    em.save_embeddings(em.matrix(planted_emb.data[order]), p("nodes.ekge"))
    subprocess.run(
        [sys.executable, "-m", "embed_extract.cli", "--nodes", p("nodes.txt"),
         "--dim", "16", "--out", p("nodes_pseudo.ekge")],
        check=True,
    )

    # 4. index + coverage
    run(["index", "--graph", p("graph.ekgc"), "--embeddings", p("nodes.ekge"),
         "--k-max", "6", "--out", p("nodes.ekgi"), "--force"])
    run(["coverage", "--graph", p("graph.ekgc"), "--index", p("nodes.ekgi"),
         "--k-list", "1,3,6"])

    # 5. train: baseline (gamma1 = 0) vs entailment-densified (gamma1 = 1)
    for tag, gamma1 in (("baseline", 0.0), ("entail", 1.0)):
        with open(p(f"{tag}.cfg"), "w", encoding="utf-8") as fh:
            fh.write("lr = 0.01\nbatch_size = 16\nepochs = 30\nseed = 0\n")
            fh.write("dim = 16\nkernels = 8\nkernel_width = 3\n")
            fh.write(f"gamma1 = {gamma1}\nk1 = 3\n")
        run(["train", "--graph", p("graph.ekgc"), "--index", p("nodes.ekgi"),
             "--embeddings", p("nodes.ekge"), "--config", p(f"{tag}.cfg"),
             "--run-dir", p(f"run_{tag}"), "--force"])
        run(["eval", "--run-dir", p(f"run_{tag}"), "--split", "test",
             "--setting", "inductive"])

    # 6. compare
    print("\ninductive test results (filtered):")
    for tag in ("baseline", "entail"):
        path = p(f"run_{tag}/eval_test_inductive_filtered.json")
        report = json.load(open(path, encoding="utf-8"))
        print(f"  {tag:9s} MRR={report['mrr']:.3f} "
              f"Hits@10={report['hits']['10']:.3f}")


if __name__ == "__main__":
    main()
