"""Hyperparameter ablation on the clustered toy graph.

Sweeps the synthetic-triplet weight and entailed-list depth and prints
one row of validation metrics per grid point.

    python3 demos/ablation.py [workdir]
"""

import os
import sys

from ekgc import cli as ekgc_cli
from ekgc import embeddings as em
from ekgc import graph as graph_mod
from ekgc.toydata import clustered_toy


def main():
    workdir = sys.argv[1] if len(sys.argv) > 1 else "demo_sweep"
    os.makedirs(workdir, exist_ok=True)
    p = lambda name: os.path.join(workdir, name)

    g, emb = clustered_toy(dim=16, seed=0)
    graph_mod.save_graph(g, p("graph.ekgc"))
    em.save_embeddings(emb, p("nodes.ekge"))

    code = ekgc_cli.main(["index", "--graph", p("graph.ekgc"),
                          "--embeddings", p("nodes.ekge"),
                          "--k-max", "6", "--out", p("nodes.ekgi"), "--force"])
    if code != 0:
        sys.exit(code)

    with open(p("grid.cfg"), "w", encoding="utf-8") as fh:
        fh.write("lr = 0.01\nbatch_size = 16\nepochs = 15\nseed = 0\n")
        fh.write("dim = 16\nkernels = 8\nkernel_width = 3\n")
        fh.write("gamma1 = 0.0,0.5,1.0\nk1 = 1,3\n")

    code = ekgc_cli.main(["sweep", "--graph", p("graph.ekgc"),
                          "--index", p("nodes.ekgi"),
                          "--embeddings", p("nodes.ekge"),
                          "--grid-config", p("grid.cfg"),
                          "--out-csv", p("sweep.csv"), "--force"])
    if code != 0:
        sys.exit(code)
    print(f"\nfull table written to {p('sweep.csv')}")


if __name__ == "__main__":
    main()
