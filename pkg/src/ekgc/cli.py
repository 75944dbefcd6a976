"""Command-line surface: ingest, index, coverage, train, eval, sweep.

Exit codes: 0 success, 2 input error, 3 overwrite guard, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import traceback

import numpy as np

from . import embeddings as emb_mod
from . import entail, evaluation, graph as graph_mod, training
from .config import config_to_text, load_config, parse_kv_file, config_from_dict
from .errors import ConfigError, EkgcError, OverwriteError, ParseError, ValidationError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OVERWRITE = 3
EXIT_INTERNAL = 4

GRID_KEYS = ("gamma1", "k1", "gamma2", "k2")


def _guard_overwrite(path: str, force: bool) -> None:
    if os.path.exists(path) and not force:
        raise OverwriteError(f"{path} exists; pass --force to overwrite")


def _require_file(path: str) -> str:
    if not os.path.isfile(path):
        raise ParseError(f"no such file: {path}")
    return path


def cmd_ingest(args) -> int:
    _guard_overwrite(args.out, args.force)
    g = graph_mod.ingest(
        _require_file(args.train), _require_file(args.valid), _require_file(args.test)
    )
    graph_mod.save_graph(g, args.out)
    avg_in, nodes, rels, unseen = graph_mod.degree_stats(g)
    print(f"nodes: {nodes}")
    print(f"relations: {rels} ({2 * rels} with inverses)")
    print(f"train/valid/test: {len(g.train)}/{len(g.valid)}/{len(g.test)}")
    print(f"avg in-degree: {avg_in:.2f}")
    print(f"unseen nodes: {unseen:.1f}%")
    return EXIT_OK


def cmd_index(args) -> int:
    _guard_overwrite(args.out, args.force)
    g = graph_mod.load_graph(_require_file(args.graph))
    emb = emb_mod.load_embeddings(_require_file(args.embeddings), expected_rows=g.num_nodes)
    emb = emb_mod.normalize(emb)
    restrict = g.train_nodes() if args.restrict_train else None
    start = time.perf_counter()
    index = entail.build_index(emb, args.k_max, restrict_to=restrict)
    elapsed = time.perf_counter() - start
    entail.save_index(index, args.out)
    rate = g.num_nodes / elapsed if elapsed > 0 else float("inf")
    print(f"built top-{args.k_max} index over {g.num_nodes} nodes "
          f"in {elapsed:.2f}s ({rate:.0f} nodes/s)")
    return EXIT_OK


def cmd_coverage(args) -> int:
    g = graph_mod.load_graph(_require_file(args.graph))
    index = entail.load_index(_require_file(args.index))
    try:
        ks = [int(x) for x in args.k_list.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad --k-list: {args.k_list!r}") from None
    if not ks:
        raise ConfigError("--k-list is empty")
    train_nodes = set(g.train_nodes())
    valid_nodes = set(np.unique(g.valid[:, [0, 2]]).tolist()) if len(g.valid) else set()
    eval_nodes = valid_nodes & g.inductive_nodes
    if not eval_nodes:
        raise ValidationError("no inductive nodes in the valid split")
    rows = [(k, entail.coverage_at_k(index, train_nodes, eval_nodes, k)) for k in ks]
    print("k,coverage_pct")
    for k, pct in rows:
        print(f"{k},{pct:.2f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("k,coverage_pct\n")
            for k, pct in rows:
                fh.write(f"{k},{pct:.6f}\n")
    return EXIT_OK


def _load_run_inputs(graph_path, index_path, embeddings_path):
    g = graph_mod.load_graph(_require_file(graph_path))
    index = entail.load_index(_require_file(index_path)) if index_path else None
    entity_init = None
    if embeddings_path:
        raw = emb_mod.load_embeddings(_require_file(embeddings_path), expected_rows=g.num_nodes)
        entity_init = raw
    return g, index, entity_init


def cmd_train(args) -> int:
    cfg = load_config(_require_file(args.config))
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    run_json = os.path.join(args.run_dir, "run.json")
    if os.path.exists(run_json) and not (args.resume or args.force):
        raise OverwriteError(f"{args.run_dir} already holds a run; --resume or --force")
    g, index, entity_init = _load_run_inputs(args.graph, args.index, args.embeddings)
    if entity_init is not None and entity_init.dim != cfg.dim:
        raise ConfigError(
            f"embedding dim {entity_init.dim} does not match configured dim {cfg.dim}"
        )
    os.makedirs(args.run_dir, exist_ok=True)
    # config snapshot is written before any training step
    with open(os.path.join(args.run_dir, "config.snapshot"), "w", encoding="utf-8") as fh:
        fh.write(config_to_text(cfg))
    with open(run_json, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "graph": os.path.abspath(args.graph),
                "index": os.path.abspath(args.index) if args.index else None,
                "embeddings": os.path.abspath(args.embeddings) if args.embeddings else None,
                "config": config_to_text(cfg),
            },
            fh,
            indent=2,
        )
    evaluator = None
    if cfg.eval_every > 0 and len(g.valid):
        def evaluator(params):
            return evaluation.evaluate(g, params, split="valid").mrr
    training.run_training(
        g, cfg, args.run_dir, index=index, entity_init=entity_init,
        resume=args.resume, evaluator=evaluator,
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    run_json = os.path.join(args.run_dir, "run.json")
    with open(_require_file(run_json), "r", encoding="utf-8") as fh:
        run = json.load(fh)
    cfg = config_from_dict(
        dict(
            line.split(" = ", 1)
            for line in run["config"].strip().splitlines()
        )
    )
    g = graph_mod.load_graph(run["graph"])
    index = entail.load_index(run["index"]) if run.get("index") else None
    if args.entail_averaged and index is None:
        raise ConfigError("--entail-averaged requires the run to have an index")
    best = os.path.join(args.run_dir, "best.ckpt")
    ckpt = best if os.path.exists(best) else os.path.join(args.run_dir, "checkpoint.ckpt")
    params, _, _, _ = training.load_checkpoint(_require_file(ckpt), g.num_nodes)
    label = ""
    if cfg.loss.gamma1 == 0 and cfg.loss.gamma2 == 0:
        label = "baseline (w/o entail)"
    report = evaluation.evaluate(
        g, params, split=args.split, setting=args.setting,
        filtered=(args.mode == "filtered"), index=index,
        entail_averaged=args.entail_averaged, label=label,
    )
    out_path = args.out or os.path.join(
        args.run_dir,
        f"eval_{args.split}_{args.setting}_{args.mode}"
        f"{'_entail' if args.entail_averaged else ''}.json",
    )
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    summary = report.to_dict()
    summary.pop("per_query_ranks")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    _guard_overwrite(args.out_csv, args.force)
    raw = parse_kv_file(_require_file(args.grid_config))
    grid = {}
    base = {}
    for key, value in raw.items():
        if key in GRID_KEYS and "," in value:
            parts = [p.strip() for p in value.split(",")]
            grid[key] = [int(p) if key in ("k1", "k2") else float(p) for p in parts]
        elif key in GRID_KEYS:
            grid[key] = [int(value) if key in ("k1", "k2") else float(value)]
        else:
            base[key] = value
    if not grid:
        raise ConfigError("grid config names no swept keys (gamma1, k1, gamma2, k2)")
    cfg = config_from_dict(base)
    g, index, entity_init = _load_run_inputs(args.graph, args.index, args.embeddings)
    rows = evaluation.ablation_sweep(
        g, index, cfg, grid, split=args.split, setting=args.setting,
        entity_init=entity_init,
    )
    evaluation.write_sweep_csv(rows, args.out_csv)
    header = [k for k in GRID_KEYS if k in rows[0]] + ["MRR", "Hits@1", "Hits@3", "Hits@10"]
    print(",".join(header))
    for row in rows:
        print(",".join(f"{row[k]:.4f}" if isinstance(row[k], float) else str(row[k])
                       for k in header))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ekgc", description=__doc__)
    p.add_argument("--threads", type=int, default=0,
                   help="worker hint (computation is deterministic regardless)")
    p.add_argument("--bitwise-repro", action="store_true",
                   help="force deterministic reductions (always on in this build)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="read TSV triplet files into a binary graph")
    sp.add_argument("--train", required=True)
    sp.add_argument("--valid", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("index", help="build the entailed-node index")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--k-max", type=int, required=True)
    sp.add_argument("--restrict-train", action="store_true",
                    help="draw neighbors only from train-split nodes")
    sp.add_argument("--out", required=True)
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_index)

    sp = sub.add_parser("coverage", help="inductive coverage at each k")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--index", required=True)
    sp.add_argument("--k-list", required=True, help="comma-separated k values")
    sp.add_argument("--csv", default=None)
    sp.set_defaults(func=cmd_coverage)

    sp = sub.add_parser("train", help="train a model into a run directory")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--index", default=None)
    sp.add_argument("--embeddings", default=None,
                    help="entity-table initialization (EKGE file)")
    sp.add_argument("--config", required=True)
    sp.add_argument("--run-dir", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--resume", action="store_true")
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a trained run")
    sp.add_argument("--run-dir", required=True)
    sp.add_argument("--split", choices=("valid", "test"), default="valid")
    sp.add_argument("--setting", choices=("general", "inductive"), default="general")
    sp.add_argument("--mode", choices=("raw", "filtered"), default="filtered")
    sp.add_argument("--entail-averaged", action="store_true")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", help="train and evaluate a hyperparameter grid")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--index", default=None)
    sp.add_argument("--embeddings", default=None)
    sp.add_argument("--grid-config", required=True)
    sp.add_argument("--out-csv", required=True)
    sp.add_argument("--split", choices=("valid", "test"), default="valid")
    sp.add_argument("--setting", choices=("general", "inductive"), default="general")
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OverwriteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERWRITE
    except (EkgcError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # internal invariant violation
        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
