#!/usr/bin/env python3
"""Convert citation datasets to the features.tsv / edges.tsv layout.

Two source layouts are understood:

  linqs      <name>.content (id, binary words..., label) and <name>.cites
  planetoid  ind.<name>.{x,tx,allx,graph,test.index} pickles (needs numpy, scipy)

Usage:
  convert_planetoid.py linqs SRC_DIR NAME OUT_DIR
  convert_planetoid.py planetoid SRC_DIR NAME OUT_DIR
"""

import argparse
import pickle
import sys
from pathlib import Path


def write(out_dir, ids, rows, edges):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "features.tsv", "w") as f:
        for node_id, row in zip(ids, rows):
            f.write(node_id + "\t" + "\t".join(row) + "\n")
    with open(out_dir / "edges.tsv", "w") as f:
        for u, v in edges:
            f.write(f"{u}\t{v}\n")


def from_linqs(src, name):
    ids, rows = [], []
    with open(src / f"{name}.content") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            ids.append(parts[0])
            rows.append(parts[1:-1])
    known = set(ids)
    edges, missing = [], 0
    with open(src / f"{name}.cites") as f:
        for line in f:
            parts = line.split()
            if len(parts) != 2:
                continue
            if parts[0] in known and parts[1] in known:
                edges.append((parts[0], parts[1]))
            else:
                missing += 1
    if missing:
        print(f"dropped {missing} citations to papers without features", file=sys.stderr)
    return ids, rows, edges


def from_planetoid(src, name):
    import scipy.sparse as sp

    def load(suffix):
        with open(src / f"ind.{name}.{suffix}", "rb") as f:
            return pickle.load(f, encoding="latin1")

    allx, tx, graph = load("allx"), load("tx"), load("graph")
    test_index = [int(l) for l in open(src / f"ind.{name}.test.index") if l.strip()]
    n = max(allx.shape[0] + tx.shape[0], max(test_index) + 1, max(graph) + 1)
    features = sp.lil_matrix((n, allx.shape[1]))
    features[: allx.shape[0]] = allx
    # Row k of tx belongs to node test_index[k]; a few citeseer nodes have
    # no row at all and keep zero features.
    for k, node in enumerate(test_index):
        features[node] = tx[k]
    dense = features.toarray()
    ids = [str(i) for i in range(n)]
    rows = [[("%g" % v) for v in r] for r in dense]
    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v:
                edges.add((min(u, v), max(u, v)))
    return ids, rows, sorted(edges)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("layout", choices=["linqs", "planetoid"])
    ap.add_argument("src", type=Path)
    ap.add_argument("name")
    ap.add_argument("out", type=Path)
    a = ap.parse_args()
    ids, rows, edges = (from_linqs if a.layout == "linqs" else from_planetoid)(a.src, a.name)
    write(a.out, ids, rows, edges)
    print(f"{len(ids)} nodes, {len(rows[0]) if rows else 0} features, {len(edges)} edges -> {a.out}")


if __name__ == "__main__":
    main()
