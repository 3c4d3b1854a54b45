#!/usr/bin/env python3
"""Write the small ingestion fixture used by the CLI and acceptance tests.

Layout: 3 top-level groups, 7 mid-level nodes, 10 leaf classes (one leaf has
two mid-level parents), so 20 node embeddings in total. Each vector is drawn
around the mean of its parents with a spread that shrinks with depth.

    python3 scripts/make_toy_fixture.py --out tests/fixtures/toy
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from hiersparse.formats import save_embeddings, write_labels, write_vectors
from hiersparse.synth import EmbeddingSet
from hiersparse.taxonomy import from_records, save_taxonomy

GROUPS = ["animal", "vehicle", "plant"]
MIDS = [("mammal", 0), ("bird", 0), ("road", 1), ("air", 1), ("water", 1), ("tree", 2), ("flower", 2)]
LEAVES = [
    ("dog", [3]), ("cat", [3]), ("sparrow", [4]), ("car", [5]), ("truck", [5]),
    ("plane", [6]), ("seaplane", [6, 7]), ("boat", [7]), ("oak", [8]), ("rose", [9]),
]


def build_records():
    recs = [{"id": i, "name": n, "parents": [], "label": None} for i, n in enumerate(GROUPS)]
    for k, (name, g) in enumerate(MIDS):
        recs.append({"id": 3 + k, "name": name, "parents": [g], "label": None})
    for k, (name, ps) in enumerate(LEAVES):
        recs.append({"id": 10 + k, "name": name, "parents": ps, "label": k})
    return recs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="tests/fixtures/toy")
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--samples-per-leaf", type=int, default=6)
    ap.add_argument("--noise", type=float, default=0.05, help="sample noise standard deviation")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t = from_records(build_records())
    rng = np.random.default_rng(args.seed)

    raw = {}
    for u in t.topological_order:
        if u == t.root:
            continue
        ps = [p for p in t.parents(u) if p != t.root]
        base = np.mean([raw[p] for p in ps], axis=0) if ps else np.zeros(args.dim)
        spread = 1.0 if not ps else 0.5 / t.level(u)
        raw[u] = base + spread * rng.standard_normal(args.dim)
    e = EmbeddingSet(args.dim, raw)

    save_taxonomy(t, out / "taxonomy.json")
    save_embeddings(e, out / "embeddings.csv")

    X, y = [], []
    for leaf in sorted(t.leaves):
        for _ in range(args.samples_per_leaf):
            X.append(e[leaf] + args.noise * rng.standard_normal(args.dim))
            y.append(leaf)
    sids = np.arange(len(X))
    write_vectors(out / "samples.csv", sids, np.array(X))
    write_labels(out / "labels.csv", sids, y)
    print(f"wrote {len(e)} embeddings and {len(X)} samples to {out}")


if __name__ == "__main__":
    main()
