#!/usr/bin/env python3
"""Randomized search for an instance where tree restriction rescues recovery.

Wanted: a hierarchical dictionary and a planted root-to-leaf support ``S``
such that

* ``erc(S) >= 1`` on the full dictionary (no OMP certificate),
* ``erc(S | T) < 1`` with ``T`` the atoms a top-down search along the path
  ever scores,
* hierarchical OMP (beam 1) recovers ``S`` exactly,
* full-dictionary OMP with sparsity ``|S|`` does not.

The first hit is frozen as JSON (taxonomy records, embeddings, leaf, signal).

    python3 scripts/find_restricted_erc_instance.py --out tests/fixtures/restricted_erc.json
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from hiersparse.dictionary import build_dictionary, erc, path_restriction
from hiersparse.errors import NumericalError
from hiersparse.pursuit import PursuitConfig, hierarchical_omp, omp
from hiersparse.synth import EmbeddingSet
from hiersparse.taxonomy import build_balanced_tree, taxonomy_to_records


def random_hierarchy(t, d, spread, rng):
    vecs = {}
    for u in t.topological_order:
        if u == t.root:
            continue
        (p,) = t.parents(u)
        base = np.zeros(d) if p == t.root else vecs[p]
        vecs[u] = base + (1.0 if p == t.root else spread) * rng.standard_normal(d)
    return EmbeddingSet(d, vecs)


def check(t, e, leaf, coef):
    D = build_dictionary(e, t)
    (path,) = t.root_paths(leaf)
    S = D.path_columns(path)
    x = D.atoms[:, S] @ coef
    cfg = PursuitConfig(beam=1, max_steps=len(S), tolerance=1e-10, sparsity=len(S))
    try:
        full = erc(D, S)
        restricted = erc(D, S, path_restriction(D, path))
    except NumericalError:
        return None
    if not (full >= 1 and restricted < 1):
        return None
    h = hierarchical_omp(x, D, t, cfg)
    o = omp(x, D, cfg)
    if set(h.support) != set(S) or set(o.support) == set(S):
        return None
    return {"erc_full": full, "erc_restricted": restricted, "x": x, "support": S, "path": list(path),
            "omp_support": o.support}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="tests/fixtures/restricted_erc.json")
    ap.add_argument("--b", type=int, default=2)
    ap.add_argument("--L", type=int, default=3)
    ap.add_argument("--d", type=int, default=6)
    ap.add_argument("--spread", type=float, default=0.6)
    ap.add_argument("--tries", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    t = build_balanced_tree(args.b, args.L)
    rng = np.random.default_rng(args.seed)
    for trial in range(args.tries):
        e = random_hierarchy(t, args.d, args.spread, rng)
        leaf = int(rng.choice(t.leaves))
        coef = rng.uniform(0.5, 1.5, size=args.L)
        hit = check(t, e, leaf, coef)
        if hit is None:
            continue
        doc = {
            "taxonomy": taxonomy_to_records(t),
            "dim": args.d,
            "embeddings": {str(i): e[i].tolist() for i in e.ids()},
            "leaf": leaf,
            "coefficients": coef.tolist(),
            "signal": hit["x"].tolist(),
            "support": hit["support"],
            "path": hit["path"],
            "erc_full": hit["erc_full"],
            "erc_restricted": hit["erc_restricted"],
            "omp_support": [int(c) for c in hit["omp_support"]],
            "search": {"seed": args.seed, "trial": trial, "spread": args.spread},
        }
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
        print(f"trial {trial}: erc_full={hit['erc_full']:.4f} erc_restricted={hit['erc_restricted']:.4f} -> {args.out}")
        return 0
    print("no instance found")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
