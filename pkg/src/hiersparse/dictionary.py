"""Hierarchical dictionary: root-child atoms plus one difference atom per edge.

Column layout: root-child atoms first (ascending node id), then difference
atoms ordered by (child id, parent id). A node with several parents gets one
difference atom per parent edge, so a support always pins down a unique path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, MissingEmbeddingError, RankDeficientError, TaxonomyError, ZeroVectorError
from .numerics import RANK_RTOL, as_matrix
from .synth import EmbeddingSet
from .taxonomy import Taxonomy

ROOT = "root"
DIFF = "diff"


@dataclass(frozen=True)
class AtomMeta:
    col: int
    kind: str
    node: int
    parent: int | None


@dataclass(frozen=True, eq=False)
class HierDictionary:
    atoms: np.ndarray
    meta: tuple[AtomMeta, ...]
    node_index: dict = field(repr=False)
    # parent node -> ((child node, column), ...); the virtual root's entry lists root atoms
    frontier: dict = field(repr=False)
    root: int = -1

    @property
    def dim(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    def column(self, node: int, parent: int | None) -> int:
        key = (int(node), None if parent is None or parent == self.root else int(parent))
        try:
            return self.node_index[key]
        except KeyError:
            raise TaxonomyError(f"no atom for edge {parent} -> {node}") from None

    def path_columns(self, path) -> list[int]:
        """Atom columns for an ordered root-to-node path (virtual root excluded)."""
        path = [int(p) for p in path]
        if not path:
            raise TaxonomyError("empty path")
        cols = [self.column(path[0], None)]
        for parent, child in zip(path, path[1:]):
            cols.append(self.column(child, parent))
        return cols

    def children_columns(self, node: int | None) -> tuple[tuple[int, int], ...]:
        key = self.root if node is None else int(node)
        return self.frontier.get(key, ())


def build_dictionary(e: EmbeddingSet, t: Taxonomy) -> HierDictionary:
    for i in t.non_root:
        if i not in e:
            raise MissingEmbeddingError(f"node {i} ({t.nodes[i].name!r}) has no embedding")
    cols = []
    meta = []
    for j in sorted(t.children(t.root)):
        meta.append(AtomMeta(len(cols), ROOT, j, None))
        cols.append(e[j])
    for j in sorted(t.non_root):
        for p in sorted(t.parents(j)):
            if p == t.root:
                continue
            meta.append(AtomMeta(len(cols), DIFF, j, p))
            cols.append(e[j] - e[p])
    atoms = np.stack(cols, axis=1)
    norms = np.linalg.norm(atoms, axis=0)
    if np.any(norms == 0):
        bad = meta[int(np.argmin(norms))]
        raise ZeroVectorError(f"atom for edge {bad.parent} -> {bad.node} has zero norm")
    return _assemble(atoms, meta, t.root)


def _assemble(atoms, meta, root) -> HierDictionary:
    node_index = {(m.node, m.parent): m.col for m in meta}
    frontier: dict[int, list] = {}
    for m in meta:
        key = root if m.parent is None else m.parent
        frontier.setdefault(key, []).append((m.node, m.col))
    frontier = {k: tuple(sorted(v)) for k, v in frontier.items()}
    return HierDictionary(atoms, tuple(meta), node_index, frontier, root)


def dictionary_from_parts(atoms, meta_records, root: int) -> HierDictionary:
    """Rebuild a dictionary from an exported matrix and its metadata records."""
    atoms = as_matrix(atoms)
    meta = []
    for c, r in enumerate(meta_records):
        if int(r["col"]) != c:
            raise DataError(f"atom metadata out of order at column {c}")
        kind = r["kind"]
        if kind not in (ROOT, DIFF):
            raise DataError(f"unknown atom kind {kind!r}")
        parent = r.get("parent")
        meta.append(AtomMeta(c, kind, int(r["node"]), None if parent is None else int(parent)))
    if len(meta) != atoms.shape[1]:
        raise DataError(f"{len(meta)} metadata records for {atoms.shape[1]} atoms")
    return _assemble(atoms, meta, root)


def reconstruct_from_path(D: HierDictionary, path) -> np.ndarray:
    """Telescoping sum of the path's atoms; equals the endpoint's embedding."""
    return D.atoms[:, D.path_columns(path)].sum(axis=1)


def _atoms_of(D) -> np.ndarray:
    return D.atoms if isinstance(D, HierDictionary) else as_matrix(D)


def normalize_columns(D):
    """Return ``(D_hat, w)`` with unit-norm columns and ``D = D_hat * w``."""
    A = _atoms_of(D)
    w = np.linalg.norm(A, axis=0)
    if np.any(w == 0):
        raise ZeroVectorError(f"column {int(np.argmin(w))} has zero norm")
    return A / w, w


def mutual_coherence(D) -> float:
    Dn, _ = normalize_columns(D)
    if Dn.shape[1] < 2:
        raise ConfigError("coherence needs at least two atoms")
    G = np.abs(Dn.T @ Dn)
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


def erc(D, S, T=None) -> float:
    """Exact recovery coefficient of support ``S`` on the normalized dictionary.

    ``max_{j in T \\ S} || pinv(D_S) d_j ||_1`` with ``T`` defaulting to every
    column. Returns 0 when ``T \\ S`` is empty.
    """
    Dn, _ = normalize_columns(D)
    S = list(dict.fromkeys(int(s) for s in S))
    if not S:
        raise ConfigError("support must be non-empty")
    k = Dn.shape[1]
    Sset = set(S)
    if T is None:
        T = range(k)
    else:
        T = [int(j) for j in T]
        if not Sset <= set(T):
            raise ConfigError("restriction T must contain the support S")
    rest = [j for j in T if j not in Sset]
    DS = Dn[:, S]
    sv = np.linalg.svd(DS, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficientError(f"normalized sub-dictionary on support {S} is rank deficient")
    if not rest:
        return 0.0
    coef = np.linalg.pinv(DS) @ Dn[:, rest]
    return float(np.abs(coef).sum(axis=0).max())


@dataclass(frozen=True)
class DictionaryDiagnostics:
    coherence: float
    erc_full: float | None = None
    erc_restricted: float | None = None


def diagnose(D, support=None, restriction=None) -> DictionaryDiagnostics:
    mu = mutual_coherence(D)
    if support is None:
        return DictionaryDiagnostics(mu)
    full = erc(D, support)
    restricted = erc(D, support, restriction) if restriction is not None else None
    return DictionaryDiagnostics(mu, full, restricted)


def path_restriction(D: HierDictionary, path) -> list[int]:
    """Atoms a top-down search along ``path`` gets to score.

    The root-child atoms plus, for every non-final node on the path, the atoms
    of its child edges. Always contains the path's own atoms.
    """
    cols = {c for _, c in D.children_columns(None)}
    for node in list(path)[:-1]:
        cols.update(c for _, c in D.children_columns(node))
    cols.update(D.path_columns(path))
    return sorted(cols)
