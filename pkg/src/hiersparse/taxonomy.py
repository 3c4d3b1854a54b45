"""Concept hierarchy: nodes, parent/child edges, levels and root-to-leaf paths.

A taxonomy always has a single virtual root with no embedding. It takes the
largest id, so the concept nodes keep ids 0..N-1 both for synthetic trees and
for hierarchies loaded from JSON.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from .errors import ConfigError, FormatError, TaxonomyError

DEFAULT_PATH_CAP = 64


@dataclass(frozen=True)
class NodeRecord:
    id: int
    name: str
    parents: tuple[int, ...]
    is_leaf: bool
    class_label: int | None = None


@dataclass(frozen=True, eq=False)
class Taxonomy:
    nodes: tuple[NodeRecord, ...]
    root: int
    path_cap: int = DEFAULT_PATH_CAP
    _children: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.nodes)
        if not 0 <= self.root < n:
            raise TaxonomyError(f"root id {self.root} out of range")
        kids: list[list[int]] = [[] for _ in range(n)]
        for rec in self.nodes:
            for p in rec.parents:
                if not 0 <= p < n:
                    raise TaxonomyError(f"node {rec.id} references unknown parent {p}")
                kids[p].append(rec.id)
        object.__setattr__(self, "_children", tuple(tuple(sorted(k)) for k in kids))
        self._validate()

    def _validate(self):
        for i, rec in enumerate(self.nodes):
            if rec.id != i:
                raise TaxonomyError(f"node ids must be dense and ordered; position {i} holds id {rec.id}")
            if i == self.root:
                if rec.parents:
                    raise TaxonomyError("the root cannot have parents")
            elif not rec.parents:
                raise TaxonomyError(f"non-root node {i} has no parent")
            if rec.is_leaf != (len(self._children[i]) == 0):
                raise TaxonomyError(f"node {i}: is_leaf flag disagrees with its children")
            if (rec.class_label is not None) != rec.is_leaf and i != self.root:
                raise TaxonomyError(f"node {i}: class_label must be present exactly on leaves")
        # acyclicity + reachability via Kahn's algorithm
        indeg = [len(rec.parents) for rec in self.nodes]
        queue = deque(i for i, k in enumerate(indeg) if k == 0)
        seen = 0
        while queue:
            u = queue.popleft()
            seen += 1
            for c in self._children[u]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if seen != len(self.nodes):
            raise TaxonomyError("taxonomy contains a cycle")

    # -- basic queries -------------------------------------------------
    def __len__(self):
        return len(self.nodes)

    def _check(self, i):
        if not isinstance(i, (int,)) and not hasattr(i, "__index__"):
            raise TaxonomyError(f"node id must be an integer, got {i!r}")
        i = int(i)
        if not 0 <= i < len(self.nodes):
            raise TaxonomyError(f"unknown node id {i}")
        return i

    def parents(self, i) -> tuple[int, ...]:
        return self.nodes[self._check(i)].parents

    def children(self, i) -> tuple[int, ...]:
        return self._children[self._check(i)]

    def is_leaf(self, i) -> bool:
        return self.nodes[self._check(i)].is_leaf

    def level(self, i) -> int:
        return self.levels[self._check(i)]

    def ancestors(self, i) -> frozenset[int]:
        """Union of all parent chains, excluding ``i`` itself."""
        return self._ancestor_sets[self._check(i)]

    def descendants(self, i) -> frozenset[int]:
        i = self._check(i)
        out: set[int] = set()
        stack = list(self._children[i])
        while stack:
            u = stack.pop()
            if u not in out:
                out.add(u)
                stack.extend(self._children[u])
        return frozenset(out)

    @cached_property
    def levels(self) -> tuple[int, ...]:
        lev = [-1] * len(self.nodes)
        lev[self.root] = 0
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            for c in self._children[u]:
                if lev[c] < 0:
                    lev[c] = lev[u] + 1
                    queue.append(c)
        return tuple(lev)

    @cached_property
    def _ancestor_sets(self) -> tuple[frozenset[int], ...]:
        out: list[frozenset[int] | None] = [None] * len(self.nodes)
        for u in self.topological_order:
            acc: set[int] = set()
            for p in self.nodes[u].parents:
                acc.add(p)
                acc |= out[p]
            out[u] = frozenset(acc)
        return tuple(out)

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        indeg = [len(rec.parents) for rec in self.nodes]
        queue = deque([self.root])
        order = []
        while queue:
            u = queue.popleft()
            order.append(u)
            for c in self._children[u]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return tuple(order)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(r.id for r in self.nodes if r.is_leaf and r.id != self.root)

    @cached_property
    def non_root(self) -> tuple[int, ...]:
        return tuple(r.id for r in self.nodes if r.id != self.root)

    @property
    def depth(self) -> int:
        return max(self.levels)

    @property
    def is_tree(self) -> bool:
        return all(len(r.parents) <= 1 for r in self.nodes)

    def label_of(self, leaf) -> int:
        rec = self.nodes[self._check(leaf)]
        if rec.class_label is None:
            raise TaxonomyError(f"node {leaf} is not a leaf")
        return rec.class_label

    @cached_property
    def leaf_by_label(self) -> dict[int, int]:
        return {self.nodes[i].class_label: i for i in self.leaves}

    def root_paths(self, leaf, cap: int | None = None) -> list[tuple[int, ...]]:
        """All maximal root-to-leaf paths, excluding the virtual root.

        Paths are returned in lexicographic order and truncated to ``cap``
        (default: the taxonomy's ``path_cap``).
        """
        leaf = self._check(leaf)
        if not self.nodes[leaf].is_leaf or leaf == self.root:
            raise TaxonomyError(f"node {leaf} is not a leaf")
        cap = self.path_cap if cap is None else cap
        paths: list[tuple[int, ...]] = []

        # DFS from the root, children in ascending order -> lexicographic output
        anc = self.ancestors(leaf)
        stack: list[tuple[int, tuple[int, ...]]] = [(self.root, ())]
        while stack and len(paths) < cap:
            u, prefix = stack.pop()
            if u == leaf:
                paths.append(prefix)
                continue
            nxt = [c for c in self._children[u] if c == leaf or c in anc]
            for c in reversed(nxt):
                stack.append((c, prefix + (c,)))
        return paths


def build_balanced_tree(b: int, L: int) -> Taxonomy:
    """Complete b-ary tree of depth L.

    Non-root nodes are numbered breadth-first from 0; the virtual root takes
    the last id, matching the convention of :func:`from_records`.
    """
    if b < 2 or L < 1:
        raise ConfigError(f"balanced tree needs b >= 2 and L >= 1, got b={b}, L={L}")
    n = sum(b**lev for lev in range(1, L + 1))
    root = n
    records: list[NodeRecord] = []
    frontier = [root]
    names = {root: ""}
    label = 0
    for lev in range(1, L + 1):
        nxt = []
        for p in frontier:
            for k in range(b):
                i = len(records)
                leaf = lev == L
                names[i] = f"{names[p]}.{k}" if names[p] else f"n{k}"
                records.append(NodeRecord(i, names[i], (p,), leaf, label if leaf else None))
                if leaf:
                    label += 1
                nxt.append(i)
        frontier = nxt
    records.append(NodeRecord(root, "<root>", (), False, None))
    return Taxonomy(tuple(records), root=root)


def from_records(entries, path_cap: int = DEFAULT_PATH_CAP) -> Taxonomy:
    """Build a taxonomy from file-style entries and add a virtual root.

    ``entries`` is a list of dicts with keys id, name, parents, label. Nodes
    without parents become children of the virtual root, which receives id
    ``len(entries)``. Leaves without a label are numbered after the largest
    given label, in id order.
    """
    n = len(entries)
    by_id = {}
    for e in entries:
        try:
            i = int(e["id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"taxonomy entry without a valid integer id: {e!r}") from exc
        if i in by_id:
            raise TaxonomyError(f"duplicate node id {i}")
        by_id[i] = e
    if sorted(by_id) != list(range(n)):
        raise TaxonomyError("taxonomy node ids must be dense integers starting at 0")

    root = n
    has_child = [False] * n
    for e in entries:
        for p in e.get("parents") or []:
            if not 0 <= int(p) < n:
                raise TaxonomyError(f"node {e['id']} references unknown parent {p}")
            has_child[int(p)] = True

    given = [by_id[i].get("label") for i in range(n)]
    next_label = max([g for g in given if g is not None], default=-1) + 1
    records = []
    for i in range(n):
        e = by_id[i]
        parents = tuple(sorted({int(p) for p in (e.get("parents") or [])})) or (root,)
        leaf = not has_child[i]
        label = e.get("label")
        if label is not None and not leaf:
            raise TaxonomyError(f"internal node {i} carries a class label")
        if leaf and label is None:
            label = next_label
            next_label += 1
        records.append(NodeRecord(i, str(e.get("name", i)), parents, leaf, None if label is None else int(label)))
    records.append(NodeRecord(root, "<root>", (), False, None))
    tax = Taxonomy(tuple(records), root=root, path_cap=path_cap)
    labels = [tax.nodes[i].class_label for i in tax.leaves]
    if len(set(labels)) != len(labels):
        raise TaxonomyError("leaf class labels must be unique")
    return tax


def load_taxonomy(path, path_cap: int = DEFAULT_PATH_CAP) -> Taxonomy:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise FormatError(f"taxonomy file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"taxonomy file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise FormatError(f"taxonomy file {path} must hold an object with a 'nodes' list")
    return from_records(doc["nodes"], path_cap=path_cap)


def taxonomy_to_records(t: Taxonomy) -> list[dict]:
    """Inverse of :func:`from_records`: drop the virtual root, renumber densely."""
    ids = [i for i in range(len(t)) if i != t.root]
    remap = {old: new for new, old in enumerate(ids)}
    out = []
    for old in ids:
        rec = t.nodes[old]
        out.append({
            "id": remap[old],
            "name": rec.name,
            "parents": [remap[p] for p in rec.parents if p != t.root],
            "label": rec.class_label,
        })
    return out


def save_taxonomy(t: Taxonomy, path):
    Path(path).write_text(json.dumps({"nodes": taxonomy_to_records(t)}, indent=1) + "\n")
