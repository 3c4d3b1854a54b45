"""Recovery metrics, geometric audits, baselines and the code classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dictionary import HierDictionary
from .errors import ConfigError, ZeroVectorError
from .numerics import as_vector, row_cosines
from .synth import ConeSchedule, EmbeddingSet
from .taxonomy import Taxonomy


@dataclass
class RecoveryReport:
    sample_id: int
    true_leaf: int
    support: list[int]
    matched_path: tuple[int, ...]
    precision: float
    recall: float
    residual_norm: float
    wall_time: float = 0.0
    predicted_leaf: int | None = None


@dataclass
class AuditReport:
    name: str
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


# ---------------------------------------------------------------- metrics

def support_precision_recall(recovered, leaf: int, t: Taxonomy, D: HierDictionary):
    """Score ``recovered`` atoms against the best-matching valid path of ``leaf``.

    Best match = highest F1, then highest precision, then lexicographically
    smallest path. Returns ``(precision, recall, path)``.
    """
    rec = {int(c) for c in recovered}
    paths = t.root_paths(leaf)
    best = None
    for path in paths:
        cols = set(D.path_columns(path))
        hit = len(rec & cols)
        p = hit / len(rec) if rec else 0.0
        r = hit / len(cols)
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        key = (-f1, -p, path)
        if best is None or key < best[0]:
            best = (key, p, r, path)
    _, p, r, path = best
    return p, r, path


# ----------------------------------------------------------------- audits

def _non_root_matrix(e: EmbeddingSet, t: Taxonomy):
    ids = [i for i in t.non_root if i in e]
    return ids, e.stack(ids)


def audit_orthogonality(e: EmbeddingSet, t: Taxonomy, n_random_pairs: int = 1000, seed: int = 0) -> AuditReport:
    """Cosine of each child-parent difference with every ancestor of the child.

    Ancestors exclude the virtual root. A control set pairs random difference
    vectors with random nodes that are not ancestors of the child.
    """
    rep = AuditReport("orthogonality")
    edges = [(j, p) for j in t.non_root for p in t.parents(j) if p != t.root and j in e and p in e]
    on_path = []
    for j, p in edges:
        diff = e[j] - e[p]
        nd = np.linalg.norm(diff)
        for a in sorted(t.ancestors(j) - {t.root}):
            va = e[a]
            c = float(diff @ va / (nd * np.linalg.norm(va))) if nd > 0 else 0.0
            on_path.append(c)
            rep.rows.append({"kind": "ancestor", "child": j, "parent": p, "other": a, "cosine": c})

    control = []
    ids = [i for i in t.non_root if i in e]
    if edges and n_random_pairs > 0:
        rng = np.random.default_rng(seed)
        tries = 0
        while len(control) < n_random_pairs and tries < 20 * n_random_pairs:
            tries += 1
            j, p = edges[int(rng.integers(len(edges)))]
            a = ids[int(rng.integers(len(ids)))]
            if a == j or a in t.ancestors(j):
                continue
            diff = e[j] - e[p]
            c = float(diff @ e[a] / (np.linalg.norm(diff) * np.linalg.norm(e[a])))
            control.append(c)
            rep.rows.append({"kind": "random", "child": j, "parent": p, "other": a, "cosine": c})

    rep.summary = {
        "n_on_path": len(on_path),
        "max_abs_on_path": float(np.max(np.abs(on_path))) if on_path else 0.0,
        "mean_on_path": float(np.mean(on_path)) if on_path else 0.0,
        "mean_abs_on_path": float(np.mean(np.abs(on_path))) if on_path else 0.0,
        "n_random": len(control),
        "mean_random": float(np.mean(control)) if control else 0.0,
        "mean_abs_random": float(np.mean(np.abs(control))) if control else 0.0,
    }
    return rep


def audit_clusters(e: EmbeddingSet, t: Taxonomy, schedule: ConeSchedule, boundary_tol: float = 1e-9) -> AuditReport:
    """Cone intrusion, containment violation and sibling separation per node.

    For each internal node ``i`` with half-angle ``theta = theta_{lev(i)}``:

    * intrusion: fraction of non-descendants ``j`` strictly inside the cone,
      ``angle(a_i, a_j) < theta - boundary_tol`` (a parent sits exactly on the
      boundary of its child's cone by construction);
    * containment: mean of ``max(0, angle(a_i, a_j) - theta)`` over descendants;
    * siblings: pairs of children closer than the sum of their nominal
      half-angles, and closer than the sum of their realised subtree radii.
    """
    if schedule.depth < t.depth:
        raise ConfigError(f"schedule covers {schedule.depth} levels but the taxonomy has depth {t.depth}")
    rep = AuditReport("clusters")
    ids, M = _non_root_matrix(e, t)
    pos = {i: k for k, i in enumerate(ids)}
    Mn = M / np.linalg.norm(M, axis=1)[:, None]

    radius = {}
    total_intr = 0
    total_viol = 0.0
    n_internal = 0
    for i in ids:
        if t.is_leaf(i):
            radius[i] = 0.0
            continue
        n_internal += 1
        theta = schedule.angle(t.level(i))
        ang = np.arccos(np.clip(Mn @ Mn[pos[i]], -1.0, 1.0))
        desc = np.zeros(len(ids), dtype=bool)
        for j in t.descendants(i):
            if j in pos:
                desc[pos[j]] = True
        other = ~desc
        other[pos[i]] = False
        n_other = int(other.sum())
        intr = int(np.sum(ang[other] < theta - boundary_tol))
        excess = np.maximum(0.0, ang[desc] - theta)
        radius[i] = float(ang[desc].max()) if desc.any() else 0.0
        row = {
            "node": i,
            "level": t.level(i),
            "theta": theta,
            "n_non_descendants": n_other,
            "intrusions": intr,
            "intrusion_proportion": intr / n_other if n_other else 0.0,
            "n_descendants": int(desc.sum()),
            "mean_violation": float(excess.mean()) if excess.size else 0.0,
            "max_violation": float(excess.max()) if excess.size else 0.0,
            "subtree_radius": radius[i],
        }
        rep.rows.append(row)
        total_intr += intr
        total_viol += row["mean_violation"]

    nominal_bad = 0
    realised_bad = 0
    pairs = 0
    for p in [t.root] + [i for i in ids if not t.is_leaf(i)]:
        kids = [c for c in t.children(p) if c in pos]
        for a_i in range(len(kids)):
            for b_i in range(a_i + 1, len(kids)):
                j, k = kids[a_i], kids[b_i]
                ang = float(np.arccos(np.clip(Mn[pos[j]] @ Mn[pos[k]], -1.0, 1.0)))
                pairs += 1
                nominal_bad += ang <= schedule.angle(t.level(j)) + schedule.angle(t.level(k))
                realised_bad += ang <= radius.get(j, 0.0) + radius.get(k, 0.0)

    rep.summary = {
        "n_internal": n_internal,
        "total_intrusions": total_intr,
        "max_intrusion_proportion": max((r["intrusion_proportion"] for r in rep.rows), default=0.0),
        "total_mean_violation": total_viol,
        "max_violation": max((r["max_violation"] for r in rep.rows), default=0.0),
        "sibling_pairs": pairs,
        "sibling_nominal_overlaps": int(nominal_bad),
        "sibling_realised_overlaps": int(realised_bad),
    }
    return rep


def audit_simplex(e: EmbeddingSet, t: Taxonomy) -> AuditReport:
    """Deviation of each sibling group's difference Gram from a regular simplex.

    The virtual root counts as the origin. Deviation is
    ``max |G - P| / g`` with ``g`` the mean diagonal and ``P`` the pattern with
    diagonal ``g`` and off-diagonal ``-g/(b-1)``.
    """
    rep = AuditReport("simplex")
    for p in [t.root] + list(t.non_root):
        kids = [c for c in t.children(p) if c in e]
        if len(kids) < 2 or (p != t.root and p not in e):
            continue
        base = np.zeros(e.dim) if p == t.root else e[p]
        Dm = np.stack([e[c] - base for c in kids])
        G = Dm @ Dm.T
        b = len(kids)
        g = float(np.mean(np.diag(G)))
        P = np.full((b, b), -g / (b - 1))
        np.fill_diagonal(P, g)
        dev = float(np.abs(G - P).max() / g) if g > 0 else math.inf
        off = G[~np.eye(b, dtype=bool)]
        rep.rows.append({
            "node": p,
            "n_children": b,
            "gram_diag_mean": g,
            "off_diag_ratio_mean": float(off.mean() / g) if g > 0 else math.nan,
            "deviation": dev,
        })
    devs = [r["deviation"] for r in rep.rows]
    rep.summary = {"n_nodes": len(devs), "max_deviation": max(devs, default=0.0), "mean_deviation": float(np.mean(devs)) if devs else 0.0}
    return rep


# -------------------------------------------------------------- baselines

def nn_classify(x, e: EmbeddingSet, leaves) -> int:
    """Leaf whose embedding has the largest cosine with ``x`` (ties: lower id)."""
    x = as_vector(x)
    if np.linalg.norm(x) == 0:
        raise ZeroVectorError("cannot classify a zero vector")
    leaves = sorted(int(i) for i in leaves)
    scores = row_cosines(e.stack(leaves), x)
    return leaves[int(np.argmax(scores))]


def hierarchical_nn(x, e: EmbeddingSet, t: Taxonomy) -> tuple[list[int], int]:
    """Greedy descent from the root, always moving to the most similar child."""
    x = as_vector(x)
    path = []
    node = t.root
    while not t.is_leaf(node):
        kids = sorted(t.children(node))
        scores = row_cosines(e.stack(kids), x)
        node = kids[int(np.argmax(scores))]
        path.append(node)
    return path, node


# ------------------------------------------------------------- classifier

@dataclass
class LinearModel:
    weights: np.ndarray  # (n_features, n_classes)
    bias: np.ndarray
    classes: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    def logits(self, X):
        return X @ self.weights + self.bias


def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    P = np.exp(Z)
    return P / P.sum(axis=1, keepdims=True)


def train_linear_classifier(
    codes,
    labels,
    epochs: int = 500,
    lr: float = 0.1,
    weight_decay: float = 1e-4,
    seed: int = 0,
    init_scale: float = 0.0,
) -> LinearModel:
    """Multinomial logistic regression by full-batch gradient descent.

    ``codes`` is an ``(n, k)`` array or scipy sparse matrix of densified sparse
    codes. Weights start at zero unless ``init_scale > 0`` (then seeded
    Gaussian). The L2 penalty ``weight_decay/2 ||W||^2`` excludes the bias.
    """
    X = codes if sp.issparse(codes) else np.asarray(codes, dtype=np.float64)
    if not sp.issparse(X):
        X = np.atleast_2d(X)
    y = np.asarray(labels)
    classes, yi = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ConfigError("classifier needs at least two classes")
    n, k = X.shape
    C = len(classes)
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((k, C)) * init_scale if init_scale > 0 else np.zeros((k, C))
    bvec = np.zeros(C)
    Y = np.zeros((n, C))
    Y[np.arange(n), yi] = 1.0
    history = []
    for _ in range(epochs):
        P = _softmax(X @ W + bvec)
        loss = -np.mean(np.log(P[np.arange(n), yi] + 1e-300)) + 0.5 * weight_decay * float(np.sum(W * W))
        history.append(float(loss))
        G = (P - Y) / n
        W = W - lr * (np.asarray(X.T @ G) + weight_decay * W)
        bvec = bvec - lr * G.sum(axis=0)
    return LinearModel(W, bvec, classes, history)


def predict(model: LinearModel, codes) -> np.ndarray:
    X = codes if sp.issparse(codes) else np.atleast_2d(np.asarray(codes, dtype=np.float64))
    Z = np.asarray(model.logits(X))
    return model.classes[np.argmax(Z, axis=1)]


def densify(codes, k: int, sparse: bool = True):
    """Stack SparseCodes into an ``(n, k)`` matrix, coefficients at their columns."""
    rows, cols, vals = [], [], []
    for r, c in enumerate(codes):
        rows.extend([r] * len(c.support))
        cols.extend(c.support)
        vals.extend(np.asarray(c.coefficients, dtype=np.float64).tolist())
    M = sp.csr_matrix((vals, (rows, cols)), shape=(len(codes), k))
    return M if sparse else M.toarray()
