"""Synthetic hierarchical concept embeddings.

Construction, for a balanced tree:

* root children: a regular simplex in the first ``b`` coordinates, each of
  norm ``root_child_norm``;
* children of an internal node ``p``: ``a_p + lam * V s_j`` where ``V`` holds
  ``b - 1`` orthonormal directions orthogonal to every vector on the path to
  ``p`` (``p`` included), ``s_j`` are unit-norm simplex vertices and
  ``lam = ||a_p|| tan(theta)`` with ``theta`` the half-angle of the children's
  level.

This gives hierarchical orthogonality, a regular simplex of child-parent
differences, and ``angle(a_child, a_p) == theta`` by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DepthDimensionError, MissingEmbeddingError, TaxonomyError
from .numerics import orthonormal_nullspace_basis
from .taxonomy import Taxonomy

MIN_RULE = "min-rule"
RAW_RATE = "raw-rate"


@dataclass(frozen=True)
class ConeSchedule:
    """Half-angles per level. ``per_level[l - 1]`` is the cone of a level-``l`` node."""

    theta0: float
    rate: float
    per_level: tuple[float, ...]
    mode: str = RAW_RATE

    def angle(self, level: int) -> float:
        if level == 0:
            return self.theta0
        if not 1 <= level <= len(self.per_level):
            raise ConfigError(f"schedule has no half-angle for level {level} (depth {len(self.per_level)})")
        return self.per_level[level - 1]

    @property
    def depth(self) -> int:
        return len(self.per_level)


def make_schedule(theta0: float, r: float, b: int, L: int, mode: str = RAW_RATE) -> ConeSchedule:
    """Geometric half-angle schedule, angles in radians.

    ``min-rule`` shrinks by ``min(r, 1/b)`` per level (sibling cones can be
    packed disjointly); ``raw-rate`` shrinks by ``r`` alone.
    """
    if not 0 < theta0 < math.pi / 2:
        raise ConfigError(f"theta0 must lie in (0, pi/2), got {theta0}")
    if not 0 < r < 0.5:
        raise ConfigError(f"rate r must lie in (0, 1/2), got {r}")
    if b < 2 or L < 1:
        raise ConfigError(f"need b >= 2 and L >= 1, got b={b}, L={L}")
    if mode == MIN_RULE:
        factor = min(r, 1.0 / b)
    elif mode == RAW_RATE:
        factor = r
    else:
        raise ConfigError(f"unknown schedule mode {mode!r}")
    angles = []
    theta = theta0
    for _ in range(L):
        theta = factor * theta
        angles.append(theta)
    return ConeSchedule(theta0, r, tuple(angles), mode)


def canonical_simplex(b: int) -> np.ndarray:
    """Centred simplex vertices ``e_j - 1/b``, one per row (shape ``b x b``)."""
    if b < 2:
        raise ConfigError(f"simplex needs b >= 2, got {b}")
    return np.eye(b) - 1.0 / b


def unit_simplex_coords(b: int) -> np.ndarray:
    """Unit-norm regular simplex vertices expressed in ``R^(b-1)`` (rows).

    Pairwise inner products are ``-1/(b-1)``.
    """
    S = canonical_simplex(b) * math.sqrt(b / (b - 1))
    # orthonormal basis of the sum-zero hyperplane of R^b
    Q = orthonormal_nullspace_basis(np.ones((b, 1)))
    return S @ Q


@dataclass
class EmbeddingSet:
    dim: int
    vectors: dict[int, np.ndarray] = field(default_factory=dict)
    origin_norm: float | None = None

    def __getitem__(self, node) -> np.ndarray:
        try:
            return self.vectors[int(node)]
        except KeyError:
            raise MissingEmbeddingError(f"no embedding for node {node}") from None

    def __contains__(self, node) -> bool:
        return int(node) in self.vectors

    def __len__(self):
        return len(self.vectors)

    def ids(self) -> list[int]:
        return sorted(self.vectors)

    def stack(self, ids) -> np.ndarray:
        ids = list(ids)
        if not ids:
            return np.zeros((0, self.dim))
        return np.stack([self[i] for i in ids])


@dataclass(frozen=True)
class SampleConfig:
    noise_variance: float = 1e-5
    samples_per_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if not self.noise_variance >= 0:
            raise ConfigError(f"noise variance must be >= 0, got {self.noise_variance}")
        if self.samples_per_leaf < 1:
            raise ConfigError(f"samples_per_leaf must be >= 1, got {self.samples_per_leaf}")


def _branching(t: Taxonomy) -> int:
    counts = {len(t.children(i)) for i in range(len(t)) if not t.is_leaf(i)}
    if len(counts) != 1:
        raise TaxonomyError("synthetic generation requires a balanced tree (uniform branching)")
    return counts.pop()


def _random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def generate_embeddings(
    t: Taxonomy,
    d: int,
    schedule: ConeSchedule,
    root_child_norm: float = 0.8,
    seed: int = 0,
) -> EmbeddingSet:
    if not t.is_tree:
        raise TaxonomyError("synthetic generation requires a tree (a node has several parents)")
    b = _branching(t)
    L = t.depth
    if d < L + b:
        raise DepthDimensionError(
            f"ambient dimension d={d} is too small for depth L={L} and branching b={b}: "
            f"the depth-dimension condition requires d >= L + b = {L + b}"
        )
    if schedule.depth < L:
        raise ConfigError(f"schedule covers {schedule.depth} levels but the tree has depth {L}")
    if root_child_norm <= 0:
        raise ConfigError(f"root_child_norm must be positive, got {root_child_norm}")

    rng = np.random.default_rng(seed)
    simplex = unit_simplex_coords(b)
    emb = EmbeddingSet(dim=d, origin_norm=float(root_child_norm))

    # root children: unit simplex in the first b coordinates
    top = canonical_simplex(b) * math.sqrt(b / (b - 1)) * root_child_norm
    for k, j in enumerate(t.children(t.root)):
        v = np.zeros(d)
        v[:b] = top[k]
        emb.vectors[j] = v

    for p in t.topological_order:
        if p == t.root or t.is_leaf(p):
            continue
        chain = sorted(t.ancestors(p) - {t.root}, key=t.level) + [p]
        A = np.stack([emb[i] for i in chain], axis=1)
        U = orthonormal_nullspace_basis(A)
        V = U @ _random_orthogonal(U.shape[1], rng)[:, : b - 1]
        parent = emb[p]
        theta = schedule.angle(t.level(p) + 1)
        lam = np.linalg.norm(parent) * math.tan(theta)
        for k, j in enumerate(t.children(p)):
            emb.vectors[j] = parent + lam * (V @ simplex[k])
    return emb


def fill_internal_means(t: Taxonomy, emb: EmbeddingSet) -> EmbeddingSet:
    """Give every internal non-root node the mean of its children's vectors.

    For hierarchies where only leaf (class) embeddings are available.
    """
    out = EmbeddingSet(emb.dim, dict(emb.vectors), emb.origin_norm)
    for u in reversed(t.topological_order):
        if u == t.root or u in out:
            continue
        kids = t.children(u)
        out.vectors[u] = np.mean([out[c] for c in kids], axis=0)
    return out


def sample_noisy(e: EmbeddingSet, t: Taxonomy, cfg: SampleConfig) -> list[tuple[np.ndarray, int]]:
    """``samples_per_leaf`` draws of ``a_leaf + eps``, ``eps ~ N(0, var I)``.

    Leaves are visited in ascending id order, each with its own child seed
    spawned from ``cfg.seed``.
    """
    leaves = sorted(t.leaves)
    for leaf in leaves:
        if leaf not in e:
            raise MissingEmbeddingError(f"no embedding for leaf {leaf}")
    sd = math.sqrt(cfg.noise_variance)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(leaves))
    out = []
    for leaf, ss in zip(leaves, seeds):
        base = e[leaf]
        if sd == 0:
            out.extend((base.copy(), leaf) for _ in range(cfg.samples_per_leaf))
            continue
        noise = np.random.default_rng(ss).standard_normal((cfg.samples_per_leaf, e.dim)) * sd
        out.extend((base + n, leaf) for n in noise)
    return out
