"""Greedy sparse recovery: OMP on the full dictionary and top-down beam search.

Both engines score atoms by absolute cosine similarity with the residual and
refit the whole support by least squares after each selection. Codes are
reported against the original (unnormalized) atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dictionary import HierDictionary
from .errors import ConfigError, ZeroVectorError
from .numerics import as_matrix, as_vector, least_squares_with_rank
from .taxonomy import Taxonomy

# residual counted as exactly zero below this fraction of ||x||
ZERO_RESIDUAL_RTOL = 1e-12


@dataclass(frozen=True)
class PursuitConfig:
    beam: int = 4
    max_steps: int = 16
    tolerance: float = 1e-6
    sparsity: int = 8

    def __post_init__(self):
        if self.beam < 1 or self.max_steps < 1 or self.sparsity < 1:
            raise ConfigError(f"beam, max_steps and sparsity must be >= 1: {self}")
        if not self.tolerance >= 0:
            raise ConfigError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass
class SparseCode:
    support: list[int]
    coefficients: np.ndarray
    residual_norm: float
    path: list[int] | None = None
    # columns that made the sub-dictionary rank deficient (skipped or min-norm solved)
    rank_deficient: list[int] = field(default_factory=list)

    def dense(self, k: int) -> np.ndarray:
        z = np.zeros(k)
        z[self.support] = self.coefficients
        return z


@dataclass(frozen=True, eq=False)
class Hypothesis:
    support: tuple[int, ...]
    code: np.ndarray
    residual: np.ndarray
    last_node: int | None
    path: tuple[int, ...] = ()
    rank_deficient: tuple[int, ...] = ()

    @property
    def rss(self) -> float:
        return float(self.residual @ self.residual)

    def is_null(self) -> bool:
        return not self.support


def _cosine_scores(r: np.ndarray, atoms: np.ndarray, norms: np.ndarray) -> np.ndarray:
    nr = np.linalg.norm(r)
    if nr == 0:
        return np.zeros(atoms.shape[1])
    return np.abs(r @ atoms) / (norms * nr)


def omp_trace(x, D, sparsity: int, rule: str = "cosine") -> tuple[SparseCode, list[int]]:
    """OMP on a raw matrix; returns the code and the ordered selection trace.

    ``rule='cosine'`` selects ``argmax |<r, d_j>| / (||d_j|| ||r||)``;
    ``rule='plain'`` selects ``argmax |<r, d_j>|``. Candidates whose addition
    makes the support rank deficient are skipped in favour of the next best.
    """
    x = as_vector(x)
    A = as_matrix(D)
    if A.shape[0] != x.shape[0]:
        raise ConfigError(f"dictionary has {A.shape[0]} rows, signal has {x.shape[0]}")
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ZeroVectorError("cannot run pursuit on a zero signal")
    if rule == "cosine":
        norms = np.linalg.norm(A, axis=0)
    elif rule == "plain":
        norms = np.ones(A.shape[1])
    else:
        raise ConfigError(f"unknown selection rule {rule!r}")

    k = A.shape[1]
    support: list[int] = []
    skipped: list[int] = []
    banned = np.zeros(k, dtype=bool)
    coef = np.zeros(0)
    r = x.copy()
    for _ in range(min(sparsity, k)):
        scores = _cosine_scores(r, A, np.where(norms > 0, norms, 1.0))
        scores[banned] = -np.inf
        chosen = None
        # stable descending order, ties -> lower column
        for j in np.argsort(-scores, kind="stable"):
            if not np.isfinite(scores[j]):
                break
            w, rank = least_squares_with_rank(A[:, support + [int(j)]], x)
            if rank == len(support) + 1:
                chosen = int(j)
                break
            banned[j] = True
            skipped.append(int(j))
        if chosen is None:
            break
        support.append(chosen)
        banned[chosen] = True
        coef = w
        r = x - A[:, support] @ coef
        if np.linalg.norm(r) <= ZERO_RESIDUAL_RTOL * nx:
            break
    code = SparseCode(list(support), coef, float(np.linalg.norm(r)), None, skipped)
    return code, list(support)


def omp(x, D: HierDictionary, cfg: PursuitConfig) -> SparseCode:
    return omp_trace(x, D.atoms, cfg.sparsity, rule="cosine")[0]


def extend_active_dict(h: Hypothesis, t_step: int, D: HierDictionary, taxonomy: Taxonomy) -> list[int]:
    """Atom columns a hypothesis may add next.

    The first step (or a null hypothesis) sees the root-child atoms; later
    steps see the edge atoms from the hypothesis' last node to its children.
    """
    if t_step == 0 or h.last_node is None:
        return [c for _, c in D.children_columns(None)]
    return [c for _, c in D.children_columns(h.last_node)]


def extend_hypothesis(h: Hypothesis, candidates, x, D: HierDictionary) -> list[Hypothesis]:
    if not candidates:
        raise ConfigError("extend_hypothesis needs at least one candidate")
    out = []
    for c in candidates:
        c = int(c)
        support = h.support + (c,)
        sub = D.atoms[:, support]
        w, rank = least_squares_with_rank(sub, x)
        resid = x - sub @ w
        node = D.meta[c].node
        flagged = h.rank_deficient + ((c,) if rank < len(support) else ())
        out.append(Hypothesis(support, w, resid, node, h.path + (node,), flagged))
    return out


def _prune_key(h: Hypothesis):
    return (h.rss, h.support)


def prune_beam(hypotheses, B: int) -> list[Hypothesis]:
    """Keep the ``min(B, n)`` hypotheses with the smallest squared residual.

    Ties fall back to the lexicographic order of the (ordered) support.
    """
    if B < 1:
        raise ConfigError(f"beam size must be >= 1, got {B}")
    return sorted(hypotheses, key=_prune_key)[:B]


def _top_candidates(r, cols, D: HierDictionary, B: int) -> list[int]:
    if not cols:
        return []
    cols = np.asarray(cols)
    sub = D.atoms[:, cols]
    scores = _cosine_scores(r, sub, np.linalg.norm(sub, axis=0))
    order = np.lexsort((cols, -scores))
    return [int(c) for c in cols[order[: min(B, len(cols))]]]


def hierarchical_omp(x, D: HierDictionary, t: Taxonomy, cfg: PursuitConfig) -> SparseCode:
    x = as_vector(x)
    if D.n_atoms == 0:
        raise ConfigError("empty dictionary")
    if x.shape[0] != D.dim:
        raise ConfigError(f"dictionary has {D.dim} rows, signal has {x.shape[0]}")
    if np.linalg.norm(x) == 0:
        raise ZeroVectorError("cannot run pursuit on a zero signal")

    beam = [Hypothesis((), np.zeros(0), x.copy(), None)]
    for step in range(cfg.max_steps):
        if min(np.linalg.norm(h.residual) for h in beam) < cfg.tolerance:
            break
        pool: list[Hypothesis] = []
        extended = False
        for h in beam:
            cands = _top_candidates(h.residual, extend_active_dict(h, step, D, t), D, cfg.beam)
            if not cands:
                pool.append(h)  # leaf reached: keep competing unchanged
                continue
            pool.extend(extend_hypothesis(h, cands, x, D))
            extended = True
        seen = set()
        unique = []
        for h in sorted(pool, key=_prune_key):
            key = frozenset(h.support)
            if key not in seen:
                seen.add(key)
                unique.append(h)
        beam = prune_beam(unique, cfg.beam)
        if not extended:
            break

    best = min(beam, key=_prune_key)
    return SparseCode(
        list(best.support),
        best.code,
        float(np.linalg.norm(best.residual)),
        list(best.path),
        list(best.rank_deficient),
    )
