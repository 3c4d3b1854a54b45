"""Independent instance builders shared by unit and acceptance tests."""

import json
import math

import numpy as np

from hiersparse.dictionary import build_dictionary, mutual_coherence
from hiersparse.synth import EmbeddingSet
from hiersparse.taxonomy import from_records

from conftest import FIXTURES


def incoherent_instance(seed, d_range=(128, 320), k_range=(150, 400)):
    """Random unit-ish dictionary plus a code whose sparsity meets the coherence bound."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(*d_range))
    k = int(rng.integers(*k_range))
    D = rng.standard_normal((d, k)) * rng.uniform(0.5, 2.0, k)
    mu = mutual_coherence(D)
    s_max = math.ceil(0.5 * (1 + 1 / mu)) - 1  # largest s with s < (1 + 1/mu) / 2
    s = int(rng.integers(1, s_max + 1))
    support = np.sort(rng.choice(k, size=s, replace=False))
    z = np.zeros(k)
    z[support] = rng.choice([-1, 1], size=s) * rng.uniform(0.5, 2.0, s)
    return D, z, set(support.tolist()), mu, s


def load_restricted_erc():
    doc = json.loads((FIXTURES / "restricted_erc.json").read_text())
    t = from_records(doc["taxonomy"])
    e = EmbeddingSet(doc["dim"], {int(k): np.array(v) for k, v in doc["embeddings"].items()})
    return doc, t, build_dictionary(e, t)
