"""Hierarchical sparse coding over concept-embedding taxonomies."""

from .dictionary import HierDictionary, build_dictionary, erc, mutual_coherence, normalize_columns, reconstruct_from_path
from .errors import HierSparseError
from .pursuit import PursuitConfig, SparseCode, hierarchical_omp, omp
from .synth import ConeSchedule, EmbeddingSet, SampleConfig, generate_embeddings, make_schedule, sample_noisy
from .taxonomy import Taxonomy, build_balanced_tree, load_taxonomy

__version__ = "0.1.0"

__all__ = [
    "ConeSchedule",
    "EmbeddingSet",
    "HierDictionary",
    "HierSparseError",
    "PursuitConfig",
    "SampleConfig",
    "SparseCode",
    "Taxonomy",
    "build_balanced_tree",
    "build_dictionary",
    "erc",
    "generate_embeddings",
    "hierarchical_omp",
    "load_taxonomy",
    "make_schedule",
    "mutual_coherence",
    "normalize_columns",
    "omp",
    "reconstruct_from_path",
    "sample_noisy",
]
