"""Exception hierarchy.

Every error raised on purpose by the library derives from ``HierSparseError``.
The three middle classes map onto CLI exit codes (config=2, data=3,
numerical=4).
"""


class HierSparseError(Exception):
    """Base class for all library errors."""


class ConfigError(HierSparseError, ValueError):
    """Invalid parameters or preconditions supplied by the caller."""


class DataError(HierSparseError, ValueError):
    """Malformed or inconsistent input data (files, taxonomies, embeddings)."""


class NumericalError(HierSparseError, ArithmeticError):
    """A linear-algebra routine cannot produce a meaningful answer."""


class ShapeError(ConfigError):
    pass


class NonFiniteError(DataError):
    pass


class ZeroVectorError(NumericalError):
    pass


class RankDeficientError(NumericalError):
    pass


class EmptyNullspaceError(NumericalError):
    pass


class DepthDimensionError(ConfigError):
    """Ambient dimension too small for the requested hierarchy (need d >= L + b)."""


class TaxonomyError(DataError):
    pass


class MissingEmbeddingError(DataError):
    pass


class FormatError(DataError):
    pass
