"""Exception hierarchy shared across the engine."""


class MosaixError(Exception):
    """Base class for all engine errors."""


class EmptyInput(MosaixError):
    """An operation received an empty patch list."""


class DimensionMismatch(MosaixError):
    """Vector or embedding dimensions do not agree."""


class ZeroVector(MosaixError):
    """Cosine distance requested on a zero-norm vector."""


class TooShort(MosaixError):
    """Vector too short to binarize (needs at least two entries)."""


class EmptySet(MosaixError):
    """A set-to-set distance received a set with zero rows."""


class MetricKindMismatch(MosaixError):
    """Metric incompatible with the embedding kind (e.g. Hamming on floats)."""


class NoCandidates(MosaixError):
    """Patient exclusion left no candidates to rank."""


class EmptyRetrieval(MosaixError):
    """Majority vote requested on a retrieval with no candidates."""


class UnknownLabel(MosaixError):
    """A prediction or truth label is not in the dataset's class set."""


class GridMismatch(MosaixError):
    """Reports passed to the table renderer do not share a (dataset, k) grid."""


class ManifestError(MosaixError):
    """Structurally invalid manifest JSON (unknown or missing fields, bad types)."""


class FormatError(MosaixError):
    """Malformed engine file (embedding binary, patch CSV, prediction CSV)."""


class BadMagic(FormatError):
    """Embedding file does not start with the expected magic bytes."""


class UnsupportedVersion(FormatError):
    """Embedding file declares a format version this reader does not know."""


class TruncatedPayload(FormatError):
    """Embedding file payload length does not match its header."""
