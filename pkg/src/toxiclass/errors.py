"""Exception hierarchy.

ConfigError maps to CLI exit code 2, DataError subclasses to 3, and every
other ToxiclassError to 4.
"""


class ToxiclassError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ToxiclassError):
    """Invalid experiment configuration; raised before any work starts."""


class DataError(ToxiclassError):
    """Problem with an input dataset or serialized artifact."""


class MalformedCsv(DataError):
    """Row arity mismatch, unterminated quote, or similar CSV damage."""


class MissingColumn(DataError):
    """A required header column is absent."""


class NonBinaryLabel(DataError):
    """A label flag is not exactly 0 or 1."""


class ManifestMismatch(DataError):
    """Model header and manifest disagree (e.g. vocabulary hash differs)."""


class EmptyCorpus(ToxiclassError):
    """Vocabulary construction over an empty corpus."""


class UnknownTerm(ToxiclassError):
    """Term not indexed in the vocabulary."""


class SingleClass(ToxiclassError):
    """Re-sampling needs both classes present."""


class MinorityTooSmall(ToxiclassError):
    """SMOTE needs at least two minority rows."""


class SingleClassTraining(ToxiclassError):
    """Training data contains only one class."""


class DimensionMismatch(ToxiclassError):
    """Feature row width does not match the model."""


class EmptyAfterEncoding(ToxiclassError):
    """No in-vocabulary token survived sequence encoding."""


class EmptySequence(ToxiclassError):
    """Sequence model invoked on a zero-length sequence."""


class SequenceTooShort(ToxiclassError):
    """Sequence shorter than the convolution kernel width."""


class LengthMismatch(ToxiclassError):
    """Prediction and truth vectors differ in length."""


class EmptyEvaluation(ToxiclassError):
    """Metrics requested for an empty confusion matrix."""


class SampleTooSmall(ToxiclassError):
    """t-test sample with fewer than two values."""


class TooFewRows(ToxiclassError):
    """Train/test split needs at least four rows."""


class OutOfRange(ToxiclassError):
    """Probability argument outside [0, 1]."""
