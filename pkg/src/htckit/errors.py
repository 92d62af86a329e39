"""Exception types shared across the toolkit.

Every error raised on bad input or bad state derives from :class:`HtcError`
so callers (notably the CLI) can distinguish toolkit failures from bugs.
"""


class HtcError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(HtcError):
    """Invalid experiment configuration or unusable referenced path."""


# -- taxonomy ---------------------------------------------------------------

class EmptyInput(HtcError):
    """An operation received no data where at least some is required."""


class MultipleRoots(HtcError):
    """More than one label never appears as a child."""


class MultipleParents(HtcError):
    """A label has two or more distinct parents (input is not a tree)."""


class CycleDetected(HtcError):
    """The parent/child edges contain a cycle."""


class UnknownNode(HtcError):
    """A queried label is not a node of the taxonomy."""


# -- metrics ----------------------------------------------------------------

class UnknownLabel(HtcError):
    """A document label is outside the admissible class set."""


class LengthMismatch(HtcError):
    """Paired sequences have different lengths (or are too short)."""


class ZeroVariance(HtcError):
    """Correlation requested for a constant sequence."""


# -- corpus -----------------------------------------------------------------

class MalformedXml(HtcError):
    """Document XML cannot be parsed or lacks a required section."""


class NoTopicCodes(HtcError):
    """A document carries no topic codes."""


class BadFraction(HtcError):
    """Holdout fraction outside the open interval (0, 1)."""


class EmptyDataset(HtcError):
    """Statistics requested for a local dataset with no examples."""


# -- features ---------------------------------------------------------------

class EmptyCorpus(HtcError):
    """Vocabulary construction over zero documents."""


class DimensionMismatch(HtcError):
    """Vector arity differs from the established dimension."""


class EmptyFile(HtcError):
    """An input file contains no usable data lines."""


class NonFiniteValue(HtcError):
    """A parsed numeric value is NaN or infinite."""


# -- strategy ---------------------------------------------------------------

class MissingInternalNode(HtcError):
    """A taxonomy internal node has no local dataset or local model."""


# -- reporting --------------------------------------------------------------

class TooFewRows(HtcError):
    """Aggregate report requested over fewer than two result rows."""


class SingleClassDegenerate(UserWarning):
    """Training data held a single class; the model predicts it always."""
