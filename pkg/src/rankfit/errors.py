"""Exception types shared across the package.

Everything derives from RankfitError so callers can catch library failures
with one except clause. Validation-shaped errors (bad arguments, malformed
inputs) subclass ValueError as well, which keeps them usable in plain-Python
call sites that only know about the standard hierarchy.
"""


class RankfitError(Exception):
    """Base class for all rankfit errors."""


class ValidationError(RankfitError, ValueError):
    """Base class for precondition and input-shape failures."""


class EmptyCorpus(ValidationError):
    """All provided token streams were empty."""


class FormatError(RankfitError):
    """A persisted artifact has a bad magic, version, or is truncated."""


class InvariantViolation(RankfitError):
    """A rank table violates its structural invariants."""


class RankOutOfSupport(ValidationError):
    """Requested rank lies outside 1..support_size."""


class DegenerateInput(ValidationError):
    """Input has too little structure for the requested computation."""


class MismatchedFitRange(ValidationError):
    """Two fits being compared were not taken over the same rank range."""


class BootstrapFailure(RankfitError):
    """More than 20% of bootstrap refits failed."""


class LengthMismatch(ValidationError):
    """Parallel sequences have different lengths."""


class BadBeta(ValidationError):
    """Precision weight beta must be positive."""


class MissingStatistics(ValidationError):
    """Passage score lacks the cached statistics needed for reweighting."""


class EmptyCandidates(ValidationError):
    """Posterior renormalization needs at least one candidate."""


class SpanOutOfBounds(ValidationError):
    """Entity span does not fit inside the passage."""


class MissingUncertainty(ValidationError):
    """Fit has no bootstrap dispersions; consistency testing needs them."""


class UnconvergedFit(ValidationError):
    """Fit did not converge; consumer required a converged fit."""


class InsufficientTokens(ValidationError):
    """Too few tokens for a fingerprint verdict (override with force)."""


class EmptyReferenceSet(ValidationError):
    """Classification needs at least one reference fingerprint."""


class SingleClass(ValidationError):
    """ROC-AUC needs at least one positive and one negative label."""
