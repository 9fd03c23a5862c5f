"""Exception hierarchy.

Everything raised on bad input derives from :class:`KStarError` so the CLI can
map it to exit code 1. File-system failures are left as :class:`OSError`
(exit code 2).
"""

from __future__ import annotations


class KStarError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(KStarError, ValueError):
    """An input file is malformed."""


class ValidationError(KStarError, ValueError):
    """Input parsed but violates an invariant (non-finite values, ragged rows, ...)."""


class SingleClassError(ValidationError):
    """Fewer than two distinct classes; k* is undefined."""


class DimensionError(KStarError, ValueError):
    """Shapes or lengths disagree."""


class ZeroVectorError(KStarError, ValueError):
    """Cosine distance requested for a zero-norm vector."""


class SpecError(KStarError, ValueError):
    """Invalid synthetic dataset parameters."""


class VocabularyMismatchError(KStarError, ValueError):
    """Reports being compared do not share the same class names."""
