"""Exception taxonomy shared across the package.

The split mirrors how failures are reported at the command line: validation
problems (bad inputs, bad configs, domain violations) are distinct from
numeric problems (quadrature non-convergence, truncation overflow, support
mismatch) and from enumeration limits (state spaces too large to enumerate
exactly).
"""

from __future__ import annotations


class FisherppError(Exception):
    """Base class for all package errors."""


class ValidationError(FisherppError, ValueError):
    """Invalid argument, domain violation, or malformed configuration."""


class NotDuplicatedError(ValidationError):
    """A configuration with an odd multiplicity where an exact pairing
    was required, i.e. it is off the support of the duplicated process."""


class NumericError(FisherppError, ArithmeticError):
    """Numerical failure: non-convergent quadrature, nan propagation,
    or an estimator guard tripping."""


class TruncationError(NumericError):
    """Cardinality tail mass above tolerance after truncation."""


class SupportMismatchError(NumericError):
    """Too many sampled outcomes fell outside the scoring support."""


class EnumerationLimitError(FisherppError):
    """An exact enumeration would exceed the configured state bound."""
