"""Exception taxonomy shared by all modules (mapped to CLI exit codes)."""


class RelucalcError(Exception):
    """Base class for all package errors."""


class ValidationError(RelucalcError, ValueError):
    """Bad inputs: malformed files, inconsistent dimensions, invalid parameters."""


class BudgetExceededError(RelucalcError):
    """A configured enumeration/size budget was exhausted before completion."""


class InvariantViolation(RelucalcError):
    """An internal consistency check failed; indicates a bug, not bad input."""
