"""Exception types shared across the package."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """A configuration is invalid: bad keys, values, or family/parameter combos.

    Carries the full list of problems so a caller can report every error at
    once instead of the first one hit.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class UnsupportedFamilyError(ConfigurationError):
    """An operation was requested on a family that does not support it."""


class NumericalError(RuntimeError):
    """A numerical failure: solver non-convergence or invalid floating state."""
