"""Exception taxonomy shared across the package.

ConfigError: malformed user input (CLI exit code 2).
PreconditionError: valid input outside a routine's stated domain (exit code 3).
NumericalFailure: a computation that started but cannot be trusted (exit code 4).
"""

from __future__ import annotations


class ConfigError(ValueError):
    pass


class PreconditionError(RuntimeError):
    pass


class NumericalFailure(RuntimeError):
    pass
