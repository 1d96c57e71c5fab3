"""Error types shared across the package.

Exit-code mapping used by the CLI lives in cli.py; these classes only
classify failures (configuration vs numerics vs resource caps).
"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (bad parameter ranges, unknown modes)."""


class DomainError(ValueError):
    """Point outside the feasible set where the operation requires membership."""


class ResourceError(RuntimeError):
    """Requested computation exceeds a hard cap (e.g. statevector size)."""


class NumericError(RuntimeError):
    """Numerical breakdown: non-finite intermediates, failed factorizations."""
