"""Exception types shared across the package.

The CLI maps these onto exit codes, so solver and harness code should
raise the most specific type that applies.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (exit code 2)."""


class DataError(ValueError):
    """Malformed dataset input or I/O failure around data files (exit code 3)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its contract (exit code 4)."""
