"""Exception types shared across the package.

Exit-code mapping for the CLI lives in :mod:`batchlab.cli`: config errors
exit 2, divergence signals exit 3, precision/censoring failures exit 4.
"""


class DivergenceError(ValueError):
    """A requested quantity is a divergent series or undefined expectation."""


class PrecisionLossError(ArithmeticError):
    """A computation cannot meet its accuracy contract in float64."""


class CensoringError(RuntimeError):
    """Too many censored Monte Carlo trials to answer the query honestly."""


class ConfigError(ValueError):
    """Invalid run configuration (bad flag value, missing field, bad file)."""
