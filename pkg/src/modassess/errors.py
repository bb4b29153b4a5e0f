"""Exception types shared across the package.

The CLI maps these onto process exit codes; everything else raises them
directly.  Numeric-domain problems (negative thickness loss, vanished
section) subclass ValueError so they behave normally in library use.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_DATA = 4


class ConfigError(Exception):
    """Invalid or inconsistent study configuration (exit code 2)."""


class ConvergenceError(Exception):
    """A posterior failed the split-R-hat gate (exit code 3)."""


class DataError(Exception):
    """Malformed or unusable input data (exit code 4)."""


class DependencyError(DataError):
    """A pipeline stage ran before its prerequisite produced its artifacts."""


class SingularSectionError(ValueError):
    """Thickness loss consumed the whole section; the bending formulas blow up."""


class SingularityError(ValueError):
    """Power-law evaluated at its initiation time with a nonpositive exponent."""


class SurrogateRangeError(ValueError):
    """Response-surface evaluation requested outside the trained input box."""


class InitializationError(RuntimeError):
    """An MCMC chain found no finite-density start among its prior draws."""
