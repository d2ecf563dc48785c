"""
SBRO-FL Errors - exception hierarchy shared by every module
"""


class SimulatorError(Exception):
    """Base class for every failure the simulator reports to its caller."""


class ConfigError(SimulatorError, ValueError):
    """Invalid, unknown or unparsable configuration value."""


class ShapeError(SimulatorError, ValueError):
    """Parameter vector, layer shape or dataset dimensions do not agree."""


class EmptyDatasetError(SimulatorError, ValueError):
    """An operation that needs samples received none."""


class DataFormatError(SimulatorError, ValueError):
    """A data file is malformed (bad magic number, truncated, count mismatch)."""


class PartitionError(SimulatorError, ValueError):
    """The federation cannot be built from the given partition spec."""


class BidError(SimulatorError, ValueError):
    """Bid generation failed (missing tier, non-positive bid)."""


class SelectionError(SimulatorError, ValueError):
    """Malformed selection problem or an oracle asked to do too much."""


class ReputationError(SimulatorError, ValueError):
    """Inconsistent reputation update input."""


class ShapleyError(SimulatorError, ValueError):
    """Coalition game is malformed or too large to enumerate."""


class NumericalError(SimulatorError, ArithmeticError):
    """A computation produced NaN or Inf."""
