"""Exception hierarchy.

Every error raised by the library derives from CoupclustError so callers can
catch one type at the boundary. The CLI maps subtrees to exit codes: config
errors -> 2, data errors -> 3, solver errors -> 4.
"""


class CoupclustError(Exception):
    """Base class for all library errors."""


class ConfigError(CoupclustError):
    """Invalid configuration or parameters."""


class DataError(CoupclustError):
    """Malformed or degenerate input data."""


class SolverError(CoupclustError):
    """Numerical failure inside an iterative solver."""


class InvalidDistribution(DataError):
    """Vector is not a probability distribution (sum or sign violation)."""


class ZeroMarginal(DataError):
    """A marginal entry required to be strictly positive is zero."""


class DimensionMismatch(DataError):
    """Operand shapes are incompatible."""


class MarginalMismatch(DataError):
    """Composed factors disagree on the shared marginal."""


class ShapeMismatch(DataError):
    """Two matrices that must share a shape do not."""


class InvalidOrder(ConfigError):
    """Schatten order outside [1, inf]."""


class EpsilonTooLarge(ConfigError):
    """Perturbation size pushes some kernel entry outside [0, 1]."""


class InvalidParams(ConfigError):
    """Solver configuration violates its documented constraints."""


class NonFinite(SolverError):
    """An iterate picked up a NaN or infinity."""


class DegenerateCluster(SolverError):
    """A cluster emptied and could not be rescued."""


class RankDeficient(ConfigError):
    """Requested embedding dimension exceeds the numerical rank."""


class UnknownLabel(DataError):
    """Query label absent from the embedding's row index."""


class LabelMismatch(DataError):
    """Prediction and truth labelings cover different items."""


class InvalidRating(DataError):
    """Rating outside the 1..5 scale."""


class EmptyAfterPruning(DataError):
    """No rows or no columns survive zero-pruning."""


class ParseError(DataError):
    """Unparseable input file; carries 1-based line and byte offset."""

    def __init__(self, message: str, line: int, offset: int):
        super().__init__(f"line {line}, byte {offset}: {message}")
        self.line = line
        self.offset = offset
