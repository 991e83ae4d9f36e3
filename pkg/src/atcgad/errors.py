"""Exception hierarchy for atcgad."""


class AtcgadError(Exception):
    """Base class for all atcgad errors."""


class GraphFormatError(AtcgadError):
    """Malformed graph input: bad edge line, endpoint out of range."""


class GraphShapeError(AtcgadError):
    """Row-count mismatch between graph input files."""


class GraphParseError(AtcgadError):
    """Non-numeric or otherwise unparseable cell in a graph input file."""


class EmptyGraphError(AtcgadError):
    """A generator was asked to produce a graph with zero nodes."""


class DivergenceError(AtcgadError):
    """The consensus dynamics produced a non-finite value.

    Carries the iteration and node where the first non-finite entry
    appeared.
    """

    def __init__(self, iteration: int, node: int):
        self.iteration = iteration
        self.node = node
        super().__init__(
            f"non-finite state at iteration {iteration}, node {node}"
        )


class ContractionError(AtcgadError):
    """An operation required a contractive operator (Lipschitz < 1)."""


class NumericalError(AtcgadError):
    """A linear solve failed despite regularization."""


class UndefinedMetricError(AtcgadError):
    """A ranking metric was requested on single-class labels."""
