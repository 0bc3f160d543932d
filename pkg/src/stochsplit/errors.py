"""Exception hierarchy shared by all modules."""


class SplittingError(Exception):
    """Base class for every error raised by the package."""


class LayoutError(SplittingError, ValueError):
    """Two block vectors do not share a layout, or data has the wrong size."""


class ParameterError(SplittingError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class UnsupportedError(SplittingError, NotImplementedError):
    """The requested kind has no closed form or is not in the catalog."""


class UsageError(SplittingError, RuntimeError):
    """An API was called out of order."""


class NumericalError(SplittingError, ArithmeticError):
    """A non-finite quantity appeared during an iteration."""

    def __init__(self, message, iteration=None, block=None):
        self.iteration = iteration
        self.block = block
        parts = [message]
        if iteration is not None:
            parts.append(f"iteration={iteration}")
        if block is not None:
            parts.append(f"block={block}")
        super().__init__(" ".join(parts))


class InvariantError(SplittingError, AssertionError):
    """An audited algorithmic identity failed during a run."""
