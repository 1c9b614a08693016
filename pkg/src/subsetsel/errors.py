"""Exception hierarchy shared across the package."""


class SubsetSelError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SubsetSelError, ValueError):
    """An argument violates an operation's precondition."""


class InvalidSupportError(InvalidArgumentError):
    """A support set references predictors outside ``0..p-1`` or repeats one."""


class ConstantColumnError(SubsetSelError, ValueError):
    """A predictor column has zero variance and cannot be standardized."""

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} is constant and cannot be standardized")


class DataFormatError(SubsetSelError, ValueError):
    """A data file is malformed, truncated, or of an unsupported version."""


class CombinatorialLimitError(SubsetSelError):
    """Exhaustive enumeration was refused because too many subsets exist."""

    def __init__(self, count, limit):
        self.count = count
        self.limit = limit
        super().__init__(
            f"exhaustive search over {count} subsets exceeds the limit of {limit}; "
            "pass force=True to enumerate anyway"
        )


class GenerationError(SubsetSelError):
    """Synthetic data could not be generated (e.g. covariance not positive definite)."""


class StoreInconsistencyError(SubsetSelError, ValueError):
    """A results store contains values that contradict each other."""
