"""
Error hierarchy; exit_code is what the CLI returns for each failure class
"""


class SparseBudgetError(Exception):
    """Base class for every failure raised by the package"""

    exit_code: int = 1


class ConfigurationError(SparseBudgetError):
    """Invalid experiment configuration or solver arguments"""

    exit_code = 2


class DataError(SparseBudgetError):
    """Unreadable or malformed input data"""

    exit_code = 3


class BudgetExceeded(SparseBudgetError):
    """An example was asked to reveal more than s' distinct attributes.

    Always an algorithm bug: the run aborts instead of truncating the request.
    """

    exit_code = 4

    def __init__(self, example_id: int, requested: int, limit: int):
        # args must match the signature so worker processes can re-raise it
        super().__init__(example_id, requested, limit)
        self.example_id = example_id
        self.requested = requested
        self.limit = limit

    def __str__(self) -> str:
        return (
            f"example {self.example_id} would reveal {self.requested} distinct attributes "
            f"(budget s'={self.limit})"
        )


class InvariantViolation(SparseBudgetError):
    """An iterate left its sparsity level or its fixed support"""


class InvalidArgument(SparseBudgetError, ValueError):
    """Out-of-range argument to a pure numeric function"""

    exit_code = 2


class DimensionMismatch(InvalidArgument):
    """Vectors of different lengths were combined"""
