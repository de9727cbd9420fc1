"""Exception hierarchy shared across the package.

Two broad families matter to callers: ``DataError`` covers bad inputs
(malformed files, unknown columns, invalid configuration) and maps to
exit code 1 in the CLI; ``NumericalError`` covers failures of the
numerics themselves (rank deficiency, degenerate designs) and maps to
exit code 2.
"""


class ToolkitError(Exception):
    """Base class for all package errors."""


class DataError(ToolkitError):
    """Invalid input data or configuration."""


class SchemaError(DataError):
    """Column schema violated or inconsistent with the data."""


class ModelSpecError(DataError):
    """Model spec document could not be parsed."""


class NumericalError(ToolkitError):
    """A numerical procedure failed on otherwise well-formed input."""


class RankDeficiencyError(NumericalError):
    """Design matrix is rank deficient.

    ``columns`` names the dependent column set detected during the
    orthogonal decomposition.
    """

    def __init__(self, columns):
        self.columns = tuple(columns)
        super().__init__(
            "rank-deficient design; dependent columns: " + ", ".join(self.columns)
        )
