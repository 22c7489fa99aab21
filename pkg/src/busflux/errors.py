"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ParseError and missing files exit 2,
everything else derived from BusfluxError exits 1.
"""


class BusfluxError(Exception):
    """Base class for all domain errors raised by busflux."""


class ParseError(BusfluxError):
    """Input file is structurally unusable (bad header, wrong format)."""


class ConfigError(BusfluxError):
    """Configuration value violates an invariant."""


class ColumnMismatchError(BusfluxError):
    """Model and evaluation matrix disagree on feature columns."""

    def __init__(self, missing, unexpected):
        self.missing = sorted(missing)
        self.unexpected = sorted(unexpected)
        super().__init__(
            "feature columns do not match trained model: "
            f"missing={self.missing} unexpected={self.unexpected}"
        )


class TrainingDivergedError(BusfluxError):
    """Loss became non-finite during gradient descent (learning rate too high)."""
