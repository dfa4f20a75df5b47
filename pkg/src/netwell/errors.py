"""Exception hierarchy shared across the pipeline.

Each class maps to a distinct CLI exit code (see netwell.cli.EXIT_CODES) so
batch callers can tell configuration mistakes from data problems.
"""


class NetwellError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NetwellError):
    """Invalid or inconsistent run configuration."""


class InputError(NetwellError):
    """An input file is missing or unreadable."""


class SchemaError(NetwellError):
    """Input data violates its declared schema (bad header, >1% malformed
    rows, duplicate survey person, ...)."""


class DataError(NetwellError):
    """Structurally valid data that cannot be processed (empty join of
    sources, week outside the study range, ...)."""


class BudgetError(NetwellError):
    """A search was asked to enumerate more combinations than its budget
    allows in exhaustive mode."""


class StaleArtifactError(NetwellError):
    """A cached stage artifact was produced under a different configuration
    and must be regenerated."""


class InternalContradictionError(NetwellError):
    """An invariant that upstream processing guarantees was violated;
    indicates a bug, not bad input."""
