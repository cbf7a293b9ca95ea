"""Exception hierarchy for qeraser."""


class QEraserError(Exception):
    """Base class for all qeraser errors."""


class ContractViolation(QEraserError, ValueError):
    """An operation was called on a state or value it does not accept."""


class ImpossibleOutcomeError(QEraserError, ValueError):
    """A projection outcome has (numerically) zero probability."""


class NonUnitaryElementError(ContractViolation):
    """An absorptive element was placed where only unitary ones are allowed."""


class UndefinedContrastError(QEraserError, ValueError):
    """Visibility requested for a window where max + min vanishes."""


class ConfigError(QEraserError, ValueError):
    """Invalid sampler or experiment configuration."""


class SeedMismatchError(QEraserError):
    """Two runs that should share a seed and config do not."""
