"""Exception types shared across the package."""


class TrajentError(Exception):
    """Base class for all package errors."""


class ContractViolation(TrajentError, ValueError):
    """An input or a policy output broke a documented contract."""

    def __init__(self, message, *, agent=None, level=None, violations=()):
        self.agent = agent
        self.level = level
        self.violations = tuple(violations)
        where = []
        if agent is not None:
            where.append(f"agent {agent}")
        if level is not None:
            where.append(f"level {level}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ConfigurationError(TrajentError, ValueError):
    """Invalid configuration (policy params, generator arguments, CLI config)."""


class SceneParseError(TrajentError, ValueError):
    """A scene or MTP file is structurally malformed."""


class SceneSemanticError(TrajentError, ValueError):
    """A scene or MTP file parses but violates a domain invariant."""
