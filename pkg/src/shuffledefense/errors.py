class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class SolverError(RuntimeError):
    """A linear solve failed, e.g. a chain with more than one closed class."""


class ConfigError(ValueError):
    """A scenario file failed validation. ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
