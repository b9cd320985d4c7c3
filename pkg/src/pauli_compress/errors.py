"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inputs are individually valid but do not fit together."""


class ResourceError(RuntimeError):
    """A computation exceeded a size or memory budget.

    ``stats`` holds the propagation statistics at the point of failure when
    they are available.
    """

    def __init__(self, message: str, stats: dict | None = None):
        super().__init__(message)
        self.stats = stats or {}
