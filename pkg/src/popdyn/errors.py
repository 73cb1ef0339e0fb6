"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class CFLError(DomainError):
    """An explicit advection step was requested with an unstable time step."""

    def __init__(self, dt: float, cfl: float, limit: float = 1.0):
        self.dt = dt
        self.cfl = cfl
        self.limit = limit
        super().__init__(
            f"time step dt={dt!r} gives CFL number {cfl:.6g} > {limit:g}"
        )


class ConfigError(ValueError):
    """A scenario configuration failed validation.

    ``path`` locates the offending field, e.g. ``learner.alpha``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
