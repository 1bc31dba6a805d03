"""Shared exception types."""


class ConfigError(ValueError):
    """A run configuration or operation argument is invalid."""


class CflViolation(RuntimeError):
    """An explicit transport step was attempted above its stability bound."""

    def __init__(self, dt: float, admissible: float):
        super().__init__(
            f"time step {dt:g} exceeds the admissible explicit step {admissible:g}"
        )
        self.dt = dt
        self.admissible = admissible


class ResourceLimit(RuntimeError):
    """A requested allocation exceeds the configured cap."""
