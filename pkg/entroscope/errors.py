"""Exceptions raised by entroscope."""


class EntroscopeError(Exception):
    """Base class for all entroscope errors."""


class DomainError(EntroscopeError, ValueError):
    """A parameter lies outside the domain of an operation."""


class SpaceSizeError(EntroscopeError):
    """A state space or matrix would exceed a configured size cap."""

    def __init__(self, cap_name: str, cap: int, requested: int) -> None:
        self.cap_name = cap_name
        self.cap = cap
        self.requested = requested
        super().__init__(
            f"{cap_name} cap exceeded: requested {requested}, cap is {cap}"
        )
