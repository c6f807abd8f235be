"""Shared exception types."""


class SizeCapError(RuntimeError):
    """An exact enumeration would exceed its configured cap."""

    def __init__(self, message, cap=None, requested=None):
        super().__init__(message)
        self.cap = cap
        self.requested = requested


class PerfectChannelError(ValueError):
    """Raised when a perfect (noiseless) resource is offered where noise is required."""
