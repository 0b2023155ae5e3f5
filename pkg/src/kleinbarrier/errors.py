"""Exception types raised across the package."""


class KleinBarrierError(Exception):
    """Base class for all package errors."""


class DegenerateMomentum(KleinBarrierError, ValueError):
    """The potential-region momentum vanishes (zone boundary), so the matching ratio is undefined."""


class InvalidState(KleinBarrierError, ValueError):
    pass


class InvalidGeometry(KleinBarrierError, ValueError):
    pass


class ZoneMismatch(KleinBarrierError, ValueError):
    """An operation was asked for outside the energy zone where it is defined."""


class SingularSystem(KleinBarrierError, ArithmeticError):
    pass


class ConfigError(KleinBarrierError, ValueError):
    """Invalid user configuration. ``field`` names the offending parameter when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class StabilityError(KleinBarrierError, RuntimeError):
    """Time stepping lost unitarity beyond tolerance (usually dt too large)."""
