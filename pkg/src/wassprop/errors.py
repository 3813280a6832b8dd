"""Exception hierarchy shared across the package."""


class WasspropError(Exception):
    """Base class for all package-specific errors."""


class InputError(WasspropError, ValueError):
    """Malformed or inconsistent caller input."""


class DimensionError(InputError):
    """Operands live on different grids / have different dimensions."""


class NormalizationError(InputError):
    """Probability masses do not sum to one within tolerance."""


class StructureError(WasspropError):
    """Graph structure violates an operation's requirements (e.g. disconnected)."""


class NumericalError(WasspropError):
    """A numerical routine failed to reach its accuracy contract."""


class HypothesisError(WasspropError):
    """A mathematical hypothesis the computed quantity depends on does not hold."""
