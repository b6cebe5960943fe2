"""Exception types shared across the package."""


class BinRobustError(ValueError):
    """Base class for input validation failures."""


class DomainError(BinRobustError):
    """A function was evaluated outside its domain (e.g. non-finite z)."""


class ContractError(BinRobustError):
    """Inputs with incompatible shapes or dimensions."""


class ParameterError(BinRobustError):
    """An invalid tuning parameter or loss specification."""
