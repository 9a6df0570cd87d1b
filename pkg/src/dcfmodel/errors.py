"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid protocol parameters, topology, or experiment input."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its contract."""


class NumericalError(RuntimeError):
    """A solve produced NaNs or an impossible quantity; carries context."""


class StateSpaceTooLarge(RuntimeError):
    """Joint state enumeration exceeded the configured cap."""
