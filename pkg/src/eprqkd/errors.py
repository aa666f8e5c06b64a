"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """A run or operation was given parameters it cannot work with."""


class ProtocolOrderError(RuntimeError):
    """An operation was invoked out of protocol order, or on particles the
    acting party does not hold."""
