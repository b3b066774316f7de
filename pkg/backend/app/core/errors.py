"""Exception hierarchy shared by the lab modules, the CLI and the HTTP layer."""


class LabError(Exception):
    """Base class for every failure raised by the laboratory."""


class LabInputError(LabError, ValueError):
    """Raised when an operation's preconditions are violated by its inputs."""


class CapabilityError(LabError, RuntimeError):
    """Raised when a request exceeds an enumeration budget or unsupported structure."""
