class FairMatchError(Exception):
    """Base class for errors raised by this package."""


class InputError(FairMatchError, ValueError):
    """Malformed or inconsistent input data."""


class NetworkError(FairMatchError, ValueError):
    """Structural problem with a flow network."""


class SolverError(FairMatchError, RuntimeError):
    """A max-flow solver invariant was violated (indicates a bug)."""
