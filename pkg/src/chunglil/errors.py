"""Exception hierarchy for chunglil.

Every error carries the process exit code the CLI reports for it.
"""


class ChungLilError(Exception):
    """Base class for all chunglil errors."""
    exit_code = 2


class ParameterError(ChungLilError, ValueError):
    """A tuning parameter (tolerance, grid, replication count) is out of range."""
    exit_code = 2


class DomainError(ChungLilError, ValueError):
    """A mathematical argument lies outside the function's domain."""
    exit_code = 2


class DivergenceError(ChungLilError):
    """The requested series or integral diverges for these parameters."""
    exit_code = 2


class ModeError(ChungLilError):
    """The requested evaluation mode cannot handle these parameters."""
    exit_code = 2


class ConvergenceError(ChungLilError):
    """An iterative evaluation hit its iteration cap without converging."""
    exit_code = 2


class OperationCancelled(ChungLilError):
    """A long-running computation observed its cancellation token."""
    exit_code = 2


class CapabilityError(ChungLilError):
    """The configuration cannot be realized in floating point."""
    exit_code = 3


class InsufficientDataError(ChungLilError):
    """Too few events were observed for a stable estimate."""
    exit_code = 4
