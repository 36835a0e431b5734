"""Exception and warning types raised across the package."""


class InvalidStateError(ValueError):
    """Matrix or density operator is malformed (shape, symmetry, trace)."""


class UnphysicalStateError(InvalidStateError):
    """Covariance matrix violates the uncertainty relation.

    Attributes:
        min_eigenvalue: most negative eigenvalue of ``m + i/2 Omega``
            (or ``det - 1/4`` for single-mode checks).
    """

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class UnsupportedStateError(ValueError):
    """State lies outside the symmetric two-mode class handled here."""


class InconsistentContextError(ValueError):
    """Thermal context disagrees with the covariance matrix it is paired with."""


class RepresentabilityError(ValueError):
    """Requested object cannot be represented at the current Fock cutoff."""


class ConvergenceError(RuntimeError):
    """Fock cutoff hit its ceiling before the convergence criterion was met."""

    def __init__(self, message: str, n_cut: int, trace_deficit: float):
        super().__init__(message)
        self.n_cut = n_cut
        self.trace_deficit = trace_deficit


class ConfigError(ValueError):
    """Invalid command-line or file configuration."""


class RegimeWarning(UserWarning):
    """An approximation is being evaluated outside its validity regime."""
