"""Exception hierarchy.

The CLI maps these onto its exit-code contract: configuration/usage
problems exit 1, numerical failures exit 2, IO failures exit 3.
"""


class SebaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SebaError):
    """Invalid configuration value, unknown key, or malformed input."""


class NumericalError(SebaError):
    """Base class for failures of the numerical machinery."""


class EmptyBasisError(NumericalError):
    """Spectral cutoff lies below the ground Dirichlet eigenvalue."""


class BasisSizeError(NumericalError):
    """Requested basis would exceed the hard mode-count cap."""


class DomainError(NumericalError):
    """Evaluation point outside the closed rectangle."""


class PoleProximityError(NumericalError):
    """z is too close to a pole of the spectral function."""

    def __init__(self, z, eigenvalue):
        self.z = z
        self.eigenvalue = eigenvalue
        super().__init__(
            f"z={z!r} is within tolerance of the spectral-function pole at "
            f"eigenvalue {eigenvalue!r}"
        )


class NoRootError(NumericalError):
    """Secular-equation bracket expansion hit the configured depth limit."""


class InsufficientBasisError(NumericalError):
    """Basis cutoff too small for the requested number of modes."""


class NormalizationError(NumericalError):
    """Mode coefficients are not unit-normalized."""


class CutoffError(NumericalError):
    """Amplitude cutoff exceeds the cutoff the basis was built with."""
