"""Exception hierarchy shared by all modules."""


class SoligasError(Exception):
    """Base class for library errors."""


class InvalidConfigError(SoligasError, ValueError):
    """Malformed soliton configuration."""


class CoincidentSpectrumError(InvalidConfigError):
    """Two solitons share the same spectral parameter."""


class RepresentationError(SoligasError, ArithmeticError):
    """A tau representation produced a non-finite or unresolved value."""


class InconsistentDisplacementsError(SoligasError, ValueError):
    """Displacements do not solve the position equation for the given impacts."""


class SolverError(SoligasError, RuntimeError):
    """An iterative solver failed to converge."""


class CFLError(SoligasError, ValueError):
    """Time step violates the CFL condition."""


class UnsupportedOrderError(SoligasError, ValueError):
    """Requested derivative or density order is not available."""
