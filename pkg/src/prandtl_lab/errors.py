"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all numerical-laboratory failures."""


class GridError(LabError, ValueError):
    """Invalid or incompatible discretisation."""


class IllPosed(LabError, ValueError):
    """Boundary-value problem without a (decaying) solution."""


class InvalidWavenumber(LabError, ValueError):
    pass


class NoUnstableMode(LabError):
    """The profile has no growing Rayleigh mode on the scanned wavenumbers."""


class AmplitudeOverflow(LabError, ValueError):
    """Seed amplitude nu**N * exp(Re(lambda) t) exceeds one."""


class CFLViolation(LabError, ValueError):
    pass


class BlowUp(LabError):
    """Vorticity exceeded the blow-up guard."""


class ConfigError(LabError, ValueError):
    pass


class TraceError(LabError, ValueError):
    """Boundary trace incompatible with the sublayer problem."""
