"""Exception hierarchy shared by all modules."""


class RossbytrapError(Exception):
    """Base class for all errors raised by this package."""


class Inadmissible(RossbytrapError):
    """Phase point violates the admissibility condition (xi1 or xi2^2+b^2 too small)."""


class DegenerateRoots(RossbytrapError):
    """Dispersion cubic has fewer than three distinct real roots."""


class ToleranceExceeded(RossbytrapError):
    """An integration drifted past its conservation tolerance."""


class NoReturn(RossbytrapError):
    """Orbit did not return to its section within the time budget."""


class NoTurningPoints(RossbytrapError):
    """The libration interval does not exist (orbit circulates in x2)."""


class QuadratureFailure(RossbytrapError):
    """Singular quadrature failed to converge to the requested tolerance."""


class NoClosedOrbit(RossbytrapError):
    """No closed orbit found on the requested energy level."""


class TableOutOfRange(RossbytrapError):
    """Lookup outside the tabulated (E, A) family."""


class NoSignChange(RossbytrapError):
    """Root bracketing failed: no sign change of F over the scanned range."""


class FitFailure(RossbytrapError):
    """Least-squares scaling fit is not meaningful (sign change in the sample)."""


class ResolutionError(RossbytrapError):
    """Grid cannot resolve the requested field or symbol."""


class AdmissibilityError(RossbytrapError):
    """Field carries too much spectral mass outside the admissible region."""


class WindowError(RossbytrapError):
    """Spectral window leaves the single-well regime."""


class ConfigError(RossbytrapError):
    """Configuration file is malformed or inconsistent."""


class ComputeError(RossbytrapError):
    """A computation failed; carries module context in the message."""


class IoError(RossbytrapError):
    """Filesystem interaction failed."""


class ManifestMismatch(RossbytrapError):
    """Run manifests disagree (e.g. different epsilon sequences)."""


# exit codes used by the command line driver
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_IO = 4
