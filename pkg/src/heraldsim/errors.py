"""Exception hierarchy shared by all modules."""


class HeraldSimError(Exception):
    """Base class for every error raised by heraldsim."""


class TruncationError(HeraldSimError):
    """Fock-space cutoff too small: probability leaks past ``n_max``."""


class ConvergenceError(HeraldSimError):
    """An iterative or truncated computation failed its refinement check."""


class DegenerateError(HeraldSimError):
    """A ratio is undefined because its denominator vanishes."""


class RootCountError(HeraldSimError):
    """Fewer dispersion roots than requested bands below the scan ceiling."""


class BandEdgeError(HeraldSimError):
    """Group velocity is undefined or below the usable floor."""


class DegenerateNullspaceError(HeraldSimError):
    """The Bloch matrix has a null space of dimension greater than one."""


class QuadratureError(HeraldSimError):
    """Gauss-Legendre refinement disagrees beyond tolerance."""


class EmptyWindowError(HeraldSimError):
    """No k-interval satisfies the requested group-velocity ceiling."""


class ConfigError(HeraldSimError, ValueError):
    """Invalid or incomplete run configuration."""


class UnknownPresetError(ConfigError):
    """Requested parameter preset does not exist."""
