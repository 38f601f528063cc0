"""Exception hierarchy shared by all modules."""


class OscillaError(Exception):
    """Base class for every error raised by the package."""


class DomainError(OscillaError, ValueError):
    """Evaluation point outside the domain of a profile or function."""


class ParameterError(OscillaError, ValueError):
    """Invalid constructor or routine parameters."""


class DivergenceError(OscillaError):
    """A quantity is unavailable because an underlying integral diverges."""


class PreconditionError(OscillaError, ValueError):
    """Hypotheses required by a routine are violated by the inputs."""


class SolverAccuracyError(OscillaError):
    """The integrator could not certify its own accuracy."""


class ResolutionError(OscillaError):
    """Two detected zeros are closer than the separation floor."""


class HorizonError(OscillaError):
    """The requested number of zeros was not reached within the horizon cap."""


class OracleError(OscillaError):
    """The finite-difference oracle failed to converge."""


class ConfigError(OscillaError, ValueError):
    """Malformed experiment configuration."""
