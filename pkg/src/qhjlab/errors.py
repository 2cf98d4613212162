"""Exception hierarchy shared by all qhjlab modules."""


class QhjlabError(Exception):
    """Base class for all qhjlab errors."""


class DomainError(QhjlabError):
    """Position outside the domain of a potential or grid."""


class NotConverged(QhjlabError):
    """An iterative solve failed to converge; the message carries diagnostics."""


class DegeneratePair(QhjlabError):
    """Two candidate solutions are numerically dependent (Wronskian ~ 0)."""


class InvalidCoefficients(QhjlabError):
    """Microstate coefficients violate a > 0, b > 0, 4ab - c^2 > 0."""


class CalibrationFailure(QhjlabError):
    """Pair rescaling could not bring the QSHJE residual below tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularDerivative(QhjlabError):
    """|W'| below threshold at a requested evaluation point."""


class SingularKinematics(QhjlabError):
    """dT/dE vanishes at the requested trajectory anchor."""


class TanPole(QhjlabError):
    """The tan argument of the discrete-beat formula sits at a pole."""

    def __init__(self, message, q=None, t=None, sign=None):
        super().__init__(message)
        self.q = q
        self.t = t
        self.sign = sign  # signed divergence direction


class DegenerateBeat(QhjlabError):
    """Beat period requested for two equal energies."""


class SingularVelocity(QhjlabError):
    """dT/dE = 0 exactly at a velocity evaluation point."""


class ConfigError(QhjlabError):
    """Scenario configuration failed validation; message names the field path."""


class UnknownRun(QhjlabError):
    """Registry query for a run id that does not exist."""
