"""Exception hierarchy shared by all frontlab modules.

Every error raised on purpose by the library derives from :class:`FrontLabError`
so that the command line can map families of errors onto exit codes.
"""

from __future__ import annotations


class FrontLabError(Exception):
    """Base class for all library errors."""


class ConfigError(FrontLabError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class InvalidParameter(FrontLabError, ValueError):
    """A constructor received a parameter outside its admissible range."""


class WrongClass(FrontLabError, TypeError):
    """A reaction of the wrong class (KPP vs bistable) was supplied."""


class SubcriticalSpeed(FrontLabError, ValueError):
    """A KPP front was requested below the minimal speed."""


class WrongRegime(FrontLabError, ValueError):
    """Parameters fall outside the regime where a construction applies."""


class InconsistentSpeeds(FrontLabError, ValueError):
    """The KPP minimal speed does not exceed the bistable speed."""


class BadModification(FrontLabError, ValueError):
    """A modified bistable reaction failed its property validation."""


class NoAdmissibleBump(FrontLabError, ValueError):
    """No compactly supported bump subsolution exists for the given drift."""


class InsufficientSamples(FrontLabError, ValueError):
    """A fit window does not contain enough usable samples."""


class WindowOutsideDomain(FrontLabError, ValueError):
    """A spatial window is not contained in the computational domain."""


class NumericalFailure(FrontLabError, RuntimeError):
    """Base class for failures of a numerical method."""


class NoConnection(NumericalFailure):
    """Shooting could not bracket a heteroclinic connection."""


class NumericalInstability(NumericalFailure):
    """The time stepper produced non-finite or significantly negative values."""


class NoConvergence(NumericalFailure):
    """An iterative solver stagnated before reaching its tolerance."""


class FitDegenerate(NumericalFailure):
    """A least-squares design matrix is too ill-conditioned to trust."""


class NoThresholdFound(FrontLabError, RuntimeError):
    """No propagating bump width was found below the search ceiling."""


class Inconclusive(FrontLabError, RuntimeError):
    """A long-time probe failed to settle within its time budget."""
