"""Exception hierarchy shared across the package.

Every failure mode that callers are expected to handle gets its own class;
the CLI maps these onto distinct exit codes.
"""


class ZZLabError(Exception):
    """Base class for all package errors."""


class ConfigError(ZZLabError):
    """Invalid or contradictory run configuration."""


class ParseError(ConfigError):
    """Unreadable config file or malformed flag."""


class ValidationError(ConfigError):
    """Config parsed but violates one or more constraints."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NoConvergence(ZZLabError):
    """Newton iteration failed to reach tolerance."""


class DegenerateSolution(ZZLabError):
    """Solver collapsed to (or was asked for) the trivial zero state."""


class TruncationTooSmall(ZZLabError):
    """Fourier truncation does not cover the potential's harmonics."""


class BranchCrossing(ZZLabError):
    """Eigenvalue tracking became ambiguous (gap too small)."""


class PhaseNotFixed(ZZLabError):
    """Eigenvector gauge at sigma = 0 is not real."""


class NearResonance(ZZLabError):
    """A small denominator makes the closed-form expansion unreliable."""


class NoRoot(ZZLabError):
    """Root bracket contains no sign change."""


class IllConditionedFit(ZZLabError):
    """Least-squares design matrix condition number too large."""


class QuadratureFailure(ZZLabError):
    """Adaptive quadrature did not meet its error tolerance."""


class WindowTooNarrow(ZZLabError):
    """Not enough samples / decades for a power-law fit."""


class WindowNotFound(ZZLabError):
    """No clean power-law stretch detected in a decay curve."""


class BlowUp(ZZLabError):
    """Simulation field exceeded the stability guard."""


class OutOfBranchRange(ZZLabError):
    """Requested sigma lies outside the interpolated eigenbranch."""


class BranchMismatch(ZZLabError):
    """Snapshot grid incompatible with the precomputed eigenbranch."""
