"""Exception types shared across the toolkit."""


class RobbaError(Exception):
    """Base class for all toolkit errors."""


class DivisionByZero(RobbaError):
    """Inverse of an element that is zero at working precision."""


class PrecisionExhausted(RobbaError):
    """An operation would leave no significant p-adic digits."""


class NonUnitArgument(RobbaError):
    """A unit of Z_p (or of the base algebra) was required."""


class OutOfAnnulus(RobbaError):
    """Radius parameter outside the annulus an element lives on."""


class WindowTooSmall(RobbaError):
    """The Laurent window cannot hold the requested data."""


class LevelOutOfRange(RobbaError):
    """Localization level n with r_n outside the annulus."""


class DenominatorOverflow(RobbaError):
    """Exponent denominators beyond the configured p^M bound."""


class SlopeViolation(RobbaError):
    """Frobenius-equation scalar alpha with |alpha^{-1}| >= 1."""


class NoSolution(RobbaError):
    """Frobenius equation obstructed; carries the obstruction map."""

    def __init__(self, obstructions):
        super().__init__("equation has no solution; %d obstructed orbits"
                         % len(obstructions))
        self.obstructions = obstructions


class RankOutOfRange(RobbaError):
    """Wedge index outside 1..rank."""


class NotInvertible(RobbaError):
    """Matrix or ring element is not invertible on the annulus."""


class NonConvergent(RobbaError):
    """No power of gamma_0 makes the logarithm series converge."""


class ZeroNotARoot(RobbaError):
    """Sen polynomial has no T-factor at working precision."""


class NotEigenvector(RobbaError):
    """Chain datum fails its eigenvector certificate."""


class ChainFailed(RobbaError):
    """Triangulation extraction on data that is not a chain."""


class NotSplit(RobbaError):
    """Refinement constructor needs a diagonalizable Frobenius."""


class RepeatedEigenvalues(RobbaError):
    """Refinement classification needs distinct eigenvalues."""


class ParseError(RobbaError):
    """Job-document syntax error with location."""

    def __init__(self, message, line=None, col=None):
        loc = "" if line is None else " (line %d, col %d)" % (line, col or 0)
        super().__init__(message + loc)
        self.line = line
        self.col = col


class ValidationError(RobbaError):
    """Job document is well-formed but semantically invalid."""
