"""Typed errors raised by the algebra kernels.

Every error that signals a violated mathematical hypothesis derives from
HypothesisError so the CLI can map them to a single exit code.
"""


class LogMonoidError(Exception):
    """Base class for all library errors."""


class ParseError(LogMonoidError):
    """Malformed input document."""


class BudgetExceeded(LogMonoidError):
    """A bounded enumeration ran out of budget before certifying an answer."""


class HypothesisError(LogMonoidError):
    """A mathematical precondition of an algorithm is violated."""


class NoWeighting(HypothesisError):
    """No weighting is available and none can be synthesized."""


class NoPositiveFunctional(HypothesisError):
    """The dual cone of a sharp quotient has no interior point (corrupted data)."""


class NotSubmonoid(HypothesisError):
    """A claimed submonoid contains an element outside the parent monoid."""


class NotSurjective(HypothesisError):
    """A monoid homomorphism required to be surjective is not (within the search bound)."""


class TorsionTarget(HypothesisError):
    """The target group of a section computation has torsion."""


class NotInGroupSpan(HypothesisError):
    """An element does not lie in the group generated by the monoid."""


class NonInvertibleConstantTerm(HypothesisError):
    """A series cannot be inverted because its weight-zero part is not a unit."""


class SaturationIncomplete(HypothesisError):
    """Saturation data is needed but could not be completed at the given rank/bound."""


class NotSemiSaturated(HypothesisError):
    """The monoid fails semi-saturatedness where it is required."""


class IrrationalExponent(HypothesisError):
    """A residue matrix has an eigenvalue outside the rationals (unsupported scope)."""


class NonCommutingResidues(HypothesisError):
    """The constant terms of the connection matrices do not commute."""


class SingularSylvester(HypothesisError):
    """A Sylvester solve in the shearing recursion is singular (NI hypothesis violated)."""


class SingularSystem(HypothesisError):
    """The oracle's full linear system is singular."""


class ZeroProjection(HypothesisError):
    """The chosen projection polynomials annihilate every section."""


class DenominatorVanishes(HypothesisError):
    """A denominator of the form j +- (xi - xi') or m_l + xi'_l - xi_l vanishes."""
