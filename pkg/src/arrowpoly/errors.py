"""Exception hierarchy shared by all arrowpoly modules."""


class ArrowPolyError(Exception):
    """Base class for all errors raised by this package."""


# --- polynomial ring ---

class NonInvertibleSubstitution(ArrowPolyError):
    """A negative power of a variable was substituted by a non-unit value."""


class UnfusableMonomial(ArrowPolyError):
    """A monomial cannot be rewritten by the concatenation fusion rules."""


class PolynomialParseError(ArrowPolyError):
    """Canonical polynomial text did not parse."""


# --- diagrams ---

class DiagramSyntaxError(ArrowPolyError):
    """Diagram file text is malformed.  Carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ArrowPolyError):
    """A parsed diagram violates a structural invariant."""


class ArcLabelCountMismatch(ValidationError):
    pass


class NonSphericalMap(ValidationError):
    pass


class BarInClassicalCategory(ValidationError):
    pass


class MissingPuncture(ValidationError):
    pass


class InconsistentOrientation(ValidationError):
    pass


class CategoryMismatch(ArrowPolyError):
    """An operation was invoked on a diagram of the wrong category."""


class NotAKnotoid(ArrowPolyError):
    """Concatenation requires single-knotoidal-component diagrams."""


# --- states ---

class OddArrowLoopInClassical(ArrowPolyError):
    """Internal bug: a state loop carried an odd number of arrows."""


class NoEmbedding(ArrowPolyError):
    """Nesting data requested for a state that carries no planar embedding."""


# --- ribbon graphs ---

class VariantDecorationMismatch(ArrowPolyError):
    """A polynomial variant was asked of a graph whose decorations do not fit."""


class EdgeNotFound(ArrowPolyError):
    pass


class RibbonGraphParseError(ArrowPolyError):
    """Ribbon-graph file text is malformed."""


class InappropriateArrowStructure(ArrowPolyError):
    """Diagram recovery requires exactly two same-style arrows per edge."""


# --- state-graph identities ---

class VariantMismatch(ArrowPolyError):
    """Evaluation variant does not match the bundle's diagram category."""


class NonDivisibleByD(ArrowPolyError):
    """Internal bug: a state-graph evaluation was not divisible by d."""


# --- moves ---

class PatternMismatch(ArrowPolyError):
    """The local pattern required by a move is absent at the anchor."""


class IllegalForCategory(ArrowPolyError):
    """The move is not part of the category's move set."""


class ForbiddenMove(ArrowPolyError):
    """The move would pull an endpoint over or under a classical crossing."""
