"""
Exceptions raised by clarke.

Model validation problems are reported with Django's
``django.core.exceptions.ValidationError`` (see :func:`clarke.models.validate_model`);
everything here signals a structural or numerical failure.
"""


class ClarkeError(Exception):
    """Base class of every clarke-specific error."""


class ShapeError(ClarkeError, ValueError):
    """Dimensions of the inputs do not fit the requested mechanism."""


class ProblemTooLarge(ClarkeError):
    """An exact enumeration solver was asked to exceed its size guard."""


class SingularSystem(ClarkeError, ArithmeticError):
    """A pivot fell below ``PIVOT_TOLERANCE`` during elimination."""


class DegenerateEquation(ClarkeError, ArithmeticError):
    """A scalar threshold equation has (numerically) zero slope."""


class InvariantViolation(ClarkeError, AssertionError):
    """A checked invariant failed while ``CHECK_INVARIANTS`` is on."""
