"""Exception hierarchy shared by every conjopt module."""

from __future__ import annotations


class ConjoptError(Exception):
    """Base class for all library errors."""


class DimensionError(ConjoptError, ValueError):
    """An argument's length does not match the slot it is bound to."""

    def __init__(self, message: str, slot: int | None = None):
        super().__init__(message)
        self.slot = slot


class ShapeError(ConjoptError, ValueError):
    """A tensor does not have the shape an operation requires."""


class ParameterError(ConjoptError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class ConstraintError(ParameterError):
    """Invalid constraint-set description (e.g. m < 3)."""


class FormIndexError(ConjoptError, IndexError):
    """A monomial references a variable outside 1..n."""


class RealValuednessError(ConjoptError, ValueError):
    """Coefficients of a conjugate monomial pair are not conjugate to each other."""

    def __init__(self, message: str, key=None, mirror=None):
        super().__init__(message)
        self.key = key
        self.mirror = mirror


class ImaginaryResidueError(ConjoptError, ArithmeticError):
    """Evaluation of a supposedly real-valued form left a large imaginary part."""


class NotConjugateSuperSymmetric(ConjoptError, ValueError):
    pass


class NotSquareFree(ConjoptError, ValueError):
    pass


class NotSquareFreeInVariable(NotSquareFree):
    pass


class ConvexHullViolation(ConjoptError, ValueError):
    """A coordinate lies outside conv(Omega_m) (or the closed unit disc)."""


class ConvexNotAsserted(ConjoptError, ValueError):
    pass


class EnumerationTooLarge(ConjoptError, RuntimeError):
    """An exhaustive search would exceed its configured guard."""


class ZeroMatrix(ConjoptError, ValueError):
    pass


class ZeroVector(ConjoptError, ArithmeticError):
    pass


class OddDegree(ConjoptError, ValueError):
    pass
