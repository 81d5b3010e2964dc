from __future__ import annotations


class VocalcError(Exception):
    pass


# series
class EmptyResultWindow(VocalcError):
    pass


class IllDefinedComposition(VocalcError):
    pass


class NotInvertible(VocalcError):
    pass


class WindowExcludesResidue(VocalcError):
    pass


class LimitUndetermined(VocalcError):
    pass


# virasoro
class NotACoordinateMap(VocalcError):
    pass


class WindowTooSmall(VocalcError):
    pass


class UnderdeterminedAtDegree(VocalcError):
    pass


# moduli
class CoincidentPunctures(VocalcError):
    pass


class UnsupportedSewingShape(VocalcError):
    pass


class NotSewableFormally(VocalcError):
    pass


class UnsupportedPermutation(VocalcError):
    pass


# graded / voc
class WindowLimited(VocalcError):
    def __init__(self, message: str, blocks=()):
        super().__init__(message)
        self.blocks = list(blocks)


class NoCertificateWithinBounds(VocalcError):
    pass


# cli
class UnknownSuite(VocalcError):
    pass


class MalformedInput(VocalcError):
    pass


class SchemaError(MalformedInput):
    pass


class InvariantViolation(MalformedInput):
    pass
