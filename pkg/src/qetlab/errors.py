"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations


class QetError(Exception):
    """Base class. ``kind`` is the stable name used in JSON reports."""

    kind = "QetError"

    def __init__(self, message: str, *, pos: tuple[int, int] | None = None,
                 rule: str | None = None):
        super().__init__(message)
        self.message = message
        self.pos = pos
        self.rule = rule

    def to_json(self) -> dict:
        out = {"kind": self.kind, "message": self.message}
        if self.pos is not None:
            out["line"], out["column"] = self.pos
        if self.rule is not None:
            out["rule"] = self.rule
        return out

    def __str__(self) -> str:
        where = f"{self.pos[0]}:{self.pos[1]}: " if self.pos else ""
        rule = f" [rule {self.rule}]" if self.rule else ""
        return f"{where}{self.kind}: {self.message}{rule}"


class ParseError(QetError):
    kind = "ParseError"


class InvalidState(QetError):
    kind = "InvalidState"


class InvalidUnitary(QetError):
    kind = "InvalidUnitary"


# source typing
class SourceTypeError(QetError):
    kind = "TypeError"


class LinearityViolation(SourceTypeError):
    kind = "LinearityViolation"


class AffineLeak(SourceTypeError):
    kind = "AffineLeak"


class UnknownConstructor(SourceTypeError):
    kind = "UnknownConstructor"


class ArityMismatch(SourceTypeError):
    kind = "ArityMismatch"


class TypeMismatch(SourceTypeError):
    kind = "TypeMismatch"


class UnboundVariable(SourceTypeError):
    kind = "UnboundVariable"


class NoMainTerm(SourceTypeError):
    kind = "NoMainTerm"


class DeclarationError(SourceTypeError):
    kind = "DeclarationError"


class NonExhaustiveCase(SourceTypeError):
    kind = "NonExhaustiveCase"


class AnnotationRequired(SourceTypeError):
    kind = "AnnotationRequired"


# operational semantics
class StuckTerm(QetError):
    kind = "StuckTerm"


# cost structures
class ProbabilityMassExceeded(QetError):
    kind = "ProbabilityMassExceeded"


class ChainViolation(QetError):
    kind = "ChainViolation"


# cost-structure language
class CSTypeError(QetError):
    kind = "CSTypeError"


class NotFunctionalType(CSTypeError):
    kind = "NotFunctionalType"


class OperandNotValue(CSTypeError):
    kind = "OperandNotValue"


class EvaluationError(QetError):
    kind = "EvaluationError"


# soundness harness
class HypothesisViolation(QetError):
    kind = "HypothesisViolation"


# refinement types
class RefinementError(QetError):
    kind = "RefinementError"


class IllTypedFormula(RefinementError):
    kind = "IllTypedFormula"


class SkeletonMismatch(RefinementError):
    kind = "SkeletonMismatch"


class NotAdmissible(RefinementError):
    kind = "NotAdmissible"


class RefUnboundVariable(RefinementError):
    kind = "UnboundVariable"
