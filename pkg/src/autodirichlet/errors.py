"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

__all__ = [
    "AutoDirichletError",
    "ParseError",
    "AbscissaViolation",
    "NearPole",
    "NotCoercive",
    "HypothesisViolated",
    "DepthExceeded",
    "TruncationBudgetExceeded",
    "ZeroDenominator",
    "KernelOverflow",
    "InvalidAutomaton",
]


class AutoDirichletError(Exception):
    exit_code = 1


class ParseError(AutoDirichletError, ValueError):
    exit_code = 3


class AbscissaViolation(AutoDirichletError, ValueError):
    exit_code = 4


class NearPole(AutoDirichletError, ArithmeticError):
    exit_code = 5


class NotCoercive(AutoDirichletError, ValueError):
    exit_code = 6


class HypothesisViolated(AutoDirichletError, ValueError):
    exit_code = 7


class DepthExceeded(AutoDirichletError, RuntimeError):
    exit_code = 8


class TruncationBudgetExceeded(AutoDirichletError, RuntimeError):
    exit_code = 9


class ZeroDenominator(AutoDirichletError, ZeroDivisionError):
    exit_code = 10


class KernelOverflow(AutoDirichletError, RuntimeError):
    exit_code = 11


class InvalidAutomaton(AutoDirichletError, ValueError):
    exit_code = 12
