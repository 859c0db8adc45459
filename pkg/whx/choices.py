from django.db import models


class DomainTag(models.TextChoices):
    CIRCLE = "circle", "Unit circle"
    LINE = "line", "Real line, Möbius-mapped"


class MobiusDirection(models.TextChoices):
    LINE_TO_CIRCLE = "line-to-circle", "Line to circle"
    CIRCLE_TO_LINE = "circle-to-line", "Circle to line"


class FactorSide(models.TextChoices):
    LEFT = "left", "G = G+ L G-"
    RIGHT = "right", "G = G- L G+"


class CommandChoices(models.TextChoices):
    FACTOR_SCALAR = "factor-scalar", "Factor a scalar kernel"
    FACTOR_MATRIX = "factor-matrix", "Factor a matrix kernel"
    SOLVE_DISCRETE = "solve-discrete", "Solve a discrete Wiener-Hopf system"
    SOLVE_DUAL = "solve-dual", "Solve a dual convolution equation"
    SOLVE_EXPONENTIAL = "solve-exponential", "Solve the exponential-factor system"
    STABILITY = "stability", "Partial-index stability"
    VERIFY = "verify", "Verify a factorization"
    CLASSIFY = "classify", "Classify a matrix kernel"


class MethodChoices(models.TextChoices):
    AUTO = "auto", "Automatic"
    RATIONAL = "rational", "Rational root elimination"
    KHRAPKOV = "khrapkov", "Khrapkov-Daniele"
    JONES = "jones", "Jones"
    FUNCOMM = "funcomm", "Functionally commutative"
    TRIANGULAR = "triangular", "Triangular (Chebotarev)"
    ASYMPTOTIC = "asymptotic", "Asymptotic iteration"
    RATIONAL_FIT = "rational-fit", "Rational fit"

    @classmethod
    def exact(cls):
        return [cls.RATIONAL, cls.TRIANGULAR, cls.KHRAPKOV, cls.FUNCOMM, cls.JONES]

    @classmethod
    def approximate(cls):
        return [cls.ASYMPTOTIC, cls.RATIONAL_FIT]


class ExitCode(models.IntegerChoices):
    SUCCESS = 0, "Success"
    INVALID_INPUT = 2, "Invalid input"
    NUMERICAL_FAILURE = 3, "Numerical failure"
    NOT_IN_CLASS = 4, "Not in class"
