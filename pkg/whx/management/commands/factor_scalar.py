from whx.choices import CommandChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Factor a scalar kernel G = X+ t^kappa G- and report its index'
    command = CommandChoices.FACTOR_SCALAR
    input_help = 'Scalar kernel: Laurent coefficients, circle or line samples, or {"num", "den"} in alpha'
