from whx.choices import CommandChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Solve a dual convolution equation (continuous or discrete)'
    command = CommandChoices.SOLVE_DUAL
    input_help = '{"K1", "K2", "g"} functions or {"a", "b", "c", "d"} sequences'
