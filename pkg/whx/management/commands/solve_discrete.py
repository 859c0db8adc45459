from whx.choices import CommandChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Solve a semi-infinite Toeplitz system by symbol factorization'
    command = CommandChoices.SOLVE_DISCRETE

    def add_command_arguments(self, parser):
        parser.add_argument('--kernel', type=str, default=None, help='Kernel sequence {"offset", "values"}')
        parser.add_argument('--rhs', type=str, default=None, help='Right-hand side sequence')
        parser.add_argument(
            '--oracle',
            type=int,
            default=None,
            help='Compare with a dense truncated Toeplitz solve of size N'
        )
