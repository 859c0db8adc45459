from whx.choices import CommandChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Solve the two-row system with exponential factors by iteration'
    command = CommandChoices.SOLVE_EXPONENTIAL

    def add_command_arguments(self, parser):
        parser.add_argument('--system', type=str, default=None, help='System {"A", "B", "C", "f1", "f2", "L"[, "D"]}')
        parser.add_argument('--max-iter', type=int, default=None, help='Iteration limit')
