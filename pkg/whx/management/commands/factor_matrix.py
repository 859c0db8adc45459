from whx.choices import CommandChoices, MethodChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Factor a matrix kernel G = G+ diag(t^k) G- by an exact or approximate method'
    command = CommandChoices.FACTOR_MATRIX
    input_help = 'Matrix kernel, {"rational": ...} entries or a class descriptor'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--method',
            type=str,
            default=MethodChoices.AUTO,
            choices=MethodChoices.values,
            help='Factorization method (default: auto, exact classes only)'
        )
        parser.add_argument('--eps', type=float, default=None, help='Perturbation size for --method asymptotic')
        parser.add_argument('--jmax', type=int, default=None, help='Maximum asymptotic steps')
        parser.add_argument('--deg', type=str, default=None, help='Fit degrees P/Q for --method rational-fit')
        parser.add_argument('--window', type=float, default=None, help='Fit only where |alpha| <= WINDOW')
