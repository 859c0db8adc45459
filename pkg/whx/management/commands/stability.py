from whx.choices import CommandChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Check stability of partial indices or run the perturbation example'
    command = CommandChoices.STABILITY

    def add_command_arguments(self, parser):
        parser.add_argument('--indices', type=str, default=None, help='Comma-separated partial indices, e.g. 1,-1')
        parser.add_argument('--perturb', type=float, default=None, help='Coupling eps of the perturbation example')
