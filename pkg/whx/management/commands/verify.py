from whx.choices import CommandChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Check a stored factorization against its matrix (exit 3 on failure)'
    command = CommandChoices.VERIFY

    def add_command_arguments(self, parser):
        parser.add_argument('--matrix', type=str, default=None, help='Matrix kernel JSON')
        parser.add_argument('--factorization', type=str, default=None, help='Factorization JSON')
