from whx.choices import CommandChoices

from ._base import WhxCommand


class Command(WhxCommand):
    help = 'Report which constructive factorization classes a kernel belongs to'
    command = CommandChoices.CLASSIFY
    input_help = 'Matrix kernel, {"rational": ...} entries or a class descriptor'
