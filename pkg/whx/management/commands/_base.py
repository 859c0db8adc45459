"""
Shared plumbing of the toolkit commands: the common flags, job execution and
the mapping of toolkit errors onto exit codes.
"""

from django.core.management.base import BaseCommand, CommandError

from whx import codec
from whx.exceptions import WhxError
from whx.jobs import JobConfig, run


class WhxCommand(BaseCommand):
    command = None
    input_help = 'Input JSON document'

    def add_arguments(self, parser):
        parser.add_argument('--input', type=str, default=None, help=self.input_help)
        parser.add_argument('--output', type=str, default=None, help='Result JSON (stdout when omitted)')
        parser.add_argument('--summary', type=str, default=None, help='Human-readable summary file')
        parser.add_argument('--diagnostics', type=str, default=None, help='Per-node diagnostics CSV')
        parser.add_argument('--decay', type=str, default=None, help='Coefficient-decay CSV')
        parser.add_argument('--grid', type=int, default=None, help='Grid size N (power of two)')
        parser.add_argument('--tol', type=float, default=None, help='Residual tolerance')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            job = JobConfig.from_options(self.command, options)
            outcome = run(job)
        except WhxError as exc:
            self.stderr.write(codec.dumps(exc.as_dict()), ending='')
            raise CommandError(exc.message, returncode=int(exc.exit_code))

        if job.output is None:
            # stdout carries the JSON document only
            self.stdout.write(outcome.text, ending='')
        else:
            for path in outcome.written:
                self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
        if outcome.exit_code:
            raise CommandError(f'{job.command} failed its checks', returncode=outcome.exit_code)
