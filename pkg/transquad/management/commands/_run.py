"""Shared plumbing of the transquad commands: options, validation, exit codes."""
from django.core.management.base import BaseCommand, CommandError

from transquad.forms import RunConfigForm
from transquad.services import runner
from transquad.services.exceptions import TransquadError

INCONCLUSIVE = 2


class RunCommand(BaseCommand):
    subcommand = None
    default_tol = 1e-6

    def add_arguments(self, parser):
        parser.add_argument('--spec', type=str, help='Path to a JSON spec file')
        parser.add_argument('--gallery', type=str, help='Gallery id, e.g. ex41.g0')
        parser.add_argument('--params', type=str, help='Gallery parameters as key=value,key=value')
        parser.add_argument('--tol', type=float, default=self.default_tol, help='Target tolerance')
        parser.add_argument('--budget', type=int, help='Enumeration budget per limit layer')
        parser.add_argument('--seed', type=int, help='Seed of every sampling routine')
        parser.add_argument('--output', type=str, help='Report path')
        parser.add_argument('--csv', type=str, help='Path for the main table as CSV')
        parser.add_argument('--format', choices=['json', 'csv'], default='json', help='Format of --output')
        parser.add_argument('--grid', type=int, default=33, help='Sample points of trajectory tables')

    def form_data(self, options):
        keys = (
            'spec', 'gallery', 'params', 'tol', 'budget', 'eps_levels', 'max_iter', 'eps', 'mode',
            'grid', 'per_layer', 'scales', 'seed', 'output', 'csv', 'format',
        )
        data = {k: options.get(k) for k in keys if options.get(k) is not None}
        if options.get('interval'):
            data['interval'] = ' '.join(str(v) for v in options['interval'])
        data['subcommand'] = self.subcommand
        return data

    def handle(self, *args, **options):
        # 1. Validate options
        form = RunConfigForm(data=self.form_data(options))
        if not form.is_valid():
            problems = '; '.join(
                f"{field}: {' '.join(errors)}" for field, errors in form.errors.items()
            )
            raise CommandError(f'Invalid options: {problems}', returncode=1)

        # 2. Run
        try:
            code, report = runner.run(form.to_run_config())
        except TransquadError as e:
            raise CommandError(str(e), returncode=1)
        except OSError as e:
            raise CommandError(f'Could not write output: {e}', returncode=1)

        # 3. Summarize
        self.summarize(report)
        for message in report.messages:
            self.stdout.write(self.style.WARNING(message))
        if code == INCONCLUSIVE:
            raise CommandError(f'{self.subcommand}: inconclusive', returncode=INCONCLUSIVE)
        self.stdout.write(self.style.SUCCESS(f'{self.subcommand}: {report.status}'))

    def summarize(self, report):
        for key in sorted(report.results):
            value = report.results[key]
            if isinstance(value, (dict, list)):
                continue
            self.stdout.write(f'  {key}: {value}')


def head(value, count=4):
    """First coordinates of a vector value or its dict form, for one-line summaries"""
    coords = value['coords'] if isinstance(value, dict) else list(value.coords)
    text = ', '.join(f'{float(c):.10g}' for c in coords[:count])
    return f"[{text}{', ...' if len(coords) > count else ''}]"
