"""
Integrate a step mapping with well-ordered steps.

Usage:
    python manage.py integrate_step (--gallery ID | --spec FILE) [--mode hl|hk|bochner|riemann]
                                    [--tol 1e-6] [--grid 33] [--output report.json] [--csv primitive.csv]

CSV columns: t, coord_1..coord_d, residual (the primitive on a uniform grid)
"""
from ._run import RunCommand, head


class Command(RunCommand):
    help = (
        'HL/HK/Bochner/Riemann verdicts and the integral of a step mapping. '
        'CSV columns: t, coord_1..coord_d, residual.'
    )
    subcommand = 'integrate_step'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--mode', choices=['hl', 'hk', 'bochner', 'riemann'], default='hl')

    def summarize(self, report):
        write_verdicts(self, report)


def write_verdicts(command, report):
    results = report.results
    for mode, verdict in results['verdicts'].items():
        line = f"  {mode}: {verdict['value']}"
        if verdict.get('cutoff') is not None:
            line += f" (cutoff {verdict['cutoff']})"
        command.stdout.write(line)
    if results.get('integral') is not None:
        command.stdout.write(f"  integral: {head(results['integral'])}")
        command.stdout.write(f"  residual: {results['residual']:.3e} via {results['route']}")
    if results.get('conforms') is False:
        command.stdout.write(command.style.ERROR('  verdicts contradict the expected ones'))
