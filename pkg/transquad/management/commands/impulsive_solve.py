"""
Solve an impulsive differential equation.

Usage:
    python manage.py impulsive_solve (--gallery ID | --spec FILE) [--tol 1e-4]
                                     [--max-iter 200] [--output report.json] [--csv trajectory.csv]

Problems with a coupling term are solved by monotone iteration from both
envelopes; fixed data uses the representation formula.

CSV columns: t, coord_1..coord_d, chain (plus residual for fixed data)
"""
from ._run import RunCommand


class Command(RunCommand):
    help = (
        'Extremal solutions by monotone iteration, or the fixed-data solution. '
        'CSV columns: t, coord_1..coord_d, chain (residual before chain for fixed data).'
    )
    subcommand = 'impulsive_solve'
    default_tol = 1e-4

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--max-iter', dest='max_iter', type=int, default=200)

    def summarize(self, report):
        results = report.results
        if 'iterations' in results and isinstance(results['iterations'], dict):
            its = results['iterations']
            self.stdout.write(f"  iterations: {its['ascending']} ascending, {its['descending']} descending")
            self.stdout.write(f"  bracket gap: {results['gap']:.3e}")
            self.stdout.write(f"  residual: {results['residual']:.3e}")
        for jump in results.get('jumps', [])[:4]:
            self.stdout.write(f"  jump at {jump['lambda']:g}: {jump['jump'][:4]}")
