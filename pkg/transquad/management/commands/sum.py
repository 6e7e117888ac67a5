"""
Sum a family indexed by a well-ordered set.

Usage:
    python manage.py sum (--gallery ID | --spec FILE) [--tol 1e-9] [--budget N]
                         [--per-layer K] [--output report.json] [--csv sums.csv]

CSV columns: address, position, coord_1..coord_d, tail_bound, status, residual
"""
from ._run import RunCommand, head


class Command(RunCommand):
    help = (
        'Classify a transfinite family (bounded / summable / absolutely summable) and sum it. '
        'CSV columns: address, position, coord_1..coord_d, tail_bound, status, residual.'
    )
    subcommand = 'sum'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--per-layer', dest='per_layer', type=int, default=16,
                            help='Children per layer in the partial-sum table')

    def summarize(self, report):
        results = report.results
        self.stdout.write(f"  verdict: {results.get('verdict')}")
        self.stdout.write(f"  absolutely: {results.get('absolute_verdict')}")
        self.stdout.write(f"  bounded: {results.get('bounded_verdict')}")
        if results.get('total') is not None:
            self.stdout.write(f"  total: {head(results['total'])}")
            if results.get('residual') is not None:
                self.stdout.write(f"  residual: {results['residual']:.3e}")
