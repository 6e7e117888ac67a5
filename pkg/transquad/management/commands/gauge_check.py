"""
Check Riemann sums of a step mapping against its primitive under canonical gauges.

Usage:
    python manage.py gauge_check (--gallery ID | --spec FILE) [--scales 4,6,8]
                                 [--output report.json] [--csv defects.csv]

CSV columns: scale, cells, hl_defect, hk_defect, fine
"""
from ._run import RunCommand


class Command(RunCommand):
    help = (
        'HL and HK defects of delta-fine partitions for canonical gauges 2^-k. '
        'CSV columns: scale, cells, hl_defect, hk_defect, fine.'
    )
    subcommand = 'gauge_check'
    default_tol = 1e-9

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--scales', type=str, default='4,6,8', help='Exponents k of the scales 2^-k')

    def summarize(self, report):
        table = report.tables.get('defects')
        if table is None:
            return
        for row in table.rows:
            self.stdout.write(
                f"  scale {row['scale']:.3e}: {row['cells']} cells, "
                f"HL {row['hl_defect']:.3e}, HK {row['hk_defect']:.3e}"
            )
