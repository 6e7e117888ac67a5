"""
Integrate a right-regulated mapping.

Usage:
    python manage.py integrate --mapping (gallery:ID | FILE) [--interval A B]
                               [--mode hl|hk|bochner|riemann] [--tol 1e-3] [--budget N]
                               [--eps-levels L] [--eps E] [--output report.json] [--csv primitive.csv]

CSV columns: cell, left, right, osc_bound, resolved, certified (with --eps),
otherwise t, coord_1..coord_d, residual (the CD primitive)
"""
from transquad.services.specs import GALLERY_PREFIX

from ._run import RunCommand
from .integrate_step import write_verdicts


class Command(RunCommand):
    help = (
        'Integrability verdicts, integral and primitive of a right-regulated mapping. '
        'CSV columns: cell, left, right, osc_bound, resolved, certified with --eps; '
        'otherwise t, coord_1..coord_d, residual.'
    )
    subcommand = 'integrate'
    default_tol = 1e-3

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--mapping', type=str, help='gallery:<id> or a spec file')
        parser.add_argument('--interval', nargs=2, type=str, metavar=('A', 'B'))
        parser.add_argument('--mode', choices=['hl', 'hk', 'bochner', 'riemann'], default='hl')
        parser.add_argument('--eps-levels', dest='eps_levels', type=int, help='Length of the eps schedule')
        parser.add_argument('--eps', type=float, help='Also emit the oscillation partition at this eps')

    def form_data(self, options):
        data = super().form_data(options)
        mapping = options.get('mapping')
        if mapping:
            if mapping.startswith(GALLERY_PREFIX):
                data['gallery'] = mapping
            else:
                data['spec'] = mapping
        return data

    def summarize(self, report):
        write_verdicts(self, report)
