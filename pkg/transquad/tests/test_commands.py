import csv
import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from transquad.forms import RunConfigForm

SMALL = dict(TRANSQUAD_SERIES_TERMS=128, TRANSQUAD_PREFIX_LENGTH=8)


@override_settings(**SMALL)
class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def run_command(self, name, **options):
        out = StringIO()
        path = self.tmp / f'{name}.json'
        call_command(name, output=str(path), stdout=out, **options)
        return json.loads(path.read_text(encoding='utf-8')), out.getvalue()


class SumCommandTests(CommandTestCase):
    def test_geometric_family(self):
        report, out = self.run_command('sum', gallery='geo-lambda0', tol=1e-9)
        self.assertEqual(report['schema'], 'transquad.report/1')
        self.assertEqual(report['status'], 'certified')
        self.assertEqual(report['exit_code'], 0)
        self.assertAlmostEqual(report['results']['total']['coords'][0], 2.0, delta=1e-9)
        self.assertTrue(report['results']['conforms'])
        self.assertIn('sum: certified', out)

    def test_reports_are_reproducible(self):
        first, second = self.tmp / 'first.json', self.tmp / 'second.json'
        for path in (first, second):
            call_command('sum', gallery='geo-lambda0', tol=1e-9, output=str(path), stdout=StringIO())
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_csv_table(self):
        path = self.tmp / 'sums.csv'
        call_command('sum', gallery='geo-lambda0', params='space=vec:2', tol=1e-9, csv=str(path), stdout=StringIO())
        with open(path, newline='', encoding='utf-8') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ['address', 'position', 'coord_1', 'coord_2', 'tail_bound', 'status', 'residual'])
        self.assertEqual(len(rows), 17)

    def test_inconclusive_spec_exits_with_two(self):
        spec = self.tmp / 'slow.json'
        spec.write_text(json.dumps({
            'type': 'family',
            'index': {'kind': 'dyadic', 'depth': 1},
            'value': '1/(n+1)^(1.1)',
        }), encoding='utf-8')
        with self.assertRaises(CommandError) as ctx:
            call_command('sum', spec=str(spec), tol=1e-9, budget=1000, stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)


class InputErrorTests(CommandTestCase):
    def assertInputError(self, name, **options):
        with self.assertRaises(CommandError) as ctx:
            call_command(name, stdout=StringIO(), **options)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_bad_tolerance(self):
        self.assertInputError('sum', gallery='geo-lambda0', tol=-1.0)

    def test_missing_spec_file(self):
        self.assertInputError('sum', spec=str(self.tmp / 'missing.json'))

    def test_unknown_gallery_id(self):
        self.assertInputError('sum', gallery='ex99')

    def test_spec_and_gallery_together(self):
        self.assertInputError('sum', gallery='geo-lambda0', spec=str(self.tmp / 'x.json'))

    def test_wrong_kind(self):
        self.assertInputError('integrate_step', gallery='geo-lambda0')

    def test_bad_interval(self):
        self.assertInputError('integrate', mapping='gallery:ex41.g0', interval=['1', '0'])


class IntegrationCommandTests(CommandTestCase):
    def test_integrate_step(self):
        report, out = self.run_command('integrate_step', gallery='ex32.ex1', tol=1e-3)
        verdicts = report['results']['verdicts']
        self.assertEqual(verdicts['hl']['value'], 'true')
        self.assertEqual(verdicts['riemann']['value'], 'false')
        self.assertTrue(report['results']['conforms'])
        self.assertEqual(report['tables']['primitive']['columns'], ['t', 'coord_1', 'residual'])

    def test_integrate_mapping(self):
        report, out = self.run_command(
            'integrate', mapping='gallery:ex41.g0', interval=['0', '1'], mode='riemann', tol=2e-2
        )
        self.assertEqual(report['status'], 'certified')
        self.assertEqual(report['results']['verdicts']['riemann']['value'], 'true')
        self.assertEqual(report['results']['interval'], [0.0, 1.0])
        self.assertEqual(len(report['tables']['primitive']['rows']), 33)
        self.assertIn('riemann: true', out)

    def test_gauge_check(self):
        report, out = self.run_command('gauge_check', gallery='ex32.ex1-trunc')
        self.assertEqual(report['status'], 'certified')
        results = report['results']
        self.assertTrue(results['monotone'] and results['hk_below_hl'] and results['all_fine'])
        self.assertEqual(
            report['tables']['defects']['columns'], ['scale', 'cells', 'hl_defect', 'hk_defect', 'residual', 'fine']
        )

    def test_impulsive_solve(self):
        report, out = self.run_command('impulsive_solve', gallery='dyadic-impulses')
        self.assertEqual(report['status'], 'certified')
        jumps = report['results']['jumps']
        self.assertEqual(jumps[0]['lambda'], 0.5)
        self.assertAlmostEqual(jumps[0]['jump'][0], 0.5, places=12)
        self.assertAlmostEqual(jumps[3]['jump'][0], 2.0 ** -4, places=12)
        rows = report['tables']['trajectory']['rows']
        self.assertEqual(rows[0][1], 0.0)

    def test_state_dependent_impulses_use_monotone_iteration(self):
        jumps = {
            'type': 'family',
            'index': {'kind': 'dyadic', 'min': 0.5, 'sup': 1},
            'value': '2^(-n-2)',
            'remainder': '2^(-n-1)',
            'nonnegative': True,
        }
        spec = self.tmp / 'state.json'
        spec.write_text(json.dumps({
            'type': 'problem',
            'interval': [0, 1],
            'impulses': jumps,
            'impulse': '2^(-n-2)*(1+atan(u)/2)',
            'impulse_bounds': [dict(jumps, value='2^(-n-2)/5'), dict(jumps, value='2^(-n-2)*9/5')],
        }), encoding='utf-8')
        report, out = self.run_command('impulsive_solve', spec=str(spec), tol=1e-8)
        self.assertEqual(report['status'], 'certified')
        self.assertLessEqual(report['results']['residual'], 1e-8)
        table = report['tables']['trajectory']
        self.assertEqual(table['columns'], ['t', 'coord_1', 'residual', 'chain'])
        self.assertEqual({row[-1] for row in table['rows']}, {'ascending', 'descending'})


class RunConfigFormTests(SimpleTestCase):
    def form(self, **data):
        base = {'subcommand': 'integrate', 'gallery': 'ex41.g0', 'tol': '1e-3'}
        base.update(data)
        return RunConfigForm(data=base)

    def test_valid_options(self):
        form = self.form(interval='0 inf', params='m=2', scales='2,3')
        self.assertTrue(form.is_valid(), form.errors)
        config = form.to_run_config()
        self.assertEqual(config.source, 'gallery:ex41.g0')
        self.assertEqual(config.interval, (0.0, float('inf')))
        self.assertEqual(config.params, {'m': '2'})
        self.assertEqual(config.scales, (2, 3))
        self.assertEqual(config.mode, 'hl')

    def test_default_scales(self):
        form = self.form()
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.to_run_config().scales, (4, 6, 8))

    def test_invalid_options(self):
        for data in (
            {'tol': '0'},
            {'interval': '1 0'},
            {'interval': 'inf 2'},
            {'interval': '0'},
            {'scales': 'x'},
            {'params': 'm'},
            {'eps': '-1'},
            {'mode': 'lebesgue'},
            {'spec': 'f.json'},
            {'gallery': ''},
        ):
            with self.subTest(data=data):
                self.assertFalse(self.form(**data).is_valid())
