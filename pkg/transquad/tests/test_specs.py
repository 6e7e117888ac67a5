import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from transquad.services import specs
from transquad.services.exceptions import SpecError
from transquad.services.impulsive import fixed_data_solution
from transquad.services.step_integral import StepMapping
from transquad.services.transfinite_sum import total

GEOMETRIC = {
    'type': 'family',
    'index': {'kind': 'dyadic', 'depth': 1},
    'value': '2^(-n)',
    'remainder': '2^(1-n)',
    'nonnegative': True,
}

DYADIC_JUMPS = {
    'type': 'family',
    'index': {'kind': 'dyadic', 'min': 0.5, 'sup': 1},
    'value': '2^(-n-1)',
    'remainder': '2^(-n)',
    'nonnegative': True,
}


class ParamsTests(SimpleTestCase):
    def test_parse(self):
        self.assertEqual(specs.parse_params('m=2, dim=16'), {'m': '2', 'dim': '16'})
        self.assertEqual(specs.parse_params(''), {})
        self.assertEqual(specs.parse_params(None), {})

    def test_bad_pair(self):
        with self.assertRaises(SpecError):
            specs.parse_params('m')
        with self.assertRaises(SpecError):
            specs.parse_params('=2')


class ReadTreeTests(SimpleTestCase):
    def test_missing_file(self):
        with self.assertRaises(SpecError):
            specs.read_tree('/nonexistent/spec.json')

    def test_invalid_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'broken.json'
            path.write_text('{"type": "family",', encoding='utf-8')
            with self.assertRaises(SpecError):
                specs.read_tree(path)

    def test_load_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'geo.json'
            path.write_text(json.dumps(GEOMETRIC), encoding='utf-8')
            loaded = specs.load(str(path))
        self.assertEqual(loaded.kind, 'family')
        self.assertEqual(loaded.source, str(path))
        self.assertEqual(loaded.expected, {})

    def test_load_from_gallery(self):
        loaded = specs.load('gallery:ex42.g_m', params={'m': '2'})
        self.assertEqual(loaded.kind, 'mapping')
        self.assertEqual(loaded.entry.params, {'m': 2})
        self.assertEqual(loaded.expected['riemann'], 'false')


class BuildTests(SimpleTestCase):
    def test_formula_family(self):
        family = specs.build(GEOMETRIC).obj
        self.assertAlmostEqual(total(family, 1e-9).value.value, 2.0, delta=1e-9)

    def test_explicit_values(self):
        tree = {
            'type': 'family',
            'space': 'vec:2',
            'index': {'kind': 'finite', 'values': [0.0, 1.0]},
            'values': [[1.0, 2.0], [3.0, 4.0]],
        }
        family = specs.build(tree).obj
        np.testing.assert_array_equal(family.value(family.index.address(1)).coords, [3.0, 4.0])

    def test_explicit_values_need_a_finite_index(self):
        tree = dict(GEOMETRIC, values=[1.0, 2.0])
        with self.assertRaises(SpecError):
            specs.build(tree)

    def test_step_over_gallery_family(self):
        loaded = specs.build({'type': 'step', 'steps': 'gallery:geo-lambda0'})
        self.assertEqual(loaded.kind, 'step')
        self.assertIsInstance(loaded.obj, StepMapping)
        self.assertEqual(loaded.obj(0.0).value, 1.0)

    def test_mapping(self):
        tree = {'type': 'mapping', 'domain': [0, 'inf'], 'value': '2*t*i', 'primitive': 't^2*i', 'lipschitz': 2}
        g = specs.build(dict(tree, space='vec:2')).obj
        self.assertTrue(math.isinf(g.end))
        np.testing.assert_allclose(g.values([0.5]), [[1.0, 2.0]])
        coords, error = g.primitive(np.array([0.5]))
        np.testing.assert_allclose(coords, [[0.25, 0.5]])
        self.assertEqual(error, 0.0)
        self.assertAlmostEqual(g.osc(0.0, 0.25), 0.5)

    def test_pure_impulse_problem(self):
        problem = specs.build({'type': 'problem', 'interval': [0, 1], 'impulses': DYADIC_JUMPS}).obj
        u = fixed_data_solution(None, problem.impulse_bounds[0], start=0.0, end=1.0)
        self.assertAlmostEqual(u(0.8).value, 0.75, delta=1e-12)
        self.assertIsNone(problem.source)

    def test_coupling(self):
        tree = {
            'type': 'problem',
            'interval': [0, 1],
            'impulses': DYADIC_JUMPS,
            'coupling': 'atan(s)',
            'coupling_bounds': [-2, 2],
        }
        problem = specs.build(tree).obj
        np.testing.assert_allclose(problem.coupling_values([0.0], [[1.0]]), [[math.atan(1.0)]])
        np.testing.assert_array_equal(problem.coupling_bounds[1], [2.0])

    def test_state_dependent_impulse(self):
        tree = {
            'type': 'problem',
            'interval': [0, 1],
            'impulses': DYADIC_JUMPS,
            'impulse': '2^(-n-1)*(1+atan(u)/2)',
            'impulse_bounds': [DYADIC_JUMPS, dict(DYADIC_JUMPS, value='2^(-n)', remainder='2^(1-n)')],
        }
        problem = specs.build(tree).obj
        self.assertTrue(problem.state_impulses)
        address = problem.impulses.locate(0.75)
        np.testing.assert_allclose(problem.impulse(address, np.array([1.0])), [0.25 * (1.0 + math.atan(1.0) / 2.0)])
        np.testing.assert_allclose(problem.impulse(address, None), [0.25])

    def test_impulse_formula_needs_bounds(self):
        tree = {'type': 'problem', 'interval': [0, 1], 'impulses': DYADIC_JUMPS, 'impulse': '2^(-n-1)*u'}
        with self.assertRaises(SpecError):
            specs.build(tree)

    def test_source_without_primitive(self):
        tree = {
            'type': 'problem',
            'interval': [0, 1],
            'impulses': DYADIC_JUMPS,
            'source': {'type': 'mapping', 'domain': [0, 1], 'value': 't', 'lipschitz': 1},
        }
        problem = specs.build(tree).obj
        self.assertIsNone(problem.source.primitive)
        self.assertFalse(problem.state_impulses)

    def test_problem_space_must_match_impulses(self):
        with self.assertRaises(SpecError):
            specs.build({'type': 'problem', 'interval': [0, 1], 'impulses': DYADIC_JUMPS, 'space': 'vec:2'})

    def test_bad_trees(self):
        with self.assertRaises(SpecError):
            specs.build({'type': 'operator'})
        with self.assertRaises(SpecError):
            specs.build(3)
        with self.assertRaises(SpecError):
            specs.build('ex41.g0')
        with self.assertRaises(SpecError):
            specs.build('gallery:ex41.g0', expect=('family',))
        with self.assertRaises(SpecError):
            specs.build({'type': 'family', 'value': '2^(-n)'})
