from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from transquad.services import gallery, specs
from transquad.services.config import SolverConfig
from transquad.services.exceptions import MonotonicityViolation
from transquad.services.impulsive import (
    derivative_defects,
    epsilon_solution,
    extremal_solutions,
    fixed_data_solution,
    jump_check,
    solve_fixed,
    source_primitive,
)


def small_config():
    return SolverConfig().but(series_terms=128, prefix_length=8)


def sawtooth_base(t, terms):
    ns = np.arange(1, terms + 1, dtype=float)
    nt = t * ns
    x = nt - np.floor(nt) - 1.0
    return float(np.sum(x * x * np.cos(np.pi / (2.0 * x)) / ns ** 3))


def staircase(t):
    """sum of 2^-(n+1) over the impulse times 1 - 2^-(n+1) below t"""
    total, n = 0.0, 0
    while 1.0 - 2.0 ** -(n + 1) < t and n < 60:
        total += 2.0 ** -(n + 1)
        n += 1
    return total


class PureImpulseTests(SimpleTestCase):
    def setUp(self):
        self.problem = gallery.get('dyadic-impulses').obj
        self.z = self.problem.impulse_bounds[0]
        self.u = fixed_data_solution(None, self.z, start=0.0, end=1.0)

    def test_staircase(self):
        for t in np.linspace(0.0, 0.999, 100):
            with self.subTest(t=t):
                self.assertAlmostEqual(self.u(t).value, staircase(t), delta=1e-12)

    def test_left_continuous_at_impulse_times(self):
        self.assertEqual(self.u(0.5).value, 0.0)
        self.assertAlmostEqual(self.u(0.75).value, 0.5, delta=1e-12)

    def test_jumps(self):
        for k in range(1, 10):
            lam = 1.0 - 2.0 ** -k
            with self.subTest(k=k):
                self.assertAlmostEqual(jump_check(self.u, lam).value, 2.0 ** -k, places=12)

    def test_value_at_the_end(self):
        value, residual = self.u.evaluate(1.0)
        self.assertAlmostEqual(value.value, 1.0, delta=1e-6)
        self.assertLessEqual(residual, 1e-6)


class FixedDataTests(SimpleTestCase):
    def test_source_and_jumps_add(self):
        config = small_config()
        z = gallery.get('dyadic-impulses', space='c0:8').obj.impulse_bounds[0]
        g = gallery.get('ex41.g0', space='c0:8', config=config).obj
        value, residual = solve_fixed(g, z, 0.7, tol=1e-6, config=config)
        exact = sawtooth_base(0.7, 128) - sawtooth_base(0.0, 128)
        np.testing.assert_allclose(value.coords, 0.5 + exact / np.arange(1, 9), atol=1e-9)
        self.assertLessEqual(residual, 1e-6)

    def test_eps_solution_is_within_eps(self):
        config = small_config()
        g = gallery.get('ex41.g0', space='c0:8', config=config).obj
        eps = 0.1
        u = epsilon_solution(g, None, eps=eps, config=config)
        exact = sawtooth_base(0.7, 128) - sawtooth_base(0.0, 128)
        value, residual = u.evaluate(0.7)
        self.assertLessEqual(np.max(np.abs(value.coords - exact / np.arange(1, 9))), residual + 1e-9)
        self.assertGreaterEqual(residual, eps * 0.7)


class ExtremalSolutionTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = small_config()
        cls.problem = gallery.get('ex54', dim=32, inner_terms=64, config=cls.config).obj
        cls.solutions = extremal_solutions(cls.problem, tol=1e-4, config=cls.config, keep_iterates=True)

    def test_chains_meet(self):
        lower, upper = self.solutions.lower, self.solutions.upper
        self.assertTrue(np.all(lower.values_on_grid <= upper.values_on_grid + 1e-9))
        self.assertLessEqual(self.solutions.gap, 1e-4)
        self.assertLessEqual(self.solutions.residual, 1e-4)
        self.assertTrue(all(k >= 1 for k in self.solutions.iterations))

    def test_chains_are_monotone(self):
        for direction, sign in (('ascending', 1.0), ('descending', -1.0)):
            iterates = np.stack(self.solutions.iterates[direction])
            with self.subTest(direction=direction):
                self.assertEqual(len(iterates), self.solutions.iterations[0 if sign > 0 else 1] + 1)
                slack = 1e-12 * (1.0 + float(np.max(np.abs(iterates))))
                steps = sign * np.diff(iterates, axis=0)
                self.assertGreaterEqual(float(np.min(steps)), -slack)
                self.assertLessEqual(self.solutions.history[direction][-1], 0.5e-4)

    def test_iterates_stay_between_the_chains(self):
        lower = self.solutions.iterates['ascending']
        upper = self.solutions.iterates['descending']
        self.assertTrue(np.all(lower[-1] <= upper[-1] + 1e-9))
        self.assertTrue(np.all(lower[0] <= lower[-1] + 1e-12))
        self.assertTrue(np.all(upper[-1] <= upper[0] + 1e-12))

    def test_impulse_at_one_half(self):
        lower = self.solutions.lower
        jump = lower.right_limit(0.5).coords - lower(0.5).coords
        np.testing.assert_allclose(jump, 0.5 * 2.0 ** -np.arange(1, 33), atol=1e-12)

    def test_derivative_matches_right_hand_side(self):
        source = self.problem.source
        h = 1e-8
        ts = (2.0 * np.arange(512) + 1.0) / 512.0
        calm = np.array([t for t in ts if source.osc(t - h, t + h) <= 5e-3])
        self.assertGreaterEqual(len(calm), 256)
        defects = derivative_defects(self.problem, self.solutions.lower, calm, h=h)
        self.assertLess(float(np.max(defects)), 1e-2)

    def test_rows_carry_residuals(self):
        rows = list(self.solutions.rows())
        self.assertEqual(sorted(rows[0]), ['chain', 'coords', 'residual', 't'])
        self.assertEqual({row['chain'] for row in rows}, {'ascending', 'descending'})
        self.assertLessEqual(max(row['residual'] for row in rows), 1e-4)

    def test_report_dict(self):
        data = self.solutions.to_dict()
        self.assertEqual(sorted(data), ['gap', 'history', 'iterations', 'residual'])
        self.assertEqual(sorted(data['iterations']), ['ascending', 'descending'])

    def test_decreasing_right_hand_side_is_refused(self):
        with self.assertRaises(MonotonicityViolation):
            extremal_solutions(replace(self.problem, increasing=False), config=self.config)


def dyadic_family(value, remainder):
    return {
        'type': 'family',
        'index': {'kind': 'dyadic', 'min': 0.5, 'sup': 1},
        'value': value,
        'remainder': remainder,
        'nonnegative': True,
    }


class StateImpulseTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = SolverConfig().but(grid_per_unit=128)
        tree = {
            'type': 'problem',
            'interval': [0, 1],
            'impulses': dyadic_family('2^(-n-2)', '2^(-n-1)'),
            'impulse': '2^(-n-2)*(1+atan(u)/2)',
            'impulse_bounds': [
                dyadic_family('2^(-n-2)/5', '2^(-n-1)/5'),
                dyadic_family('2^(-n-2)*9/5', '2^(-n-1)*9/5'),
            ],
        }
        cls.problem = specs.build(tree, cls.config).obj
        cls.solutions = extremal_solutions(cls.problem, tol=1e-10, config=cls.config)

    def test_jumps_see_the_state(self):
        lower = self.solutions.lower
        first = lower.right_limit(0.5).value - lower(0.5).value
        second = lower.right_limit(0.75).value - lower(0.75).value
        self.assertAlmostEqual(first, 0.25, delta=1e-9)
        self.assertAlmostEqual(second, 0.125 * (1.0 + np.arctan(0.25) / 2.0), delta=1e-9)

    def test_chains_meet(self):
        self.assertLessEqual(self.solutions.gap, 1e-9)
        self.assertLessEqual(self.solutions.residual, 1e-9)
        self.assertAlmostEqual(
            self.solutions.upper(0.8).value, 0.25 + 0.125 * (1.0 + np.arctan(0.25) / 2.0), delta=1e-9
        )


class SourceWithoutPrimitiveTests(SimpleTestCase):
    def solve(self, source):
        config = SolverConfig().but(grid_per_unit=128)
        tree = {
            'type': 'problem',
            'interval': [0, 1],
            'impulses': dyadic_family('2^(-n-1)', '2^(-n)'),
            'source': source,
            'coupling': 'atan(s)/10',
            'coupling_bounds': [-0.16, 0.16],
        }
        problem = specs.build(tree, config).obj
        return extremal_solutions(problem, tol=1e-3, config=config)

    def test_integrated_source_matches_closed_form(self):
        mapping = {'type': 'mapping', 'domain': [0, 1], 'value': 't', 'lipschitz': 1, 'right_continuous': True}
        numeric = self.solve(mapping)
        exact = self.solve(dict(mapping, primitive='t^2/2'))
        for chain in ('lower', 'upper'):
            with self.subTest(chain=chain):
                ours = getattr(numeric, chain).values_on_grid
                theirs = getattr(exact, chain).values_on_grid
                self.assertLessEqual(float(np.max(np.abs(ours - theirs))), 5e-3)
        self.assertLessEqual(numeric.residual, 1e-3)

    def test_source_rows_integrate_the_mapping(self):
        mapping = {'type': 'mapping', 'domain': [0, 1], 'value': 't', 'lipschitz': 1, 'right_continuous': True}
        problem = specs.build(
            {'type': 'problem', 'interval': [0, 1], 'impulses': dyadic_family('2^(-n-1)', '2^(-n)'), 'source': mapping}
        ).obj
        rows = source_primitive(problem, tol=1e-3)(np.array([0.0, 0.5, 1.0]))
        np.testing.assert_allclose(rows[:, 0], [0.0, 0.125, 0.5], atol=1e-3)
