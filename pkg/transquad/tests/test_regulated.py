import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from transquad.services import gallery, specs
from transquad.services.config import SolverConfig
from transquad.services.exceptions import BudgetExceeded, SpecError
from transquad.services.regulated import (
    assess,
    build_partition,
    cd_primitive,
    discontinuities,
    g_epsilon_step,
    integrate_regulated,
    partition_integral,
    shell_test,
    step_regulated,
)
from transquad.services.spaces import SpaceKind, Tri

MODES = ('hl', 'hk', 'bochner', 'riemann')


def small_config():
    return SolverConfig().but(series_terms=128, prefix_length=8)


def tracked_config():
    return SolverConfig().but(series_terms=128, prefix_length=64, block_budget=8)


def sawtooth_base(t, terms):
    """sum_n x_n(t)^2 cos(pi / 2 x_n(t)) / n^3 straight from the formula"""
    ns = np.arange(1, terms + 1, dtype=float)
    nt = t * ns
    x = nt - np.floor(nt) - 1.0
    return float(np.sum(x * x * np.cos(np.pi / (2.0 * x)) / ns ** 3))


def sawtooth_primitive(t, dim, terms=128):
    """f0(t) - f0(0) on the first `dim` coordinates"""
    return (sawtooth_base(t, terms) - sawtooth_base(0.0, terms)) / np.arange(1, dim + 1)


class PartitionTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = tracked_config()
        cls.g = gallery.get('ex41.g0', config=cls.config).obj
        cls.partitions = {
            eps: build_partition(cls.g, 0.0, 1.0, eps, config=cls.config)
            for eps in (0.5, 0.25, 0.125, 0.1, 0.0625)
        }

    def test_cells_tile_the_interval(self):
        for eps, partition in self.partitions.items():
            with self.subTest(eps=eps):
                points = partition.points
                self.assertEqual(points[0], 0.0)
                self.assertEqual(points[-1], 1.0)
                self.assertTrue(np.all(np.diff(points) > 0))
                self.assertTrue(partition.certified)

    def test_resolved_cells_respect_eps(self):
        rng = np.random.default_rng(7)
        for eps in (0.5, 0.25, 0.1):
            resolved = [c for c in self.partitions[eps].cells if c.resolved]
            self.assertTrue(resolved)
            worst = 0.0
            for cell in resolved:
                self.assertLessEqual(cell.bound, eps)
                ts = cell.left + (cell.right - cell.left) * rng.random(1000)
                ts = np.append(ts[ts < cell.right], cell.left)
                spread = float(np.max(np.ptp(self.g.values(ts), axis=0)))
                worst = max(worst, spread)
            with self.subTest(eps=eps, cells=len(resolved)):
                self.assertLessEqual(worst, eps + 1e-9)

    def test_step_integrals_settle(self):
        integrals = {eps: partition_integral(self.g, p)[0].coords for eps, p in self.partitions.items()}
        for eps in (0.5, 0.25, 0.125):
            with self.subTest(eps=eps):
                difference = np.max(np.abs(integrals[eps] - integrals[eps / 2]))
                self.assertLessEqual(difference, 1.5 * eps + 1e-9)

    def test_step_integral_within_its_residual(self):
        exact = sawtooth_primitive(1.0, 64)
        for eps, partition in self.partitions.items():
            value, residual = partition_integral(self.g, partition)
            with self.subTest(eps=eps):
                self.assertLessEqual(np.max(np.abs(value.coords - exact)), residual + 1e-9)
                self.assertLessEqual(residual, eps + 1e-6)

    def test_rows(self):
        rows = list(self.partitions[0.5].rows())
        self.assertEqual(rows[0]['cell'], 0)
        self.assertEqual(rows[0]['left'], 0.0)
        self.assertEqual(sorted(rows[0]), ['cell', 'certified', 'left', 'osc_bound', 'resolved', 'right'])

    def test_budget(self):
        with self.assertRaises(BudgetExceeded) as ctx:
            build_partition(self.g, 0.0, 1.0, 0.1, budget=5, config=self.config)
        partial = ctx.exception.partial
        self.assertEqual(len(partial.cells), 5)
        self.assertFalse(partial.complete)


class EpsilonStepTests(SimpleTestCase):
    def setUp(self):
        tree = {'type': 'mapping', 'domain': [0, 1], 'value': '2*t', 'lipschitz': 2}
        self.g = specs.build(tree).obj

    def test_whole_interval_when_calm(self):
        step = g_epsilon_step(self.g, 0.0, 2.0)
        self.assertEqual(step.y, 1.0)
        self.assertTrue(step.certified)

    def test_largest_admissible_step(self):
        step = g_epsilon_step(self.g, 0.0, 0.5)
        self.assertEqual(step.y, 0.25)
        self.assertEqual(step.bound, 0.5)

    def test_steps_from_an_inner_point(self):
        step = g_epsilon_step(self.g, 0.5, 0.3)
        self.assertGreater(step.y, 0.5)
        self.assertLessEqual(self.g.osc(0.5, step.y), 0.3)
        self.assertGreater(step.y - 0.5, 0.95 * 0.15)

    def test_warm_start_from_a_guess(self):
        step = g_epsilon_step(self.g, 0.0, 0.5, guess=0.01)
        self.assertLessEqual(step.y, 0.25)
        self.assertGreaterEqual(step.y, 0.95 * 0.25)
        self.assertLessEqual(step.bound, 0.5)


class SampledOscillationTests(SimpleTestCase):
    def test_partition_without_oracle_is_uncertified(self):
        g = replace(gallery.constant_mapping(SpaceKind('real'), 0.0, 1.0), osc=None)
        partition = build_partition(g, 0.0, 1.0, 0.5)
        self.assertEqual(len(partition.cells), 1)
        self.assertFalse(partition.certified)

    def test_rejects_nonpositive_eps(self):
        g = gallery.constant_mapping(SpaceKind('real'), 0.0, 1.0)
        with self.assertRaises(ValueError):
            build_partition(g, 0.0, 1.0, 0.0)


class IntegralTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = small_config()
        cls.tracked = tracked_config()
        cls.g0 = gallery.get('ex41.g0', config=cls.tracked).obj
        cls.unit = integrate_regulated(cls.g0, 0.0, 1.0, 'riemann', tol=4e-3, config=cls.tracked)
        cls.short = integrate_regulated(cls.g0, 0.0, 0.7, 'hl', tol=4e-3, config=cls.tracked)

    def assertPartitionRoute(self, verdict, tol):
        self.assertEqual(verdict.route, 'oscillation partition')
        self.assertNotEqual(verdict.route, 'primitive')
        self.assertTrue(verdict.certified)
        self.assertLessEqual(verdict.residual, tol)
        self.assertGreater(verdict.notes['strips'], 0)
        self.assertGreater(verdict.notes['resolved_share'], 0.5)

    def test_integral_over_unit_interval_vanishes(self):
        self.assertIs(self.unit.riemann.value, Tri.TRUE)
        self.assertPartitionRoute(self.unit, 4e-3)
        self.assertEqual(len(self.unit.integral.coords), 64)
        self.assertLessEqual(np.max(np.abs(self.unit.integral.coords)), 1e-3)

    def test_integral_up_to_point_seven(self):
        self.assertPartitionRoute(self.short, 4e-3)
        error = np.max(np.abs(self.short.integral.coords - sawtooth_primitive(0.7, 64)))
        self.assertLessEqual(error, 1e-3)
        self.assertLessEqual(error, self.short.residual + 1e-9)

    def test_mapping_without_primitive(self):
        tree = {'type': 'mapping', 'domain': [0, 1], 'value': 'cos(t)', 'lipschitz': 1}
        g = specs.build(tree).obj
        verdict = integrate_regulated(g, 0.0, 1.0, 'riemann', tol=1e-3, config=self.config)
        self.assertEqual(verdict.route, 'oscillation partition')
        self.assertTrue(verdict.certified)
        self.assertAlmostEqual(verdict.integral.value, math.sin(1.0), delta=1e-3)
        self.assertEqual(verdict.notes['strips'], 0)

    def test_constant_mapping(self):
        entry = gallery.get('const-e', space='vec:2')
        verdict = integrate_regulated(entry.obj, mode='riemann', tol=1e-9, config=self.config)
        np.testing.assert_allclose(verdict.integral.coords, entry.exact.coords)
        self.assertEqual(verdict.notes['cells'], 1)

    def test_gallery_verdicts(self):
        for entry_id in ('ex41.g0', 'ex42.g_m', 'ex43.g^m'):
            entry = gallery.get(entry_id, config=self.config)
            verdict = integrate_regulated(entry.obj, 0.0, 1.0, 'hl', tol=5e-2, config=self.config)
            for mode in MODES:
                with self.subTest(entry=entry_id, mode=mode):
                    self.assertEqual(verdict.for_mode(mode).value.value, entry.expected[mode])

    def test_shell_test_sees_blow_up(self):
        g = gallery.get('ex42.g_m', config=self.config).obj
        bounded, absolute = shell_test(g, 1.0, 0.0, config=self.config)
        self.assertIs(bounded, Tri.FALSE)
        self.assertIs(absolute, Tri.FALSE)

    def test_weighted_variants(self):
        for entry_id in ('ex41.g0.exp', 'ex42.g_m.exp', 'ex43.g^m.exp'):
            entry = gallery.get(entry_id, config=self.config)
            verdicts = dict(zip(MODES, assess(entry.obj, 0.0, math.inf, self.config)))
            for mode, expected in entry.expected.items():
                with self.subTest(entry=entry_id, mode=mode):
                    self.assertEqual(verdicts[mode].value.value, expected)

    def test_improper_integral_of_decaying_constant(self):
        base = gallery.constant_mapping(SpaceKind('real'), 0.0, math.inf)
        g = gallery.exp_weighted(base)
        verdict = integrate_regulated(g, 0.0, math.inf, 'riemann', tol=1e-6, config=self.config)
        self.assertIs(verdict.riemann.value, Tri.TRUE)
        self.assertAlmostEqual(verdict.integral.value, 1.0, delta=1e-6)

    def test_primitive_samples(self):
        primitive = cd_primitive(self.g0, 0.0, 1.0, config=self.tracked, partition=self.unit.partition)
        rows = primitive.sample([0.0, 0.35, 0.7, 1.0])
        self.assertEqual(rows[0][0], 0.0)
        self.assertTrue(np.all(rows[0][1].coords == 0.0))
        for t, value, residual in rows[1:]:
            error = np.max(np.abs(value.coords - sawtooth_primitive(t, 64)))
            with self.subTest(t=t):
                self.assertLessEqual(error, 1e-3)
                self.assertLessEqual(error, residual + 1e-9)
        np.testing.assert_allclose(rows[-1][1].coords, self.unit.integral.coords, atol=1e-12)

    def test_primitive_is_vectorised(self):
        primitive = cd_primitive(self.g0, 0.0, 1.0, config=self.tracked, partition=self.unit.partition)
        ts = np.linspace(0.0, 1.0, 9)
        coords = primitive.coords(ts)
        self.assertEqual(coords.shape, (9, 64))
        np.testing.assert_allclose(coords[4], primitive(0.5).coords)
        with self.assertRaises(ValueError):
            primitive.evaluate(1.5)


class DiscontinuityTests(SimpleTestCase):
    def test_small_denominators_show_up(self):
        config = small_config()
        g = gallery.get('ex41.g0', config=config).obj
        sample = discontinuities(g, 0.0, 1.0, n_max=2, config=config)
        for rho in (1 / 2, 1 / 3, 2 / 3):
            with self.subTest(rho=rho):
                self.assertLess(np.min(np.abs(sample.points - rho)), 1e-9)


class StepAdapterTests(SimpleTestCase):
    def test_partition_of_truncated_steps_is_its_knots(self):
        entry = gallery.get('ex32.ex1-trunc')
        g = step_regulated(entry.obj)
        partition = build_partition(g, eps=0.01)
        np.testing.assert_array_equal(partition.points, entry.obj.index.layers[0].values)
        self.assertTrue(all(c.resolved and c.bound == 0.0 for c in partition.cells))
        value, residual = partition_integral(g, partition)
        np.testing.assert_allclose(value.coords, entry.exact.coords, atol=1e-12)

    def test_nested_steps_are_rejected(self):
        with self.assertRaises(SpecError):
            step_regulated(gallery.get('ex33.lambda_m').obj)
