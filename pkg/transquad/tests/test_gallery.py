import numpy as np
from django.test import SimpleTestCase

from transquad.services import gallery
from transquad.services.config import SolverConfig
from transquad.services.exceptions import SpecError, UnknownId


class RegistryTests(SimpleTestCase):
    def test_known_ids(self):
        ids = gallery.known()
        for entry_id in ('geo-lambda0', 'ex32.ex1', 'ex41.g0', 'ex54', 'ex42.g_m.exp'):
            self.assertIn(entry_id, ids)

    def test_unknown_id(self):
        with self.assertRaises(UnknownId) as ctx:
            gallery.get('ex99')
        self.assertIn('geo-lambda0', ctx.exception.known)
        with self.assertRaises(UnknownId):
            gallery.get('geo-lambda0.exp')

    def test_unknown_weight(self):
        with self.assertRaises(SpecError):
            gallery.weighted_variants('ex41.g0', weight='gaussian')

    def test_entry_dict(self):
        data = gallery.get('ex42.g_m', m=3).to_dict()
        self.assertEqual(data['id'], 'ex42.g_m')
        self.assertEqual(data['params'], {'m': 3})
        self.assertEqual(data['expected']['bochner'], 'false')
        self.assertIsNone(data['exact'])

    def test_parameters_are_read(self):
        entry = gallery.get('const-e', space='vec:3', b=4.0)
        np.testing.assert_allclose(entry.exact.coords, [4.0, 4.0, 4.0])
        self.assertEqual(entry.obj.end, 4.0)


class StepEntryTests(SimpleTestCase):
    def test_alternating_step_values(self):
        g = gallery.get('ex32.ex1').obj
        self.assertEqual(g(0.0).value, -1.0)
        self.assertAlmostEqual(g(0.6).value, 4.0 / 3.0)
        self.assertAlmostEqual(g(0.8).value, -2.0)

    def test_exact_integrals(self):
        part, full = gallery.get('ex32.ex1'), gallery.get('ex32.ex1-full')
        self.assertAlmostEqual(part.exact.value, np.log(2.0) - 1.0, places=14)
        self.assertAlmostEqual(full.exact.value, np.log(2.0), places=14)
        self.assertIn('(ln 2 - 1) e', part.description)
        self.assertEqual(full.obj.index.minimum, -1.0)

    def test_truncated_knots(self):
        g = gallery.get('ex32.ex1-trunc').obj
        knots = g.index.layers[0].values
        np.testing.assert_allclose(knots, 1.0 - 2.0 ** -np.arange(13))
        self.assertEqual(g.end, 1.0 - 2.0 ** -12)


class SawtoothPrimitiveTests(SimpleTestCase):
    """Central differences of the primitive stay within the oscillation bound of g"""

    def check(self, entry_id, **params):
        config = SolverConfig().but(series_terms=128, prefix_length=8)
        g = gallery.get(entry_id, config=config, **params).obj
        rng = np.random.default_rng(11)
        h = 1e-8
        checked = 0
        for t in 0.01 + 0.98 * rng.random(200):
            bound = g.osc(t - h, t + h)
            if bound > 1e-3:
                continue
            upper, _ = g.primitive(np.array([t + h]))
            lower, _ = g.primitive(np.array([t - h]))
            slope = (np.asarray(upper)[0] - np.asarray(lower)[0]) / (2.0 * h)
            with self.subTest(entry=entry_id, t=t):
                self.assertLessEqual(np.max(np.abs(slope - g.values([t])[0])), bound + 1e-5)
            checked += 1
        self.assertGreaterEqual(checked, 100)

    def test_g0(self):
        self.check('ex41.g0')

    def test_g_lower(self):
        self.check('ex42.g_m', m=1)

    def test_g_upper(self):
        self.check('ex43.g^m', m=2)


class CouplingTests(SimpleTestCase):
    def test_coupling_is_increasing_and_bounded(self):
        coupling = gallery.ArctanCoupling(4, inner_terms=64)
        rng = np.random.default_rng(3)
        us = rng.normal(size=(50, 4))
        ts = np.zeros(50)
        low = coupling(ts, us)
        high = coupling(ts, us + np.abs(rng.normal(size=(50, 4))))
        self.assertTrue(np.all(high >= low - 1e-15))
        self.assertTrue(np.all(low >= 0.0))
        self.assertTrue(np.all(high <= coupling.upper + 1e-12))
