import math

import hypothesis.strategies as st
import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings

from transquad.services import gallery
from transquad.services.config import SolverConfig
from transquad.services.exceptions import NotConvergent, ToleranceUnachievable
from transquad.services.ordinal_core import WellOrderedSet
from transquad.services.spaces import SpaceKind, Tri
from transquad.services.transfinite_sum import (
    Family,
    TransfiniteSummer,
    classify,
    partial_sum,
    partial_sum_table,
    total,
)

LN2 = math.log(2.0)


class TotalTests(SimpleTestCase):
    def test_geometric_total(self):
        family = gallery.get('geo-lambda0').obj
        result = total(family, 1e-9)
        self.assertAlmostEqual(result.value.value, 2.0, delta=1e-9)
        self.assertTrue(result.certified)
        self.assertLessEqual(result.residual, 1e-9)

    def test_alternating_harmonic_total(self):
        family = gallery.get('altharm-lambda0').obj
        config = SolverConfig().but(layer_budget=4_000_000)
        result = total(family, 1e-6, config)
        self.assertAlmostEqual(result.value.value, LN2, delta=1e-6)
        self.assertTrue(result.certified)

    def test_remainder_out_of_reach(self):
        family = gallery.get('altharm-lambda0').obj
        with self.assertRaises(ToleranceUnachievable):
            total(family, 1e-9, SolverConfig().but(layer_budget=1000))

    def test_constant_terms_do_not_converge(self):
        family = gallery.get('const-lambda0').obj
        with self.assertRaises(NotConvergent):
            total(family, 1e-6, SolverConfig().but(layer_budget=2000))

    def test_vector_totals(self):
        family = gallery.get('geo-lambda0', space='vec:3').obj
        result = total(family, 1e-9)
        np.testing.assert_allclose(result.value.coords, [2.0, 2.0, 2.0], atol=1e-9)

    def test_nested_alternating_total(self):
        family = gallery.get('ex21.lambda1').obj
        result = total(family, 1e-2)
        self.assertAlmostEqual(result.value.value, 2.0 * LN2, delta=1e-2)

    def test_block_sums_match_in_order_sum(self):
        family = gallery.get('ex21.lambda1-pos').obj
        in_order = total(family, 1e-9).value.value
        summer = TransfiniteSummer(family)
        blocks = sum(summer.block_total((n0,), 1e-12).coords[0] for n0 in range(60))
        self.assertAlmostEqual(in_order, 4.0, delta=1e-9)
        self.assertAlmostEqual(blocks, in_order, delta=1e-9)

    def test_finite_family_total_includes_last_point(self):
        index = WellOrderedSet.finite([0.0, 0.5, 1.0])
        family = Family.from_values(index, [1.0, 2.0, 4.0])
        self.assertEqual(total(family, 1e-9).value.value, 7.0)


class PartialSumTests(SimpleTestCase):
    def setUp(self):
        self.family = gallery.get('ex21.lambda1-pos').obj
        self.index = self.family.index

    def test_partial_sum_at_min_is_zero(self):
        self.assertEqual(partial_sum(self.family, self.index.first(), 1e-9).value.value, 0.0)

    def test_partial_sum_at_limit(self):
        # sigma at the limit of block 0 is the block total 2
        result = partial_sum(self.family, self.index.address(1, 0), 1e-9)
        self.assertAlmostEqual(result.value.value, 2.0, delta=1e-9)

    @given(st.integers(min_value=0, max_value=5), st.integers(min_value=0, max_value=30))
    @settings(max_examples=50, deadline=None)
    def test_successor_step(self, n0, n1):
        summer = TransfiniteSummer(self.family)
        beta = self.index.address(n0, n1)
        step = self.family.value(beta).value
        before = summer.partial_sum(beta, 1e-9).value.value
        after = summer.partial_sum(self.index.successor(beta), 1e-9).value.value
        self.assertAlmostEqual(after - before, step, delta=1e-12)

    def test_table_rows(self):
        table = partial_sum_table(self.family, 4, 1e-9)
        rows = list(table.rows(self.index))
        self.assertEqual(len(rows), 16)
        self.assertEqual(rows[0]['coords'], [0.0])
        self.assertEqual(rows[0]['status'], 'exact')
        self.assertEqual(rows[4]['status'], 'limit-estimated')
        self.assertAlmostEqual(rows[4]['coords'][0], 2.0, delta=1e-9)
        sums = [r['coords'][0] for r in rows]
        self.assertTrue(all(a <= b for a, b in zip(sums, sums[1:])))


class ClassifyTests(SimpleTestCase):
    def _verdicts(self, entry_id, tol=1e-3):
        entry = gallery.get(entry_id)
        report = classify(entry.obj, 10_000, tol)
        return entry, report

    def test_gallery_families_match_their_verdicts(self):
        for entry_id in ('geo-lambda0', 'const-lambda0', 'altharm-lambda0', 'pow2-lambda0', 'ex21.lambda1-pos'):
            with self.subTest(entry_id):
                entry, report = self._verdicts(entry_id)
                self.assertEqual(report.summable.value.value, entry.expected['summable'])
                self.assertEqual(report.absolute.value.value, entry.expected['absolute'])
                self.assertEqual(report.bounded.value.value, entry.expected['bounded'])

    def test_constant_terms(self):
        _, report = self._verdicts('const-lambda0', tol=1e-6)
        self.assertIs(report.bounded.value, Tri.TRUE)
        self.assertIs(report.summable.value, Tri.FALSE)
        cutoff = report.summable.cutoff
        self.assertTrue(cutoff.is_sup)
        self.assertEqual(report.verdict, 'not_summable')

    def test_alternating_harmonic_is_conditional(self):
        _, report = self._verdicts('altharm-lambda0')
        self.assertIs(report.summable.value, Tri.TRUE)
        self.assertTrue(report.summable.certified)
        self.assertIs(report.absolute.value, Tri.FALSE)
        self.assertAlmostEqual(report.total.value, LN2, delta=1e-3)

    def test_growing_terms(self):
        _, report = self._verdicts('pow2-lambda0')
        self.assertIs(report.bounded.value, Tri.FALSE)
        self.assertTrue(report.bounded.certified)
        self.assertEqual(report.bounded_verdict, 'unbounded')
        self.assertTrue(report.bounded.cutoff.is_sup)

    def test_cutoff_of_nested_family_names_a_limit(self):
        index = WellOrderedSet.dyadic(0.0, 1.0, 2)
        family = Family(index, lambda prefix, ns: np.ones((len(ns), 1)), SpaceKind('real'), bound=1.0)
        report = classify(family, 2000, 1e-6)
        self.assertIs(report.summable.value, Tri.FALSE)
        cutoff = report.summable.cutoff
        self.assertTrue(cutoff.is_sup or index.is_limit(cutoff))

    def test_invalid_arguments(self):
        family = gallery.get('geo-lambda0').obj
        with self.assertRaises(ValueError):
            classify(family, 0, 1e-6)
        with self.assertRaises(ValueError):
            classify(family, 100, 0.0)
