import hypothesis.strategies as st
import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings

from transquad.services.exceptions import SpaceMismatch, SpecError
from transquad.services.expressions import Expression, INDEX_VARIABLES
from transquad.services.spaces import (
    Real,
    RealVec,
    SpaceKind,
    Tri,
    TruncCZero,
    from_dict,
    leq,
    norm,
    sup_distance,
)

coords = st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=3, max_size=3)


class SpaceTests(SimpleTestCase):
    def test_real_values(self):
        x = Real(1.5) + Real(-0.5)
        self.assertEqual(x.value, 1.0)
        self.assertEqual(norm(Real(-2.0)), (2.0, 2.0))

    def test_mixing_spaces_raises(self):
        with self.assertRaises(SpaceMismatch):
            Real(1.0) + RealVec([1.0, 2.0])
        with self.assertRaises(SpaceMismatch):
            RealVec([1.0, 2.0]) + RealVec([1.0, 2.0, 3.0])

    def test_c0_tail_enters_the_norm(self):
        x = TruncCZero([0.5, -0.25], tail=0.75)
        self.assertEqual(norm(x), (0.5, 0.75))
        self.assertEqual((x + x).tail, 1.5)
        self.assertEqual((-2.0 * x).tail, 1.5)

    def test_order_with_tails_can_be_open(self):
        small = TruncCZero([0.0, 0.0], tail=0.1)
        big = TruncCZero([1.0, 1.0], tail=0.1)
        self.assertIs(leq(small, big), Tri.UNKNOWN)
        self.assertIs(leq(small, big, slack=0.5), Tri.TRUE)
        self.assertIs(leq(big, small), Tri.FALSE)

    def test_space_kind(self):
        self.assertEqual(SpaceKind.from_dict('c0:8'), SpaceKind('c0', 8))
        self.assertEqual(SpaceKind.from_dict(None), SpaceKind('real'))
        self.assertEqual(SpaceKind.from_dict({'kind': 'vec', 'dim': 3}).zero(), RealVec([0.0, 0.0, 0.0]))
        with self.assertRaises(SpecError):
            SpaceKind('real', 2)
        with self.assertRaises(SpecError):
            SpaceKind('l2', 4)

    def test_value_dict(self):
        x = TruncCZero([1.0, 2.0], tail=0.5)
        self.assertEqual(x.to_dict(), {'kind': 'c0', 'coords': [1.0, 2.0], 'tail_bound': 0.5})
        self.assertEqual(from_dict(x.to_dict()), x)

    def test_values_are_immutable(self):
        x = RealVec([1.0, 2.0])
        with self.assertRaises(ValueError):
            x.coords[0] = 5.0

    @given(coords, coords, coords)
    @settings(max_examples=100, deadline=None)
    def test_triangle_inequality(self, a, b, c):
        x, y, z = RealVec(a), RealVec(b), RealVec(c)
        self.assertLessEqual(sup_distance(x, z), sup_distance(x, y) + sup_distance(y, z) + 1e-6)


class ExpressionTests(SimpleTestCase):
    def test_evaluates_on_arrays(self):
        expr = Expression('(-1)^n*2^(-n0)/(n1+1)', INDEX_VARIABLES)
        out = expr(n=np.array([0.0, 1.0]), n0=1.0, n1=np.array([0.0, 1.0]))
        np.testing.assert_allclose(out, [0.5, -0.25])

    def test_scalar_result(self):
        self.assertEqual(Expression('t + i', ('t', 'i'))(t=1.0, i=2.0), 3.0)

    def test_rejects_unknown_names_and_syntax(self):
        with self.assertRaises(SpecError):
            Expression('x + 1', ('t',))
        with self.assertRaises(SpecError):
            Expression('__import__("os")', ('t',))
        with self.assertRaises(SpecError):
            Expression('t +', ('t',))
        with self.assertRaises(SpecError):
            Expression('', ('t',))
