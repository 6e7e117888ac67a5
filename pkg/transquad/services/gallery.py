"""
Built-in examples with analytic oracles.

Entries are looked up by id with `get(id, **params)`. Every entry carries the
object itself (a Family, StepMapping, RegulatedMapping or ImpulsiveProblem),
the verdicts it is known to have and, where one is known, the exact total or
integral.

The sawtooth mappings use x_n(t) = frac(nt) - 1 in [-1, 0), the right
continuous representative of nt - m with m - 1 < nt <= m, and keep the first
N terms of each series (N = TRANSQUAD_SERIES_TERMS). The oracles describe the
N-term mapping exactly; `notes['model_error']` bounds its distance to the
full series.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import SolverConfig
from .exceptions import SpecError, UnknownId
from .impulsive import ImpulsiveProblem
from .ordinal_core import WellOrderedSet
from .regulated import RegulatedMapping
from .spaces import SpaceKind, VectorValue
from .step_integral import ReflectedStep, StepMapping
from .transfinite_sum import Family

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
# sup of |h(x) - h(y)| for x, y in [-1, 0), h(x) = 2x cos(pi/2x) + (pi/2) sin(pi/2x)
WILD = 2.0 * (2.0 + math.pi / 2.0)


@dataclass(frozen=True)
class GalleryEntry:
    id: str
    kind: str
    obj: object
    expected: dict = field(default_factory=dict)
    exact: Optional[VectorValue] = None
    description: str = ''
    notes: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def has_primitive(self):
        if self.kind == 'step':
            return True
        return self.kind == 'mapping' and self.obj.primitive is not None

    def to_dict(self):
        return {
            'id': self.id,
            'kind': self.kind,
            'description': self.description,
            'expected': dict(self.expected),
            'exact': None if self.exact is None else self.exact.to_dict(),
            'notes': dict(self.notes),
            'params': dict(self.params),
        }


def _space(params, default='real'):
    return SpaceKind.from_dict(params.get('space', default))


def _int(params, name, default):
    try:
        return int(params.get(name, default))
    except (TypeError, ValueError) as exc:
        raise SpecError(f"parameter {name} must be an integer, got {params.get(name)!r}") from exc


def _float(params, name, default):
    value = params.get(name, default)
    if value in ('inf', 'infinity', 'oo'):
        return math.inf
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"parameter {name} must be a number, got {value!r}") from exc


def _sign(ns):
    return np.where(np.asarray(ns, dtype=np.int64) % 2 == 0, 1.0, -1.0)


def _scalar_family(index, coefficient, space, **kwargs):
    """n -> coefficient(n) e on the innermost layer, e the all-ones vector"""
    e = np.ones(space.dim)

    def terms(prefix, ns):
        with np.errstate(over='ignore'):
            return np.outer(coefficient(prefix, np.asarray(ns, dtype=float)), e)

    return Family(index, terms, space, **kwargs)


# Families over Lambda_0 and Lambda_1


def _lambda0(name):
    return WellOrderedSet.dyadic(0.0, 1.0, 1, name=name)


def _geo(params, config):
    space = _space(params)
    family = _scalar_family(
        _lambda0('Lambda_0'),
        lambda prefix, n: 2.0 ** -n,
        space,
        remainder_bound=lambda prefix, n: 2.0 ** (1 - n),
        abs_remainder_bound=lambda prefix, n: 2.0 ** (1 - n),
        bound=1.0,
        nonnegative=True,
        name='2^-n e',
    )
    return GalleryEntry(
        'geo-lambda0', 'family', family,
        {'summable': 'true', 'absolute': 'true', 'bounded': 'true'},
        space.wrap(2.0 * np.ones(space.dim)),
        'geometric terms 2^-n e over Lambda_0',
    )


def _const(params, config):
    space = _space(params)
    family = _scalar_family(_lambda0('Lambda_0'), lambda prefix, n: np.ones_like(n), space, bound=1.0, name='e')
    return GalleryEntry(
        'const-lambda0', 'family', family,
        {'summable': 'false', 'absolute': 'false', 'bounded': 'true'},
        None,
        'constant terms e over Lambda_0',
    )


def _altharm(params, config):
    space = _space(params)
    family = _scalar_family(
        _lambda0('Lambda_0'),
        lambda prefix, n: _sign(n) / (n + 1.0),
        space,
        remainder_bound=lambda prefix, n: 1.0 / (n + 1.0),
        bound=1.0,
        name='(-1)^n e/(n+1)',
    )
    return GalleryEntry(
        'altharm-lambda0', 'family', family,
        {'summable': 'true', 'absolute': 'false', 'bounded': 'true'},
        space.wrap(LN2 * np.ones(space.dim)),
        'alternating harmonic terms over Lambda_0',
    )


def _pow2(params, config):
    space = _space(params)
    family = _scalar_family(_lambda0('Lambda_0'), lambda prefix, n: 2.0 ** n, space, name='2^n e')
    return GalleryEntry(
        'pow2-lambda0', 'family', family,
        {'summable': 'false', 'absolute': 'false', 'bounded': 'false'},
        None,
        'growing terms 2^n e over Lambda_0',
    )


def _lambda1(params, config):
    space = _space(params)

    def remainder(prefix, n):
        if prefix:
            return 2.0 ** -prefix[0] / (n + 1.0)
        return LN2 * 2.0 ** (1 - n)

    family = _scalar_family(
        WellOrderedSet.dyadic(0.0, 1.0, 2, name='Lambda_1'),
        lambda prefix, n: _sign(n) * 2.0 ** -prefix[0] / (n + 1.0),
        space,
        remainder_bound=remainder,
        bound=1.0,
        name='(-1)^n1 2^-n0 e/(n1+1)',
    )
    return GalleryEntry(
        'ex21.lambda1', 'family', family,
        {'summable': 'true', 'absolute': 'false', 'bounded': 'true'},
        space.wrap(2.0 * LN2 * np.ones(space.dim)),
        'alternating family on the nested set Lambda_1',
    )


def _lambda1_positive(params, config):
    space = _space(params)

    def remainder(prefix, n):
        if prefix:
            return 2.0 ** (-prefix[0] + 1 - n)
        return 2.0 ** (2 - n)

    family = _scalar_family(
        WellOrderedSet.dyadic(0.0, 1.0, 2, name='Lambda_1'),
        lambda prefix, n: 2.0 ** (-prefix[0] - n),
        space,
        remainder_bound=remainder,
        abs_remainder_bound=remainder,
        bound=1.0,
        nonnegative=True,
        name='2^-(n0+n1) e',
    )
    return GalleryEntry(
        'ex21.lambda1-pos', 'family', family,
        {'summable': 'true', 'absolute': 'true', 'bounded': 'true'},
        space.wrap(4.0 * np.ones(space.dim)),
        'nonnegative family on Lambda_1',
    )


# Step mappings


def _dyadic_steps(params, config, full=False):
    """z on [1 - 2^-k+1, 1 - 2^-k): (-2)^(k+1) e/(k+2) on [0, 1), or (-2)^k e/(k+1) on [-1, 1)"""
    space = _space(params)
    shift = 0 if full else 1
    start = -1.0 if full else 0.0
    index = WellOrderedSet.dyadic(start, 1.0, 1, name='Ex1 steps')
    e = np.ones(space.dim)

    def steps(prefix, ns):
        k = np.asarray(ns, dtype=float) + shift
        with np.errstate(over='ignore', invalid='ignore'):
            return np.outer(_sign(k) * 2.0 ** k / (k + 1.0), e)

    def weighted(prefix, ns):
        k = np.asarray(ns, dtype=float) + shift
        return np.outer(_sign(k) / (k + 1.0), e)

    g = StepMapping(
        Family(index, steps, space, name='y_n'),
        terminal=space.zero(),
        weighted_remainder=lambda prefix, n: 1.0 / (n + shift + 1.0),
        weighted_terms=weighted,
        name='Ex1' + (' on [-1, 1)' if full else ''),
    )
    exact = (LN2 if full else LN2 - 1.0) * e
    return g, space.wrap(exact)


def _ex1(params, config):
    """
    Steps from n = 1 on [0, 1), integrating to (ln 2 - 1) e. With the n = 0
    step on [-1, 0) added, ex32.ex1-full integrates to (ln 2) e.
    """
    g, exact = _dyadic_steps(params, config)
    return GalleryEntry(
        'ex32.ex1', 'step', g,
        {'hl': 'true', 'hk': 'true', 'bochner': 'false', 'riemann': 'false'},
        exact,
        'steps (-2)^n e/(n+1) on [1 - 2^-n+1, 1 - 2^-n), n >= 1, integral (ln 2 - 1) e',
    )


def _ex1_full(params, config):
    g, exact = _dyadic_steps(params, config, full=True)
    return GalleryEntry(
        'ex32.ex1-full', 'step', g,
        {'hl': 'true', 'hk': 'true', 'bochner': 'false', 'riemann': 'false'},
        exact,
        'steps (-2)^n e/(n+1) on [1 - 2^-n+1, 1 - 2^-n), n >= 0, integral (ln 2) e',
    )


def _ex1_truncated(params, config):
    space = _space(params)
    knots = _int(params, 'knots', 12)
    ks = np.arange(knots + 1, dtype=float)
    index = WellOrderedSet.finite(1.0 - 2.0 ** -ks, name=f"Ex1 first {knots} steps")
    values = np.outer(_sign(ks + 1) * 2.0 ** (ks + 1) / (ks + 2.0), np.ones(space.dim))
    g = StepMapping(Family.from_values(index, values, space, name='y_n'), name=f"Ex1 truncated to {knots}")
    weights = np.diff(index.layers[0].values)
    exact = np.sum(weights[:, None] * values[:-1], axis=0)
    return GalleryEntry(
        'ex32.ex1-trunc', 'step', g,
        {'hl': 'true', 'hk': 'true', 'bochner': 'true', 'riemann': 'true'},
        space.wrap(exact),
        'Ex1 cut after finitely many steps, last knot = b',
        params={'knots': knots},
    )


def _reflected(params, config):
    g, exact = _dyadic_steps(params, config)
    return GalleryEntry(
        'rem31.h', 'reflected', ReflectedStep(g, name='h(t) = g(1 - t)'),
        {'hl': 'true', 'hk': 'true', 'bochner': 'false', 'riemann': 'false'},
        exact,
        'y_n on (2^-n, 2^-n+1], the mirror image of Ex1',
    )


def _ex0(params, config):
    space = _space(params)
    index = WellOrderedSet.arithmetic(0.0, 1.0, 1, name='N_0')
    steps = _scalar_family(
        index,
        lambda prefix, n: 2.0 ** -n,
        space,
        remainder_bound=lambda prefix, n: 2.0 ** (1 - n),
        bound=1.0,
        nonnegative=True,
        name='y_n',
    )
    return GalleryEntry(
        'ex31.ex0', 'step', StepMapping(steps, name='Ex0'),
        {'hl': 'true', 'hk': 'true', 'bochner': 'true', 'riemann': 'true'},
        space.wrap(2.0 * np.ones(space.dim)),
        'y_n = 2^-n e on [n, n+1), n in N_0, over [0, inf)',
    )


def _lambda_m(params, config):
    """z = (-1)^n_m 2^n_m e/(n_m + 1) on Lambda_m; the weighted family sums to (ln 2 / 2) e"""
    space = _space(params)
    m = _int(params, 'm', 1)
    if m < 1:
        raise SpecError("m must be at least 1")
    index = WellOrderedSet.dyadic(0.0, 1.0, m + 1, name=f"Lambda_{m}")
    e = np.ones(space.dim)

    def steps(prefix, ns):
        n = np.asarray(ns, dtype=float)
        with np.errstate(over='ignore', invalid='ignore'):
            return np.outer(_sign(n) * 2.0 ** n / (n + 1.0), e)

    def weighted(prefix, ns):
        n = np.asarray(ns, dtype=float)
        return np.outer(_sign(n) * 2.0 ** (-sum(prefix) - m - 1) / (n + 1.0), e)

    def remainder(prefix, n):
        if len(prefix) == m:
            return 2.0 ** (-sum(prefix) - m - 1) / (n + 1.0)
        return LN2 * 2.0 ** (-sum(prefix) - len(prefix) - n - 1)

    g = StepMapping(
        Family(index, steps, space, name='z'),
        terminal=space.zero(),
        weighted_remainder=remainder,
        weighted_terms=weighted,
        name=f"steps on Lambda_{m}",
    )
    return GalleryEntry(
        'ex33.lambda_m', 'step', g,
        {'hl': 'true', 'hk': 'true', 'bochner': 'false', 'riemann': 'false'},
        space.wrap(0.5 * LN2 * e),
        'alternating unbounded steps on the nested set Lambda_m',
        params={'m': m},
    )


# Sawtooth series


def _h(x):
    u = np.pi / (2.0 * x)
    return 2.0 * x * np.cos(u) + 0.5 * np.pi * np.sin(u)


def _h_primitive(x):
    return x * x * np.cos(np.pi / (2.0 * x))


def _k(x):
    u = np.pi / (2.0 * x)
    return np.cos(u) + np.pi * np.sin(u) / (2.0 * x)


class SawtoothSeries:
    """
    Coordinate i of g(t) is (S(t) + E_i(t)) / i with S(t) = sum_n h(x_n(t)) / n^2
    and E_i the extra terms of the variant, summed over n <= min(i, m):
    none for 'g0', k(x_n) for 'g_m', 1/(2 sqrt(-x_n)) for 'g^m'.
    """

    def __init__(self, variant, m, space, terms):
        if variant not in ('g0', 'g_m', 'g^m'):
            raise SpecError(f"Unknown sawtooth variant '{variant}'")
        self.variant = variant
        self.m = m if variant != 'g0' else 0
        self.space = space
        self.terms = terms
        self.ns = np.arange(1, terms + 1, dtype=float)
        self.inv_i = 1.0 / np.arange(1, space.dim + 1)
        self.columns = np.minimum(np.arange(1, space.dim + 1), max(self.m, 1)) - 1
        self.harmonic2 = np.cumsum(1.0 / self.ns ** 2)

    # evaluation

    def sawtooth(self, ts, ns):
        nt = np.multiply.outer(ts, ns)
        return nt - np.floor(nt) - 1.0, nt

    def _extra(self, x, nt):
        ns = self.ns[: self.m]
        if self.variant == 'g_m':
            return _k(x), x * np.cos(np.pi / (2.0 * x)) / ns
        return 0.5 / np.sqrt(-x), (np.floor(nt) + 1.0 - np.sqrt(-x)) / ns

    def _coords(self, base, extra):
        """(base + E_i) / i for every tracked i, plus the tail bound"""
        if self.m == 0:
            coords = np.outer(base, self.inv_i)
            return coords, np.abs(base) / (self.space.dim + 1)
        cumulative = np.cumsum(extra, axis=1)
        coords = (base[:, None] + cumulative[:, self.columns]) * self.inv_i
        tail = (np.abs(base) + np.sum(np.abs(extra), axis=1)) / (self.space.dim + 1)
        return coords, tail

    def _parts(self, ts, primitive=False):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        x, nt = self.sawtooth(ts, self.ns)
        if primitive:
            base = np.sum(_h_primitive(x) / self.ns ** 3, axis=1)
        else:
            base = np.sum(_h(x) / self.ns ** 2, axis=1)
        extra = None
        if self.m:
            values, antiderivatives = self._extra(x[:, : self.m], nt[:, : self.m])
            extra = antiderivatives if primitive else values
        return self._coords(base, extra)

    def evaluate(self, ts):
        return self._parts(ts)[0]

    def tail(self, ts):
        return self._parts(ts)[1]

    def primitive(self, ts):
        coords, _ = self._parts(ts, primitive=True)
        return coords, 1e-12

    def primitive_tail(self, ts):
        return self._parts(ts, primitive=True)[1]

    # oracles

    def _base_osc(self, x, y):
        n = self.ns
        k = np.floor(n * x)
        x_hi = n * y - k - 1.0
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            lip = 2.0 + np.pi / np.abs(x_hi) + np.pi ** 2 / (4.0 * x_hi ** 2)
            smooth = np.fmin(WILD, lip * n * (y - x))
        return float(np.sum(np.where(x_hi >= 0.0, WILD, smooth) / n ** 2))

    def _extra_osc(self, x, y):
        n = self.ns[: self.m]
        k = np.floor(n * x)
        x_hi = n * y - k - 1.0
        x_lo = n * x - k - 1.0
        if np.any(x_hi >= 0.0):
            return np.full(self.m, np.inf)
        if self.variant == 'g_m':
            size = 1.0 + np.pi / (2.0 * np.abs(x_hi))
            lip = np.pi ** 2 / (4.0 * np.abs(x_hi) ** 3)
            return np.fmin(2.0 * size, lip * n * (y - x))
        return 0.5 / np.sqrt(-x_hi) - 0.5 / np.sqrt(-x_lo)

    def osc(self, x, y):
        base = self._base_osc(x, y)
        if not self.m:
            return base
        extra = np.cumsum(self._extra_osc(x, y))
        top = min(self.m, self.space.dim) if self.space.carries_tail is False else self.m
        i = np.arange(1, top + 1)
        return float(np.max((base + extra[:top]) / i))

    def _align(self, p, q):
        """Float nearest above p/q at which every multiple jq <= N has stepped past jp"""
        rho = p / q
        js = np.arange(1, int(self.terms // q) + 1, dtype=float)
        ns = js * q
        while np.any(np.floor(ns * rho) < js * p):
            rho = float(np.nextafter(rho, np.inf))
        return rho

    def _rationals(self, x, y, denominators):
        points = set()
        for q in denominators:
            for p in range(int(math.floor(q * x)), int(math.floor(q * y)) + 2):
                if math.gcd(p, q) != 1:
                    continue
                rho = self._align(p, q)
                if x < rho <= y:
                    points.add(rho)
        return points

    def wild(self, q):
        """Limit of the oscillation bound at p/q from the left"""
        return WILD / q ** 2 * self.harmonic2[int(self.terms // q) - 1]

    def hints(self, x, y, eps):
        if not math.isfinite(y):
            return []
        denominators = [q for q in range(1, self.terms + 1) if self.wild(q) > eps / 2]
        points = self._rationals(x, y, denominators)
        points |= set(self.singular(x, y))
        return sorted(points)

    def singular(self, x, y):
        if not self.m or not math.isfinite(y):
            return []
        return sorted(self._rationals(x, y, range(1, self.m + 1)))

    # declared bounds

    @property
    def bound(self):
        if self.m:
            return None
        return (2.0 + np.pi / 2.0) * float(self.harmonic2[-1])

    @property
    def primitive_growth(self):
        cubes = float(np.sum(1.0 / self.ns ** 3))
        harmonic = float(np.sum(1.0 / self.ns[: self.m]))
        if self.variant == 'g0':
            return cubes, 0.0
        if self.variant == 'g_m':
            return cubes + harmonic, 0.0
        return cubes + 2.0 * harmonic, float(self.m)

    @property
    def model_error(self):
        return (2.0 + np.pi / 2.0) / self.terms


def sawtooth_mapping(variant, m=0, space=None, config=None, start=0.0, end=1.0):
    config = config or SolverConfig()
    space = space or SpaceKind('c0', config.prefix_length)
    series = SawtoothSeries(variant, m, space, config.series_terms)
    names = {'g0': 'g0', 'g_m': f"g_{m}", 'g^m': f"g^{m}"}
    mapping = RegulatedMapping(
        evaluate=series.evaluate,
        space=space,
        domain=(float(start), float(end)),
        right_limit=series.evaluate,
        osc=series.osc,
        hints=series.hints,
        singular=series.singular,
        primitive=series.primitive,
        primitive_tail=series.primitive_tail if space.carries_tail else None,
        tail=series.tail if space.carries_tail else None,
        bound=series.bound,
        absolutely_continuous=variant != 'g_m',
        primitive_growth=series.primitive_growth,
        name=names[variant],
    )
    return mapping, series


def _domain(params):
    return _float(params, 'a', 0.0), _float(params, 'b', 1.0)


def _space_c0(params, config):
    return _space(params, default={'kind': 'c0', 'dim': config.prefix_length})


def _g0(params, config):
    start, end = _domain(params)
    g, series = sawtooth_mapping('g0', 0, _space_c0(params, config), config, start, end)
    return GalleryEntry(
        'ex41.g0', 'mapping', g,
        {'riemann': 'true', 'bochner': 'true', 'hl': 'true', 'hk': 'true'},
        None,
        'bounded right regulated map with second-kind discontinuities at every rational',
        {'model_error': series.model_error, 'terms': series.terms},
    )


def _g_lower(params, config):
    start, end = _domain(params)
    m = _int(params, 'm', 1)
    g, series = sawtooth_mapping('g_m', m, _space_c0(params, config), config, start, end)
    return GalleryEntry(
        'ex42.g_m', 'mapping', g,
        {'hl': 'true', 'hk': 'true', 'bochner': 'false', 'riemann': 'false'},
        None,
        'g0 plus k(x_n)/i terms: HL integrable, not Bochner, not Riemann',
        {'model_error': series.model_error, 'terms': series.terms},
        {'m': m},
    )


def _g_upper(params, config):
    start, end = _domain(params)
    m = _int(params, 'm', 2)
    g, series = sawtooth_mapping('g^m', m, _space_c0(params, config), config, start, end)
    return GalleryEntry(
        'ex43.g^m', 'mapping', g,
        {'bochner': 'true', 'hl': 'true', 'hk': 'true', 'riemann': 'false'},
        None,
        'g0 plus 1/(2i sqrt(-x_n)) terms: Bochner integrable, not locally bounded',
        {'model_error': series.model_error, 'terms': series.terms},
        {'m': m},
    )


def constant_mapping(space, start=0.0, end=2.0, scale=1.0):
    e = scale * np.ones(space.dim)

    def evaluate(ts):
        return np.tile(e, (len(np.atleast_1d(ts)), 1))

    def primitive(ts):
        return np.outer(np.atleast_1d(ts), e), 0.0

    return RegulatedMapping(
        evaluate=evaluate,
        space=space,
        domain=(float(start), float(end)),
        right_limit=evaluate,
        osc=lambda x, y: 0.0,
        primitive=primitive,
        bound=abs(scale),
        absolutely_continuous=True,
        primitive_growth=(0.0, abs(scale)),
        name='constant e',
    )


def _constant(params, config):
    space = _space(params)
    start, end = _float(params, 'a', 0.0), _float(params, 'b', 2.0)
    return GalleryEntry(
        'const-e', 'mapping', constant_mapping(space, start, end),
        {'riemann': 'true', 'bochner': 'true', 'hl': 'true', 'hk': 'true'},
        space.wrap((end - start) * np.ones(space.dim)),
        'g = e on [a, b]',
    )


def exp_weighted(g):
    """t -> e^-t g(t) on [a, inf) for a mapping defined on [a, inf)"""
    base = g if math.isinf(g.end) else replace(g, domain=(g.start, math.inf))

    def evaluate(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.exp(-ts)[:, None] * base.values(ts)

    def tail(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.exp(-ts) * base.tails(ts)

    return RegulatedMapping(
        evaluate=evaluate,
        space=base.space,
        domain=(base.start, math.inf),
        right_limit=evaluate,
        tail=tail if base.tail is not None else None,
        weight_of=base,
        name=f"e^-t {base.name}",
    )


def weighted_variants(entry_id, weight='exp-decay', config=None, **params):
    if weight != 'exp-decay':
        raise SpecError(f"Unknown weight '{weight}' (expected 'exp-decay')")
    if entry_id not in _WEIGHTED:
        raise UnknownId(f"{entry_id}.exp", sorted(f"{k}.exp" for k in _WEIGHTED))
    params = {k: v for k, v in params.items() if k not in ('a', 'b')}
    base = get(entry_id, config=config, **params)
    expected = _WEIGHTED[entry_id]
    return GalleryEntry(
        f"{entry_id}.exp", 'mapping', exp_weighted(base.obj),
        expected,
        None,
        f"e^-t times {entry_id} on [0, inf)",
        dict(base.notes),
        dict(base.params),
    )


_WEIGHTED = {
    'ex41.g0': {'riemann': 'true'},
    'ex42.g_m': {'hk': 'true'},
    'ex43.g^m': {'bochner': 'true'},
}


# Impulsive problems


class ArctanCoupling:
    """
    q_i(s) = 2^-i sum_{m <= i} sum_{k <= K} (pi/2 + atan(k^(1/m) s)) / (k m)^2
    applied to s = u_1 + ... + u_i; increasing in u, between 0 and `upper`.
    """

    def __init__(self, dim, inner_terms=256):
        self.dim = dim
        ks = np.arange(1, inner_terms + 1, dtype=float)
        self.roots = [ks ** (1.0 / m) for m in range(1, dim + 1)]
        self.weights = [1.0 / (ks * m) ** 2 for m in range(1, dim + 1)]
        self.scale = 2.0 ** -np.arange(1, dim + 1)
        self.upper = self.scale * np.cumsum([np.pi * w.sum() for w in self.weights])

    def __call__(self, ts, us):
        s = np.cumsum(np.asarray(us, dtype=float), axis=1)
        total = np.zeros_like(s)
        for m in range(1, self.dim + 1):
            block = s[:, m - 1:]
            phase = np.arctan(block[..., None] * self.roots[m - 1])
            total[:, m - 1:] += (0.5 * np.pi + phase) @ self.weights[m - 1]
        return total * self.scale


def _ex54(params, config):
    dim = _int(params, 'dim', 32)
    end = _float(params, 'b', 2.0)
    space = SpaceKind('vec', dim)
    source, series = sawtooth_mapping('g0', 0, space, config, 0.0, end)
    impulses = WellOrderedSet.arithmetic(0.0, 0.5, 1, name='impulse times k/2')
    weights = 2.0 ** -np.arange(1, dim + 1)
    c = Family(
        impulses,
        lambda prefix, ns: np.outer(2.0 ** -np.asarray(ns, dtype=float), weights),
        space,
        remainder_bound=lambda prefix, n: 2.0 ** -n,
        bound=0.5,
        nonnegative=True,
        name='c_i = 2^-i z',
    )
    coupling = ArctanCoupling(dim, _int(params, 'inner_terms', 256))
    problem = ImpulsiveProblem(
        start=0.0,
        end=end,
        space=space,
        impulses=impulses,
        impulse=lambda address, u: c.value(address).coords,
        impulse_bounds=(c, c),
        source=source,
        coupling=coupling,
        coupling_bounds=(np.zeros(dim), coupling.upper),
        name=f"g0 + q(u), {dim} coordinates",
    )
    return GalleryEntry(
        'ex54', 'problem', problem, {}, None,
        "u' = g0(t) + q(u(t)) with impulses 2^-i 2^-n at n/2",
        {'model_error': series.model_error, 'inner_terms': coupling.weights[0].size},
        {'dim': dim, 'b': end},
    )


def _dyadic_impulses(params, config):
    space = _space(params)
    impulses = WellOrderedSet.dyadic(0.5, 1.0, 1, name='1 - 2^-k, k >= 1')
    z = _scalar_family(
        impulses,
        lambda prefix, n: 2.0 ** -(n + 1.0),
        space,
        remainder_bound=lambda prefix, n: 2.0 ** -n,
        bound=0.5,
        nonnegative=True,
        name='2^-k e',
    )
    problem = ImpulsiveProblem(
        start=0.0,
        end=1.0,
        space=space,
        impulses=impulses,
        impulse=lambda address, u: z.value(address).coords,
        impulse_bounds=(z, z),
        name='pure dyadic impulses',
    )
    return GalleryEntry(
        'dyadic-impulses', 'problem', problem, {}, space.wrap(np.ones(space.dim)),
        'u = 0 between the impulses 2^-k e at 1 - 2^-k',
    )


_REGISTRY = {
    'geo-lambda0': _geo,
    'const-lambda0': _const,
    'altharm-lambda0': _altharm,
    'pow2-lambda0': _pow2,
    'ex21.lambda1': _lambda1,
    'ex21.lambda1-pos': _lambda1_positive,
    'ex31.ex0': _ex0,
    'ex32.ex1': _ex1,
    'ex32.ex1-full': _ex1_full,
    'ex32.ex1-trunc': _ex1_truncated,
    'ex33.lambda_m': _lambda_m,
    'rem31.h': _reflected,
    'ex41.g0': _g0,
    'ex42.g_m': _g_lower,
    'ex43.g^m': _g_upper,
    'const-e': _constant,
    'ex54': _ex54,
    'dyadic-impulses': _dyadic_impulses,
}


def known():
    return sorted(_REGISTRY) + sorted(f"{k}.exp" for k in _WEIGHTED)


def get(entry_id, config=None, **params):
    config = config or SolverConfig()
    if entry_id.endswith('.exp'):
        return weighted_variants(entry_id[: -len('.exp')], config=config, **params)
    try:
        builder = _REGISTRY[entry_id]
    except KeyError:
        raise UnknownId(entry_id, known()) from None
    entry = builder(params, config)
    logger.debug(f"gallery entry {entry_id} built with {params or 'defaults'}")
    return entry
