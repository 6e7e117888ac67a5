"""
Well-ordered subsets of the extended reals, realised as refinement trees.

A set of depth D is described by one layer generator per level. Level 0 places
points in [a, b); every deeper level subdivides the interval between two
consecutive points of its parent level. An address is the tuple of child
indices along that descent. The limit of a block (all addresses sharing a
prefix) coincides with the first point of the next sibling block, so a full
tuple with trailing zeros is canonicalised to the short tuple naming that
limit. The empty tuple stands for the supremum.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import total_ordering
from typing import Iterator, Optional

import numpy as np

from .exceptions import AddressAtSup, SpecError

logger = logging.getLogger(__name__)

INFINITY = math.inf

# largest child index tried while searching a layer
_INDEX_CEILING = 1 << 62


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@total_ordering
@dataclass(frozen=True)
class OrdinalAddress:
    digits: tuple
    depth: int

    @classmethod
    def of(cls, digits, depth):
        """Canonical address for `digits` in a tree of the given depth"""
        digits = tuple(int(d) for d in digits)
        if len(digits) > depth:
            raise SpecError(f"Address {digits} is deeper than the depth bound {depth}")
        if any(d < 0 for d in digits):
            raise SpecError(f"Address digits must be natural numbers, got {digits}")
        if len(digits) == depth and depth > 1:
            nonzero = [k for k, d in enumerate(digits) if d]
            if nonzero and nonzero[-1] < depth - 1:
                j = nonzero[-1]
                digits = digits[:j] + (digits[j] - 1,)
        return cls(digits, depth)

    @classmethod
    def sup(cls, depth):
        return cls((), depth)

    @classmethod
    def first(cls, depth):
        return cls((0,) * depth, depth)

    @property
    def is_sup(self):
        return not self.digits

    @property
    def is_full(self):
        return len(self.digits) == self.depth

    def padded(self):
        return self.digits + (INFINITY,) * (self.depth - len(self.digits))

    def full_form(self):
        """Full-length tuple of the point this address names"""
        if self.is_full:
            return self.digits
        if self.is_sup:
            raise AddressAtSup(self)
        k = len(self.digits)
        return self.digits[:-1] + (self.digits[-1] + 1,) + (0,) * (self.depth - k)

    def __lt__(self, other):
        if not isinstance(other, OrdinalAddress):
            return NotImplemented
        return self.padded() < other.padded()

    def __str__(self):
        if self.is_sup:
            return 'sup'
        return '(' + ','.join(str(d) for d in self.digits) + ')'

    def to_list(self):
        return list(self.digits)


def compare(x, y):
    if x == y:
        return Ordering.EQUAL
    return Ordering.LESS if x < y else Ordering.GREATER


@dataclass(frozen=True)
class Cursor:
    current: OrdinalAddress
    value: float
    is_limit: bool


class Layer:
    """Strictly increasing child positions inside a parent interval [L, R)"""

    count: Optional[int] = None
    raw = False

    def position(self, left, right, n):
        raise NotImplementedError

    def width(self, left, right, n):
        return self.position(left, right, n + 1) - self.position(left, right, n)

    def widths(self, left, right, ns):
        return np.array([self.width(left, right, int(n)) for n in ns], dtype=float)

    def locate(self, left, right, t):
        """Largest n with position(n) <= t"""
        if self.position(left, right, 0) > t:
            raise ValueError(f"{t!r} lies below the layer start")
        last = (self.count - 1) if self.count is not None else _INDEX_CEILING
        hi = 1
        while hi <= last and self.position(left, right, hi) <= t:
            hi *= 2
        lo = hi // 2 if hi > 1 else 0
        hi = min(hi, last + 1)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.position(left, right, mid) <= t:
                lo = mid
            else:
                hi = mid
        return lo

    def to_spec(self):
        raise NotImplementedError


class DyadicLayer(Layer):
    """Children L + (R-L)(1 - 2^-n)"""

    def position(self, left, right, n):
        return left + (right - left) * (1.0 - math.ldexp(1.0, -n))

    def width(self, left, right, n):
        return (right - left) * math.ldexp(1.0, -(n + 1))

    def widths(self, left, right, ns):
        return (right - left) * np.ldexp(1.0, -(np.asarray(ns, dtype=int) + 1))

    def to_spec(self):
        return {'type': 'dyadic'}


class HarmonicLayer(Layer):
    """Children L + (R-L) n/(n+1)"""

    def position(self, left, right, n):
        return left + (right - left) * n / (n + 1.0)

    def width(self, left, right, n):
        return (right - left) / ((n + 1.0) * (n + 2.0))

    def widths(self, left, right, ns):
        ns = np.asarray(ns, dtype=float)
        return (right - left) / ((ns + 1.0) * (ns + 2.0))

    def to_spec(self):
        return {'type': 'harmonic'}


class ArithmeticLayer(Layer):
    """Level-0 generator start + n*step for unbounded sets"""

    raw = True

    def __init__(self, start, step):
        if step <= 0:
            raise SpecError("arithmetic step must be positive")
        self.start = float(start)
        self.step = float(step)

    def position(self, left, right, n):
        return self.start + n * self.step

    def width(self, left, right, n):
        return self.step

    def widths(self, left, right, ns):
        return np.full(len(ns), self.step)

    def to_spec(self):
        return {'type': 'arithmetic', 'step': self.step}


class FiniteLayer(Layer):
    raw = True

    def __init__(self, values):
        values = tuple(float(v) for v in values)
        if not values:
            raise SpecError("finite set needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise SpecError(f"finite set values must be strictly increasing: {values}")
        self.values = values
        self.count = len(values)

    def position(self, left, right, n):
        return self.values[min(n, self.count - 1)]

    def to_spec(self):
        return {'type': 'finite', 'values': list(self.values)}


class FormulaLayer(Layer):
    """
    User formula in n. As a fraction layer it must give u(0)=0 and increase to
    1; as a raw level-0 layer it gives absolute points increasing to the sup.
    """

    def __init__(self, text, raw=False):
        from .expressions import Expression

        self.text = text
        self.raw = raw
        self._expr = Expression(text, ('n',))
        if not raw and abs(self._u(0)) > 1e-15:
            raise SpecError(f"fraction layer '{text}' must vanish at n=0")

    def _u(self, n):
        return float(self._expr(n=n))

    def position(self, left, right, n):
        if self.raw:
            return self._u(n)
        return left + (right - left) * self._u(n)

    def to_spec(self):
        return {'type': 'formula', 'expr': self.text, 'raw': self.raw}


def _layer_from_spec(data, level, minimum):
    kind = data.get('type', 'dyadic')
    if kind == 'dyadic':
        return DyadicLayer()
    if kind == 'harmonic':
        return HarmonicLayer()
    if kind == 'arithmetic':
        if level:
            raise SpecError("arithmetic layers are only allowed at level 0")
        return ArithmeticLayer(minimum, data.get('step', 1.0))
    if kind == 'formula':
        raw = bool(data.get('raw', False))
        if raw and level:
            raise SpecError("raw formula layers are only allowed at level 0")
        return FormulaLayer(data['expr'], raw=raw)
    raise SpecError(f"Unknown layer type '{kind}'")


def _parse_extended(value):
    if value is None or value in ('inf', 'infinity', '+inf', 'oo'):
        return INFINITY
    return float(value)


@dataclass(frozen=True)
class WellOrderedSet:
    layers: tuple
    minimum: float
    supremum: float
    bound: Optional[OrdinalAddress] = None
    name: str = ''

    def __post_init__(self):
        if not self.layers:
            raise SpecError("a well-ordered set needs at least one layer")
        if any(layer.count is not None for layer in self.layers[1:]):
            raise SpecError("only level 0 may be finite")
        if self.layers[0].count is not None and len(self.layers) != 1:
            raise SpecError("finite sets have depth 1")
        if not self.minimum < self.supremum:
            raise SpecError(f"min {self.minimum} must lie below sup {self.supremum}")
        if self.supremum == INFINITY and not self.layers[0].raw:
            raise SpecError("sets with sup = inf need a raw level-0 generator (arithmetic or formula)")

    # construction

    @classmethod
    def dyadic(cls, minimum=0.0, supremum=1.0, depth=1, name=''):
        return cls(tuple(DyadicLayer() for _ in range(depth)), float(minimum), float(supremum), name=name)

    @classmethod
    def finite(cls, values, name=''):
        layer = FiniteLayer(values)
        return cls((layer,), layer.values[0], layer.values[-1], name=name)

    @classmethod
    def arithmetic(cls, minimum=0.0, step=1.0, depth=1, name=''):
        layers = (ArithmeticLayer(minimum, step),) + tuple(DyadicLayer() for _ in range(depth - 1))
        return cls(layers, float(minimum), INFINITY, name=name)

    @classmethod
    def from_spec(cls, data, default_depth=1):
        if not isinstance(data, dict):
            raise SpecError(f"index set spec must be a mapping, got {type(data).__name__}")
        kind = data.get('kind', 'dyadic')
        try:
            if kind == 'finite':
                return cls.finite(data['values'], name=data.get('name', ''))
            minimum = float(data.get('min', 0.0))
            supremum = _parse_extended(data.get('sup', 1.0))
            depth = int(data.get('depth', default_depth))
            if kind == 'dyadic':
                if supremum == INFINITY:
                    return cls.arithmetic(minimum, float(data.get('step', 1.0)), depth, data.get('name', ''))
                return cls.dyadic(minimum, supremum, depth, data.get('name', ''))
            if kind == 'custom':
                specs = data.get('layers') or [{'type': 'dyadic'}] * depth
                layers = tuple(_layer_from_spec(s, k, minimum) for k, s in enumerate(specs))
                return cls(layers, minimum, supremum, name=data.get('name', ''))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"Bad index set spec {data!r}: {exc}") from exc
        raise SpecError(f"Unknown index set kind '{kind}'")

    def to_spec(self):
        if self.is_finite:
            return {'kind': 'finite', 'values': list(self.layers[0].values)}
        return {
            'kind': 'custom',
            'min': self.minimum,
            'sup': 'inf' if self.supremum == INFINITY else self.supremum,
            'depth': self.depth,
            'layers': [layer.to_spec() for layer in self.layers],
        }

    # structure

    @property
    def depth(self):
        return len(self.layers)

    @property
    def is_finite(self):
        return self.layers[0].count is not None

    @property
    def contains_sup(self):
        """True when b itself belongs to the set (finite sets)"""
        return self.is_finite and self.bound is None

    def address(self, *digits):
        return OrdinalAddress.of(digits, self.depth)

    @property
    def sup_address(self):
        return self.bound if self.bound is not None else OrdinalAddress.sup(self.depth)

    @property
    def sup_value(self):
        return self.embed(self.bound) if self.bound is not None else self.supremum

    @property
    def last(self):
        """Address of b for finite sets"""
        if not self.is_finite:
            raise AddressAtSup(OrdinalAddress.sup(self.depth))
        return OrdinalAddress.of((self.layers[0].count - 1,), 1)

    def first(self):
        return OrdinalAddress.first(self.depth)

    @property
    def is_empty(self):
        return self.bound is not None and not (self.first() < self.bound)

    def interval(self, prefix):
        """[L, R) spanned by the block with the given digit prefix"""
        left, right = self.minimum, self.supremum
        for k, n in enumerate(prefix):
            layer = self.layers[k]
            left, right = layer.position(left, right, n), layer.position(left, right, n + 1)
        return left, right

    def embed(self, address):
        if address.is_sup:
            return self.supremum
        left, right = self.interval(address.digits)
        if address.is_full:
            if self.is_finite and address.digits[0] == self.layers[0].count - 1:
                return self.layers[0].values[-1]
            return left
        return right

    def positions(self, prefix, ns):
        """Vectorised embed of the children `ns` of the block `prefix`"""
        left, right = self.interval(prefix)
        layer = self.layers[len(prefix)]
        return np.array([layer.position(left, right, int(n)) for n in ns], dtype=float)

    def widths(self, prefix, ns):
        """S(alpha) - alpha for the children `ns` of an innermost block"""
        left, right = self.interval(prefix)
        return self.layers[len(prefix)].widths(left, right, ns)

    def is_limit(self, address):
        return not self.is_finite and not address.is_sup and not address.is_full

    def contains(self, address):
        if address.is_sup:
            return False
        if self.is_finite and address.digits[0] >= self.layers[0].count:
            return False
        return self.bound is None or address < self.bound

    # operations

    def successor(self, beta):
        if beta.is_sup:
            raise AddressAtSup(beta)
        full = beta.full_form()
        nxt = full[:-1] + (full[-1] + 1,)
        last_layer = self.layers[-1]
        if last_layer.count is not None and nxt[-1] >= last_layer.count:
            raise AddressAtSup(beta)
        result = OrdinalAddress.of(nxt, self.depth)
        if self.bound is not None and not result < self.bound:
            raise AddressAtSup(beta)
        return result

    def restrict_below(self, gamma):
        if gamma.is_sup:
            return self
        if self.bound is not None and self.bound < gamma:
            return self
        return replace(self, bound=gamma)

    def locate(self, t):
        """Address beta with embed(beta) <= t < embed(S(beta))"""
        if t < self.minimum or t > self.sup_value or (t == self.sup_value and not self.contains_sup):
            raise ValueError(f"{t!r} is outside [{self.minimum}, {self.sup_value})")
        left, right = self.minimum, self.supremum
        digits = []
        for layer in self.layers:
            n = layer.locate(left, right, t)
            digits.append(n)
            left, right = layer.position(left, right, n), layer.position(left, right, n + 1)
        return OrdinalAddress.of(digits, self.depth)

    def cursor(self, address):
        return Cursor(address, self.embed(address), self.is_limit(address))

    def enumerate(self, budget):
        """First `budget` elements in increasing order"""
        if budget < 1:
            raise ValueError("budget must be at least 1")
        out = []
        if self.is_empty:
            return out
        beta = self.first()
        while len(out) < budget:
            out.append(self.cursor(beta))
            try:
                beta = self.successor(beta)
            except AddressAtSup:
                break
        return out

    def traverse(self, per_layer) -> Iterator[Cursor]:
        """
        Horizon-truncated walk in increasing order: every layer is cut after
        `per_layer` children, and the limit of each truncated block shows up
        as the first point of the following block.
        """
        def walk(prefix):
            layer = self.layers[len(prefix)]
            count = per_layer if layer.count is None else min(per_layer, layer.count)
            for n in range(count):
                digits = prefix + (n,)
                if len(digits) == self.depth:
                    address = OrdinalAddress.of(digits, self.depth)
                    if self.bound is not None and not address < self.bound:
                        return False
                    yield self.cursor(address)
                else:
                    keep_going = yield from walk(digits)
                    if keep_going is False:
                        return False
            return True

        yield from walk(())

    def knots(self, per_layer, upper=None):
        """Sorted positions of the traversal, optionally cut at `upper`"""
        values = []
        for cursor in self.traverse(per_layer):
            if upper is not None and cursor.value > upper:
                break
            values.append(cursor.value)
        return np.array(values, dtype=float)
