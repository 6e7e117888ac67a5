"""
Normed, partially ordered value spaces: reals, fixed-dimension real vectors,
and c0 carried as a finite prefix plus a certified tail bound.

Values are immutable. Bulk computations work on raw coordinate arrays and
wrap the result with SpaceKind.wrap at the end.
"""
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .exceptions import SpaceMismatch, SpecError


class Tri(Enum):
    TRUE = 'true'
    FALSE = 'false'
    UNKNOWN = 'unknown'

    @classmethod
    def of(cls, flag):
        return cls.TRUE if flag else cls.FALSE

    def __bool__(self):
        return self is Tri.TRUE


class NormInterval(NamedTuple):
    lo: float
    hi: float

    def scaled(self, c):
        c = abs(c)
        return NormInterval(c * self.lo, c * self.hi)


def _frozen(coords):
    arr = np.array(coords, dtype=float, ndmin=1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VectorValue:
    coords: np.ndarray
    tail: float = 0.0

    kind = 'abstract'

    def __post_init__(self):
        object.__setattr__(self, 'coords', _frozen(self.coords))
        if self.tail < 0:
            raise ValueError(f"tail bound must be nonnegative, got {self.tail}")

    @property
    def dim(self):
        return self.coords.shape[0]

    @property
    def space(self):
        return SpaceKind(self.kind, self.dim)

    def _check(self, other):
        if not isinstance(other, VectorValue) or other.kind != self.kind or other.dim != self.dim:
            raise SpaceMismatch(self.describe(), other.describe() if isinstance(other, VectorValue) else repr(other))

    def describe(self):
        return f"{self.kind}[{self.dim}]"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(-1.0, other))

    def __neg__(self):
        return scale(-1.0, self)

    def __mul__(self, c):
        return scale(c, self)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, VectorValue)
            and other.kind == self.kind
            and np.array_equal(self.coords, other.coords)
            and self.tail == other.tail
        )

    def __hash__(self):
        return hash((self.kind, self.coords.tobytes(), self.tail))

    def __repr__(self):
        body = ', '.join(f'{c:.6g}' for c in self.coords[:6])
        more = ', ...' if self.dim > 6 else ''
        tail = f', tail={self.tail:.3g}' if self.kind == 'c0' else ''
        return f"{type(self).__name__}([{body}{more}]{tail})"

    def norm(self):
        return norm(self)

    def to_dict(self):
        return {'kind': self.kind, 'coords': [float(c) for c in self.coords], 'tail_bound': float(self.tail)}


class Real(VectorValue):
    kind = 'real'

    def __init__(self, value=0.0, tail=0.0):
        super().__init__(np.array(value, dtype=float).reshape(1), 0.0)

    @property
    def value(self):
        return float(self.coords[0])


class RealVec(VectorValue):
    kind = 'vec'

    def __init__(self, coords, tail=0.0):
        super().__init__(coords, 0.0)


class TruncCZero(VectorValue):
    """Element of c0: tracked prefix, every later coordinate bounded by `tail`"""

    kind = 'c0'

    def __init__(self, coords, tail=0.0):
        super().__init__(coords, float(tail))


_CLASSES = {'real': Real, 'vec': RealVec, 'c0': TruncCZero}


@dataclass(frozen=True)
class SpaceKind:
    """Space descriptor used by families and mappings to build their values"""

    kind: str
    dim: int = 1

    def __post_init__(self):
        if self.kind not in _CLASSES:
            raise SpecError(f"Unknown space kind '{self.kind}' (expected one of {sorted(_CLASSES)})")
        if self.kind == 'real' and self.dim != 1:
            raise SpecError("real space has dimension 1")
        if self.dim < 1:
            raise SpecError("space dimension must be positive")

    def wrap(self, coords, tail=0.0):
        cls = _CLASSES[self.kind]
        if self.kind == 'real':
            return Real(np.asarray(coords, dtype=float).reshape(1)[0])
        return cls(coords, tail if self.kind == 'c0' else 0.0)

    def zero(self):
        return self.wrap(np.zeros(self.dim))

    def unit(self):
        """The vector e used by the gallery families: all tracked coordinates 1"""
        return self.wrap(np.ones(self.dim))

    @property
    def carries_tail(self):
        return self.kind == 'c0'

    def to_dict(self):
        return {'kind': self.kind, 'dim': self.dim}

    @classmethod
    def from_dict(cls, data):
        if data is None:
            return cls('real')
        if isinstance(data, str):
            kind, _, dim = data.partition(':')
            return cls(kind, int(dim) if dim else 1)
        return cls(data.get('kind', 'real'), int(data.get('dim', 1)))


def add(x, y):
    x._check(y)
    return x.space.wrap(x.coords + y.coords, x.tail + y.tail)


def scale(c, x):
    c = float(c)
    if c == 0.0:
        return x.space.zero()
    return x.space.wrap(c * x.coords, abs(c) * x.tail)


def norm(x):
    top = float(np.max(np.abs(x.coords))) if x.dim else 0.0
    if x.kind == 'c0':
        return NormInterval(top, max(top, x.tail))
    return NormInterval(top, top)


def leq(x, y, slack=0.0):
    """Componentwise order; UNKNOWN when c0 tails leave the comparison open"""
    x._check(y)
    if np.any(x.coords > y.coords + slack):
        return Tri.FALSE
    if x.kind == 'c0' and (x.tail > 0 or y.tail > 0):
        if x.tail + y.tail <= slack:
            return Tri.TRUE
        return Tri.UNKNOWN
    return Tri.TRUE


def sup_distance(x, y):
    return norm(x - y).hi


def from_dict(data):
    try:
        space = SpaceKind(data['kind'], len(data['coords']))
        return space.wrap(data['coords'], data.get('tail_bound', 0.0))
    except (KeyError, TypeError) as exc:
        raise SpecError(f"Bad vector value {data!r}: {exc}") from exc
