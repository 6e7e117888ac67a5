"""
Spec files: JSON key-value trees describing a family, a step mapping, a
regulated mapping or an impulsive problem.

Any object slot may instead hold "gallery:<id>", optionally with a "params"
mapping next to it. Formulas use the grammar of `expressions`:

    family   value in n (current digit), n0..n9 (all digits), i (coordinate)
             remainder / abs_remainder in n and the prefix digits n0..
    mapping  value and primitive in t and i
    problem  coupling in t, u (the coordinate's own value), s (running sum
             u_1 + ... + u_i) and i; impulse in the family variables plus
             u and s taken just before the impulse
"""
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import gallery
from .config import SolverConfig
from .exceptions import SpecError
from .expressions import INDEX_VARIABLES, Expression, compile_optional
from .impulsive import ImpulsiveProblem
from .ordinal_core import WellOrderedSet
from .regulated import RegulatedMapping
from .spaces import SpaceKind
from .step_integral import StepMapping
from .transfinite_sum import Family

logger = logging.getLogger(__name__)

GALLERY_PREFIX = 'gallery:'


@dataclass(frozen=True)
class Loaded:
    kind: str
    obj: object
    entry: Optional[gallery.GalleryEntry] = None
    source: str = ''

    @property
    def expected(self):
        return self.entry.expected if self.entry is not None else {}

    @property
    def exact(self):
        return self.entry.exact if self.entry is not None else None


def parse_params(text):
    """'m=2,dim=16' -> {'m': '2', 'dim': '16'}"""
    params = {}
    if not text:
        return params
    for item in str(text).split(','):
        if not item.strip():
            continue
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise SpecError(f"bad parameter '{item}' (expected key=value)")
        params[key.strip()] = value.strip()
    return params


def read_tree(path):
    path = Path(path)
    if not path.exists():
        raise SpecError(f"Spec file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise SpecError(f"Invalid JSON in {path}: {exc}") from exc


def _from_gallery(ref, params, config):
    entry = gallery.get(ref[len(GALLERY_PREFIX):], config=config, **(params or {}))
    return Loaded(entry.kind, entry.obj, entry, ref)


def load(source, params=None, config=None):
    """A gallery reference or a spec file path"""
    config = config or SolverConfig()
    if isinstance(source, str) and source.startswith(GALLERY_PREFIX):
        return _from_gallery(source, params, config)
    tree = read_tree(source)
    loaded = build(tree, config)
    return Loaded(loaded.kind, loaded.obj, loaded.entry, str(source))


def build(tree, config=None, expect=None):
    config = config or SolverConfig()
    if isinstance(tree, str):
        if not tree.startswith(GALLERY_PREFIX):
            raise SpecError(f"expected an object or 'gallery:<id>', got {tree!r}")
        loaded = _from_gallery(tree, None, config)
    elif isinstance(tree, dict):
        if 'gallery' in tree:
            loaded = _from_gallery(GALLERY_PREFIX + str(tree['gallery']), tree.get('params'), config)
        else:
            kind = tree.get('type')
            if kind not in _BUILDERS:
                raise SpecError(f"Unknown spec type {kind!r} (expected one of {sorted(_BUILDERS)})")
            loaded = Loaded(kind, _BUILDERS[kind](tree, config))
    else:
        raise SpecError(f"spec must be an object, got {type(tree).__name__}")
    if expect is not None and loaded.kind not in expect:
        raise SpecError(f"expected a {' or '.join(expect)} spec, got {loaded.kind}")
    return loaded


def _number(tree, key, default=None):
    value = tree.get(key, default)
    if value is None:
        return None
    if value in ('inf', 'infinity'):
        return math.inf
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"'{key}' must be a number, got {value!r}") from exc


def _required(tree, key):
    if key not in tree:
        raise SpecError(f"spec is missing '{key}'")
    return tree[key]


# Families


def _digit_values(prefix, n, depth):
    values = {f'n{k}': float(d) for k, d in enumerate(prefix)}
    values[f'n{len(prefix)}'] = n
    values['n'] = n
    return values


def family_from_tree(tree, config=None):
    space = SpaceKind.from_dict(tree.get('space'))
    index = WellOrderedSet.from_spec(_required(tree, 'index'))
    if 'values' in tree:
        if not index.is_finite:
            raise SpecError("explicit 'values' need a finite index set")
        values = np.asarray(tree['values'], dtype=float)
        return Family.from_values(index, values.reshape(len(values), space.dim), space, name=tree.get('name', ''))

    value = Expression(_required(tree, 'value'), INDEX_VARIABLES)
    depth = index.depth
    coordinates = np.arange(1, space.dim + 1, dtype=float)[None, :]

    def terms(prefix, ns):
        ns = np.asarray(ns, dtype=float)[:, None]
        out = value(i=coordinates, **_digit_values(prefix, ns, depth))
        return np.broadcast_to(out, (len(ns), space.dim))

    def remainder_from(text):
        expr = compile_optional(text, INDEX_VARIABLES)
        if expr is None:
            return None
        return lambda prefix, n: float(expr(**_digit_values(prefix, float(n), depth)))

    return Family(
        index,
        terms,
        space,
        remainder_bound=remainder_from(tree.get('remainder')),
        abs_remainder_bound=remainder_from(tree.get('abs_remainder')),
        bound=_number(tree, 'bound'),
        nonnegative=bool(tree.get('nonnegative', False)),
        name=tree.get('name', value.text),
    )


def step_from_tree(tree, config=None):
    inner = tree.get('steps', tree)
    if isinstance(inner, str) or 'gallery' in inner:
        steps = build(inner, config, expect=('family',)).obj
    else:
        steps = family_from_tree(inner, config)
    terminal = None
    if tree.get('terminal') is not None:
        terminal = steps.space.wrap(np.asarray(tree['terminal'], dtype=float).reshape(steps.space.dim))
    remainder = compile_optional(tree.get('weighted_remainder'), INDEX_VARIABLES)
    weighted_remainder = None
    if remainder is not None:
        depth = steps.index.depth
        weighted_remainder = lambda prefix, n: float(remainder(**_digit_values(prefix, float(n), depth)))
    return StepMapping(steps, terminal, weighted_remainder, name=tree.get('name', steps.name))


# Regulated mappings


def mapping_from_tree(tree, config=None):
    space = SpaceKind.from_dict(tree.get('space'))
    start, end = (_number({'v': v}, 'v') for v in _required(tree, 'domain'))
    value = Expression(_required(tree, 'value'), ('t', 'i'))
    primitive = compile_optional(tree.get('primitive'), ('t', 'i'))
    coordinates = np.arange(1, space.dim + 1, dtype=float)[None, :]

    def evaluate(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))[:, None]
        return np.broadcast_to(value(t=ts, i=coordinates), (len(ts), space.dim))

    primitive_oracle = None
    if primitive is not None:
        error = _number(tree, 'primitive_error', 0.0)

        def primitive_oracle(ts):
            ts = np.atleast_1d(np.asarray(ts, dtype=float))[:, None]
            return np.broadcast_to(primitive(t=ts, i=coordinates), (len(ts), space.dim)), error

    osc = None
    lipschitz = _number(tree, 'lipschitz')
    if lipschitz is not None:
        osc = lambda x, y: lipschitz * (y - x)
    singular = tuple(float(p) for p in tree.get('singular', ()))
    growth = tree.get('primitive_growth')
    return RegulatedMapping(
        evaluate=evaluate,
        space=space,
        domain=(start, end),
        right_limit=evaluate if tree.get('right_continuous', False) else None,
        osc=osc,
        hints=(lambda x, y, eps: [p for p in singular if x < p <= y]) if singular else None,
        singular=(lambda x, y: [p for p in singular if x < p <= y]) if singular else None,
        primitive=primitive_oracle,
        bound=_number(tree, 'bound'),
        absolutely_continuous=bool(tree.get('absolutely_continuous', False)),
        primitive_growth=tuple(float(v) for v in growth) if growth else None,
        name=tree.get('name', value.text),
    )


# Impulsive problems


def _constant_vector(value, dim):
    return np.broadcast_to(np.asarray(value, dtype=float), (dim,)).copy()


def problem_from_tree(tree, config=None):
    config = config or SolverConfig()
    space = SpaceKind.from_dict(tree.get('space'))
    start, end = (_number({'v': v}, 'v') for v in _required(tree, 'interval'))
    impulses = build(_required(tree, 'impulses'), config, expect=('family',)).obj
    if impulses.space != space:
        raise SpecError(f"impulse family lives in {impulses.space}, the problem in {space}")
    bounds = tree.get('impulse_bounds')
    if bounds is not None:
        lower, upper = (build(b, config, expect=('family',)).obj for b in bounds)
    else:
        lower = upper = impulses

    source = None
    if tree.get('source') is not None:
        source = build(tree['source'], config, expect=('mapping',)).obj

    coupling = None
    coupling_bounds = (None, None)
    if tree.get('coupling') is not None:
        expr = Expression(tree['coupling'], ('t', 'u', 's', 'i'))
        coordinates = np.arange(1, space.dim + 1, dtype=float)[None, :]

        def coupling(ts, us):
            ts = np.atleast_1d(np.asarray(ts, dtype=float))[:, None]
            return np.broadcast_to(expr(t=ts, u=us, s=np.cumsum(us, axis=1), i=coordinates), us.shape)

        low, high = _required(tree, 'coupling_bounds')
        coupling_bounds = (_constant_vector(low, space.dim), _constant_vector(high, space.dim))

    impulse = _impulse_from_tree(tree, impulses, bounds is not None, space)
    return ImpulsiveProblem(
        start=start,
        end=end,
        space=space,
        impulses=impulses.index,
        impulse=impulse or (lambda address, u: impulses.value(address).coords),
        impulse_bounds=(lower, upper),
        source=source,
        coupling=coupling,
        coupling_bounds=coupling_bounds,
        increasing=bool(tree.get('increasing', True)),
        state_impulses=impulse is not None,
        name=tree.get('name', ''),
    )


def _impulse_from_tree(tree, impulses, bounded, space):
    """D(lambda, u) from an 'impulse' formula, or None when the impulses are the family itself"""
    if tree.get('impulse') is None:
        return None
    if not bounded:
        raise SpecError("an 'impulse' formula needs 'impulse_bounds'")
    expr = Expression(tree['impulse'], INDEX_VARIABLES + ('u', 's'))
    depth = impulses.index.depth
    coordinates = np.arange(1, space.dim + 1, dtype=float)

    def impulse(address, u):
        full = address.full_form()
        state = np.zeros(space.dim) if u is None else np.asarray(u, dtype=float).reshape(space.dim)
        digits = _digit_values(full[:-1], float(full[-1]), depth)
        out = expr(i=coordinates, u=state, s=np.cumsum(state), **digits)
        return np.array(np.broadcast_to(out, (space.dim,)), dtype=float)

    return impulse


_BUILDERS = {
    'family': family_from_tree,
    'step': step_from_tree,
    'mapping': mapping_from_tree,
    'problem': problem_from_tree,
}
