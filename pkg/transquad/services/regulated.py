"""
Right-regulated mappings: oscillation partitions, step approximations,
integrability verdicts and CD primitives.

A mapping is an evaluation oracle over arrays of t plus optional analytic
oracles. When a certified oscillation bound is missing, the oscillation is
estimated by stratified sampling and every result built on it is flagged
uncertified.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .config import SolverConfig
from .exceptions import BudgetExceeded, NoProgress, NotLocallyIntegrable, SpecError
from .ordinal_core import WellOrderedSet
from .spaces import SpaceKind, Tri
from .step_integral import IntegrabilityVerdict, StepMapping, enforce_implications
from .transfinite_sum import Family, Verdict, classify

logger = logging.getLogger(__name__)

_SHELL_LEVELS = 40
_SHELL_SAMPLES = 257
_SHELL_POINTS = 8
_RIGHT_LIMIT_LEVELS = 30
_STEP_RESOLUTION = 0.05
_ULP_GUARD = 8
_EPS_LEVELS = 24
_CHUNK = 4096


@dataclass(frozen=True)
class RegulatedMapping:
    """
    Oracles work on arrays: `evaluate(ts)` and `right_limit(ts)` return
    coordinates of shape (len(ts), dim), `primitive(ts)` returns
    (coordinates, error bound). `osc(x, y)` bounds sup ||g(s) - g(t)|| over
    s, t in (x, y). `hints(x, y, eps)` lists the points in (x, y] where
    eps-cells accumulate from the left; `singular(x, y)` the points where g
    is locally unbounded.
    """

    evaluate: Callable
    space: SpaceKind
    domain: tuple
    right_limit: Optional[Callable] = None
    osc: Optional[Callable] = None
    hints: Optional[Callable] = None
    singular: Optional[Callable] = None
    primitive: Optional[Callable] = None
    primitive_tail: Optional[Callable] = None
    tail: Optional[Callable] = None
    bound: Optional[float] = None
    absolutely_continuous: bool = False
    primitive_growth: Optional[tuple] = None
    weight_of: Optional['RegulatedMapping'] = None
    name: str = ''

    @property
    def start(self):
        return float(self.domain[0])

    @property
    def end(self):
        return float(self.domain[1])

    def values(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.asarray(self.evaluate(ts), dtype=float).reshape(len(ts), self.space.dim)

    def tails(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.tail is None:
            return np.zeros(len(ts))
        return np.asarray(self.tail(ts), dtype=float).reshape(len(ts))

    def primitive_tails(self, ts):
        """Bound on the untracked coordinates of the primitive at ts"""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.primitive_tail is None:
            return np.zeros(len(ts))
        return np.asarray(self.primitive_tail(ts), dtype=float).reshape(len(ts))

    def __call__(self, t):
        return self.space.wrap(self.values([t])[0], float(self.tails([t])[0]))

    def right_values(self, ts, tol=1e-9):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.right_limit is not None:
            return np.asarray(self.right_limit(ts), dtype=float).reshape(len(ts), self.space.dim)
        return np.array([sampled_right_limit(self, t, tol)[0] for t in ts])


@dataclass(frozen=True)
class StepResult:
    y: float
    bound: float
    certified: bool


@dataclass(frozen=True)
class Cell:
    left: float
    right: float
    bound: float
    resolved: bool
    certified: bool

    @property
    def length(self):
        return self.right - self.left


@dataclass(frozen=True)
class OscPartition:
    epsilon: float
    cells: tuple
    start: float
    end: float
    complete: bool = True

    @property
    def points(self):
        return np.array([c.left for c in self.cells] + [self.end], dtype=float)

    @property
    def knots(self):
        return WellOrderedSet.finite(self.points, name=f"knots eps={self.epsilon:g}")

    @property
    def certified(self):
        return all(c.certified for c in self.cells)

    @property
    def strips(self):
        return [c for c in self.cells if not c.resolved]

    @property
    def resolved_length(self):
        return sum(c.length for c in self.cells if c.resolved)

    def rows(self):
        for k, cell in enumerate(self.cells):
            yield {
                'cell': k,
                'left': cell.left,
                'right': cell.right,
                'osc_bound': cell.bound,
                'resolved': cell.resolved,
                'certified': cell.certified,
            }


def step_regulated(g, per_layer=64):
    """
    A depth-one step mapping seen as a regulated mapping. Knots past the
    first `per_layer` are not resolved, so the oscillation there is infinite.
    """
    if g.index.depth != 1:
        raise SpecError(f"only depth-one step mappings can be adapted, got depth {g.index.depth}")
    knots = g.knots(per_layer)
    levels = g.values(knots)
    resolved_to = g.end if g.index.is_finite else knots[-1]

    def osc(x, y):
        if y > resolved_to:
            return math.inf
        lo = max(int(np.searchsorted(knots, x, side='right')) - 1, 0)
        hi = int(np.searchsorted(knots, y, side='left'))
        block = levels[lo:max(hi, lo + 1)]
        return float(np.max(np.max(block, axis=0) - np.min(block, axis=0)))

    def hints(x, y, eps):
        inside = knots[(knots > x) & (knots <= y)]
        points = [float(k) for k in inside]
        if not g.index.is_finite and x < g.end <= y:
            points.append(g.end)
        return points

    return RegulatedMapping(
        evaluate=g.values,
        space=g.space,
        domain=(g.start, g.end),
        right_limit=g.values,
        osc=osc,
        hints=hints,
        bound=g.bound,
        name=g.name or 'step mapping',
    )


# Oracles


def sampled_right_limit(g, t, tol=1e-9, h0=None):
    """g(t+) from g(t + 2^-k h0), k = 1..K; flag says whether the values settled"""
    h0 = h0 or max(1e-3, 1e-3 * abs(t))
    previous = None
    for k in range(1, _RIGHT_LIMIT_LEVELS + 1):
        value = g.values([t + math.ldexp(h0, -k)])[0]
        if previous is not None and np.max(np.abs(value - previous)) < tol / 4:
            return value, True
        previous = value
    logger.debug(f"right limit at {t!r} did not settle")
    return previous, False


class Oscillation:
    """osc(x, y) from the analytic oracle, or from stratified samples (uncertified)"""

    def __init__(self, g, config):
        self.g = g
        self.samples = config.osc_samples
        self.rounds = config.osc_rounds
        self.seed = config.seed

    def __call__(self, x, y):
        if self.g.osc is not None:
            return float(self.g.osc(x, y)), True
        return self.sampled(x, y), False

    def sampled(self, x, y):
        # seeded by the interval so repeated queries agree
        rng = np.random.default_rng([self.seed, int(np.float64(x).view(np.int64)) & 0xFFFFFFFF])
        width = y - x
        strata = x + width * np.arange(self.samples) / self.samples
        ts = np.concatenate([strata + width / self.samples * rng.random(self.samples) for _ in range(self.rounds)])
        ts = ts[(ts > x) & (ts < y)]
        if len(ts) < 2:
            return 0.0
        values = self.g.values(ts)
        spread = float(np.max(np.ptp(values, axis=0)))
        return spread + 2.0 * float(np.max(self.g.tails(ts)))


def _hint_list(g, x, y, eps):
    if g.hints is None:
        return np.empty(0)
    points = np.asarray(sorted(g.hints(x, y, eps)), dtype=float)
    return points[(points > x) & (points <= y)]


def _next_hint(hints, x):
    k = np.searchsorted(hints, x, side='right')
    return float(hints[k]) if k < len(hints) else None


def g_epsilon_step(g, x, eps, config=None, cap=None, oscillation=None, guess=None):
    """
    Certified lower estimate of sup{y : osc(x, y) <= eps}: try the cap (next
    accumulation hint or b), then walk from x + guess (or from the cap),
    doubling or halving until the admissible step is bracketed, then bisect
    until the bracket is within 5% of the step.
    """
    config = config or SolverConfig()
    osc = oscillation or Oscillation(g, config)
    if cap is None:
        cap = _next_hint(_hint_list(g, x, g.end, eps), x) or g.end
    bound, certified = osc(x, cap)
    if bound <= eps:
        return StepResult(cap, bound, certified)

    bad, good = cap, None
    if guess is not None and 0.0 < guess < cap - x:
        y = x + guess
        bound, certified = osc(x, y)
        if bound > eps:
            bad = y
        else:
            good, good_bound, good_certified = y, bound, certified
            while True:
                y = x + 2.0 * (good - x)
                if y >= bad:
                    break
                bound, certified = osc(x, y)
                if bound > eps:
                    bad = y
                    break
                good, good_bound, good_certified = y, bound, certified

    if good is None:
        width = bad - x
        while True:
            width /= 2
            y = x + width
            if y <= x:
                raise NoProgress(x, eps)
            bound, certified = osc(x, y)
            if bound <= eps:
                good, good_bound, good_certified = y, bound, certified
                break
            bad = y

    while bad - good > _STEP_RESOLUTION * (good - x):
        mid = 0.5 * (good + bad)
        if not good < mid < bad:
            break
        bound, certified = osc(x, mid)
        if bound <= eps:
            good, good_bound, good_certified = mid, bound, certified
        else:
            bad = mid
    return StepResult(good, good_bound, good_certified)


def _aitken(k0, k1, k2):
    d1, d2 = k1 - k0, k2 - k1
    if d2 >= d1 or d1 <= 0:
        return None
    return k2 + d2 * d2 / (d1 - d2)


def build_partition(g, a=None, b=None, eps=0.5, budget=None, config=None):
    """
    Knots a = k_0 < k_1 < ... < b with osc <= eps on every resolved cell.
    Stepping toward an accumulation point stops after a block of cells, and
    a strip cell with the oracle's own bound closes the gap to it. The block
    is the block budget, cut down so that every hint fits in half the cell
    budget.
    """
    config = config or SolverConfig()
    a = g.start if a is None else float(a)
    b = g.end if b is None else float(b)
    budget = budget or config.cell_budget
    if not eps > 0:
        raise ValueError("eps must be positive")
    osc = Oscillation(g, config)
    hints = _hint_list(g, a, b, eps)
    block = min(config.block_budget, max(1, budget // (2 * (len(hints) + 1)) - 1))
    cells = []
    x = a
    target, run, guess = None, 0, None
    while x < b:
        if len(cells) >= budget:
            raise BudgetExceeded(
                f"Partition at eps={eps:g} used {budget} cells before reaching {b}",
                partial=OscPartition(eps, tuple(cells), a, x, complete=False),
            )
        hint = _next_hint(hints, x)
        cap = hint if hint is not None and hint <= b else b
        if cap != target:
            target, run = cap, 0
        run += 1
        if hint is not None and cap == hint and (
            run > block or cap - x <= _ULP_GUARD * math.ulp(cap)
        ):
            bound, certified = osc(x, cap)
            logger.debug(f"strip [{x!r}, {cap!r}] closes the block at eps={eps:g}")
            cells.append(Cell(x, cap, bound, False, certified))
            x = cap
            guess = None
            continue
        try:
            step = g_epsilon_step(g, x, eps, config, cap=cap, oscillation=osc, guess=guess)
        except NoProgress:
            if hint is None:
                raise
            bound, certified = osc(x, cap)
            cells.append(Cell(x, cap, bound, False, certified))
            x = cap
            continue
        if step.y - x <= _ULP_GUARD * math.ulp(x) and len(cells) >= 2:
            limit = _aitken(cells[-2].left, cells[-1].left, x)
            if limit is not None and x < limit <= b:
                bound, certified = osc(x, limit)
                logger.debug(f"inserting limit knot {limit!r} at eps={eps:g}")
                cells.append(Cell(x, limit, bound, False, certified))
                x = limit
                continue
            raise NoProgress(x, eps)
        cells.append(Cell(x, step.y, step.bound, True, step.certified))
        guess = 2.0 * (step.y - x)
        x = step.y
    partition = OscPartition(eps, tuple(cells), a, b)
    logger.info(
        f"partition eps={eps:g} on [{a}, {b}]: {len(cells)} cells, {len(partition.strips)} strips"
    )
    return partition


def _chunked(fn, ts):
    """fn over ts in blocks of _CHUNK points"""
    ts = np.asarray(ts, dtype=float)
    if len(ts) <= _CHUNK:
        return fn(ts)
    return np.concatenate([fn(ts[k:k + _CHUNK]) for k in range(0, len(ts), _CHUNK)])


def _primitive_at(g, ts):
    """(coordinates, error, untracked bound) of the primitive oracle, one row per t"""
    ts = np.asarray(ts, dtype=float)
    coords = np.empty((len(ts), g.space.dim))
    errors = np.empty(len(ts))
    for k in range(0, len(ts), _CHUNK):
        block = ts[k:k + _CHUNK]
        values, error = g.primitive(block)
        coords[k:k + len(block)] = np.asarray(values, dtype=float).reshape(len(block), g.space.dim)
        errors[k:k + len(block)] = np.broadcast_to(np.asarray(error, dtype=float), (len(block),))
    return coords, errors, _chunked(g.primitive_tails, ts)


def step_approximation(g, partition):
    """g_eps(t) = g(beta+) on [beta, S(beta)) over the partition knots"""
    points = partition.points
    coords = np.vstack([_chunked(g.right_values, points[:-1]), g.values(points[-1:])])
    tails = np.concatenate([_chunked(g.tails, points[:-1]), g.tails(points[-1:])])
    index = partition.knots
    steps = Family.from_values(index, coords, g.space, bound=g.bound, name=f"{g.name} eps={partition.epsilon:g}")
    if g.space.carries_tail:
        steps = Family(
            index,
            steps.terms,
            g.space,
            tails=lambda prefix, ns: tails[np.asarray(ns, dtype=int)],
            bound=g.bound,
            name=steps.name,
        )
    return StepMapping(steps, name=steps.name)


@dataclass(frozen=True)
class CellIntegrals:
    """
    Integral of g over each cell of a partition. Resolved cells take g(beta+)
    times the width with the oscillation bound times the width as residual;
    strips take the primitive oracle when the mapping has one, and otherwise
    the same product with the strip's own bound.
    """

    knots: np.ndarray
    values: np.ndarray
    tails: np.ndarray
    bounds: np.ndarray
    by_primitive: np.ndarray
    increments: np.ndarray
    tail_increments: np.ndarray
    residuals: np.ndarray

    @classmethod
    def over(cls, g, partition):
        knots = partition.points
        lefts, rights = knots[:-1], knots[1:]
        widths = rights - lefts
        bounds = np.array([c.bound for c in partition.cells], dtype=float)
        resolved = np.array([c.resolved for c in partition.cells], dtype=bool)
        values = _chunked(g.right_values, lefts).reshape(len(lefts), g.space.dim)
        tails = _chunked(g.tails, lefts)
        increments = widths[:, None] * values
        tail_increments = widths * tails
        residuals = widths * bounds
        by_primitive = ~resolved if g.primitive is not None else np.zeros(len(lefts), dtype=bool)
        if by_primitive.any():
            upper, err_upper, tail_upper = _primitive_at(g, rights[by_primitive])
            lower, err_lower, tail_lower = _primitive_at(g, lefts[by_primitive])
            increments[by_primitive] = upper - lower
            tail_increments[by_primitive] = tail_upper + tail_lower
            residuals[by_primitive] = err_upper + err_lower
        return cls(knots, values, tails, bounds, by_primitive, increments, tail_increments, residuals)


def partition_integral(g, partition):
    """Sum of the cell integrals over the partition, as (value, residual)"""
    pieces = CellIntegrals.over(g, partition)
    coords = np.sum(pieces.increments, axis=0)
    return g.space.wrap(coords, float(np.sum(pieces.tail_increments))), float(np.sum(pieces.residuals))


# Verdicts


def _shell_table(g, rho, lower, config):
    """Suprema and integrals of ||g|| over dyadic shells [rho - d 2^-k, rho - d 2^-k-1)"""
    delta = min(rho - lower, 0.125)
    rng = np.random.default_rng(config.seed)
    sups = np.empty(_SHELL_LEVELS)
    integrals = np.empty(_SHELL_LEVELS)
    for k in range(_SHELL_LEVELS):
        lo = rho - math.ldexp(delta, -k)
        hi = rho - math.ldexp(delta, -k - 1)
        ts = lo + (hi - lo) * (np.arange(_SHELL_SAMPLES) + rng.random(_SHELL_SAMPLES)) / _SHELL_SAMPLES
        with np.errstate(all='ignore'):
            norms = np.max(np.abs(g.values(ts)), axis=1) + g.tails(ts)
        sups[k] = np.max(norms)
        integrals[k] = np.mean(norms) * (hi - lo)
    index = WellOrderedSet.dyadic(rho - delta, rho, 1, name=f"shells below {rho:g}")
    sup_family = Family.from_values(index, sups, name='shell suprema')
    integral_family = Family.from_values(index, integrals, nonnegative=True, name='shell integrals')
    return sup_family, integral_family


def shell_test(g, rho, lower, tol=1e-6, config=None):
    """(bounded, absolutely integrable) near rho from the left, as Tri values"""
    config = config or SolverConfig()
    sup_family, integral_family = _shell_table(g, rho, lower, config)
    bounded = classify(sup_family, _SHELL_LEVELS, tol, config).bounded.value
    absolute = classify(integral_family, _SHELL_LEVELS, tol, config).absolute.value
    return bounded, absolute


def _singular_points(g, a, b):
    if g.singular is None:
        return []
    points = sorted(p for p in g.singular(a, b) if a < p <= b)
    return points[:_SHELL_POINTS]


def assess(g, a, b, config=None):
    """Verdicts from declared properties and shell tests at singular points"""
    config = config or SolverConfig()
    if math.isinf(b):
        return _assess_improper(g, a, config)

    points = _singular_points(g, a, b)
    shells = {}

    def shell(rho):
        if rho not in shells:
            shells[rho] = shell_test(g, rho, a, config=config)
        return shells[rho]

    # 1. Riemann: bounded on [a, b]
    if g.bound is not None:
        riemann = Verdict(Tri.TRUE, True, f"declared bound {g.bound:g}")
    else:
        riemann = Verdict(Tri.UNKNOWN, False, 'no declared bound')
        for rho in points:
            if shell(rho)[0] is Tri.FALSE:
                riemann = Verdict(Tri.FALSE, False, f"not locally bounded near {rho:g}", rho)
                break
    # 2. Bochner: norm integrable
    if riemann.value is Tri.TRUE:
        bochner = Verdict(Tri.TRUE, riemann.certified, 'bounded regulated mapping')
    elif g.absolutely_continuous:
        bochner = Verdict(Tri.TRUE, True, 'absolutely continuous primitive')
    else:
        bochner = Verdict(Tri.UNKNOWN, False, 'no norm bound')
        for rho in points:
            if shell(rho)[1] is Tri.FALSE:
                bochner = Verdict(Tri.FALSE, False, f"norm not integrable near {rho:g}", rho)
                break
    # 3. HL / HK
    if g.primitive is not None:
        hl = Verdict(Tri.TRUE, True, 'CD primitive')
    else:
        hl = Verdict(Tri.UNKNOWN, False, 'no primitive')
    hk = Verdict(hl.value, hl.certified, hl.reason)
    if riemann.value is Tri.UNKNOWN and bochner.value is Tri.FALSE:
        riemann = Verdict(Tri.FALSE, bochner.certified, bochner.reason, bochner.cutoff)
    return enforce_implications(hl, hk, bochner, riemann, bounded_domain=True)


def _assess_improper(g, a, config):
    base = g.weight_of
    if base is None:
        unknown = Verdict(Tri.UNKNOWN, False, 'unbounded domain without a weighted base')
        return unknown, unknown, unknown, unknown
    local = assess(base, a, a + 1.0, config)
    _, _, base_bochner, base_riemann = local
    has_limit = base.primitive is not None and base.primitive_growth is not None
    if has_limit:
        hk = Verdict(Tri.TRUE, True, 'parts integral against e^-t converges')
    else:
        hk = Verdict(Tri.UNKNOWN, False, 'no primitive growth bound')
    hl = Verdict(hk.value, hk.certified, hk.reason)
    if base_bochner.value is Tri.TRUE:
        bochner = Verdict(Tri.TRUE, base_bochner.certified, f"e^-t times a periodic norm-integrable base: {base_bochner.reason}")
    else:
        bochner = base_bochner
    if base_riemann.value is Tri.TRUE:
        riemann = Verdict(hk.value, hk.certified, f"improper: locally bounded, {hk.reason}")
    else:
        riemann = base_riemann
    return enforce_implications(hl, hk, bochner, riemann, bounded_domain=False)


def improper_integral(g, a, tol, config=None):
    """
    Integral of e^-t F'(t) over [a, inf) by parts: -e^-a F(a) plus the
    integral of e^-t F, cut where the growth bound A + B t makes the tail
    smaller than tol/4.
    """
    base = g.weight_of
    if base is None or base.primitive is None or base.primitive_growth is None:
        return None
    growth_a, growth_b = base.primitive_growth
    cut = max(a + 1.0, 1.0)
    while math.exp(-cut) * (growth_a + growth_b * (cut + 1.0)) > tol / 4:
        cut += 1.0

    def weighted(t):
        coords, _ = base.primitive(np.array([t]))
        return math.exp(-t) * np.asarray(coords, dtype=float)[0]

    body, quad_error = integrate.quad_vec(weighted, a, cut, epsabs=tol / 4, epsrel=0.0, limit=4000)
    start, start_error = base.primitive(np.array([a]))
    coords = np.asarray(body) - math.exp(-a) * np.asarray(start, dtype=float)[0]
    residual = float(quad_error) + float(start_error) * (1.0 + math.exp(-a)) + math.exp(-cut) * (
        growth_a + growth_b * (cut + 1.0)
    )
    return g.space.wrap(coords), residual


def integrate_regulated(g, a=None, b=None, mode='hl', tol=1e-3, budget=None, eps_levels=None, config=None):
    """
    Verdicts from `assess` plus the integral. On a bounded interval the
    integral is a partition integral down the eps schedule, and the primitive
    oracle only ever integrates strips. [a, inf) goes by parts against e^-t.
    """
    config = config or SolverConfig()
    a = g.start if a is None else float(a)
    b = g.end if b is None else float(b)
    hl, hk, bochner, riemann = assess(g, a, b, config)

    integral = residual = partition = None
    certified = False
    route = ''
    notes = {}
    if math.isinf(b):
        result = improper_integral(g, a, tol, config)
        if result is not None:
            integral, residual = result
            certified, route = True, 'improper by parts'
    else:
        result = _partition_route(g, a, b, tol, budget, eps_levels, config)
        if result is not None:
            partition, integral, residual = result
            certified = partition.certified and residual <= tol
            route = 'oscillation partition'
            notes = {
                'eps': partition.epsilon,
                'cells': len(partition.cells),
                'strips': len(partition.strips),
                'resolved_share': partition.resolved_length / (b - a) if b > a else 1.0,
            }
            if hl.value is Tri.UNKNOWN:
                hl = Verdict(Tri.TRUE, certified, f"step approximations converge (residual {residual:.3e})")
            hl, hk, bochner, riemann = enforce_implications(hl, hk, bochner, riemann, not math.isinf(b))

    verdict = IntegrabilityVerdict(
        hl, hk, bochner, riemann, integral, residual, certified, mode, route, notes, partition
    )
    logger.info(
        f"integrate {g.name or 'mapping'} on [{a}, {b}] [{mode}]: {verdict.for_mode().value.value} via {route or 'verdicts only'}"
    )
    return verdict


def epsilon_schedule(config, levels=None):
    eps = config.epsilon0
    for _ in range(levels or _EPS_LEVELS):
        yield eps
        eps /= 2


def _partition_route(g, a, b, tol, budget, eps_levels, config):
    """
    (partition, value, residual) at the first level whose residual is within
    tol. Past the first level, levels with eps (b - a) > tol / 2 are skipped.
    When a budget runs out, the last complete level is returned as it stands.
    """
    last = None
    for level, eps in enumerate(epsilon_schedule(config, eps_levels)):
        if level and eps * (b - a) > tol / 2:
            continue
        try:
            partition = build_partition(g, a, b, eps, budget, config)
        except (BudgetExceeded, NoProgress) as exc:
            logger.warning(f"Partition route stopped at eps={eps:g}: {exc}")
            return last
        value, residual = partition_integral(g, partition)
        last = partition, value, residual
        if residual <= tol:
            return last
    logger.warning(f"eps schedule exhausted before residual reached {tol:g}")
    return last


def oracle_primitive(g, a=None):
    """t -> (F(t) - F(a), error) from the mapping's primitive oracle"""
    a = g.start if a is None else float(a)

    def evaluate(t):
        coords, errors, tails = _primitive_at(g, np.array([a, float(t)]))
        return g.space.wrap(coords[1] - coords[0], float(np.sum(tails))), float(np.sum(errors))

    return evaluate


class RegulatedPrimitive:
    """
    CD primitive f with f(a) = 0 over an oscillation partition. At a knot f
    is the running sum of the cell integrals; inside a cell it adds g(beta+)
    times the distance to the knot, or the primitive oracle on a strip.
    """

    def __init__(self, g, partition):
        self.g = g
        self.partition = partition
        self.start = partition.start
        self.end = partition.end
        self.cells = CellIntegrals.over(g, partition)
        dim = g.space.dim
        self._coords = np.vstack([np.zeros((1, dim)), np.cumsum(self.cells.increments, axis=0)])
        self._tails = np.concatenate([[0.0], np.cumsum(self.cells.tail_increments)])
        self._residuals = np.concatenate([[0.0], np.cumsum(self.cells.residuals)])

    def at(self, ts):
        """(coordinates, untracked bounds, residuals) at every t in ts"""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if len(ts) and (ts.min() < self.start or ts.max() > self.end):
            raise ValueError(f"points outside [{self.start}, {self.end}]")
        count = len(self.cells.bounds)
        if not count:
            return np.zeros((len(ts), self.g.space.dim)), np.zeros(len(ts)), np.zeros(len(ts))
        knots = self.cells.knots
        k = np.clip(np.searchsorted(knots, ts, side='right') - 1, 0, count - 1)
        inside = ts - knots[k]
        coords = self._coords[k] + inside[:, None] * self.cells.values[k]
        tails = self._tails[k] + inside * self.cells.tails[k]
        with np.errstate(invalid='ignore'):
            residuals = self._residuals[k] + np.where(inside > 0.0, inside * self.cells.bounds[k], 0.0)
        strip = self.cells.by_primitive[k] & (inside > 0.0)
        if strip.any():
            upper, err_upper, tail_upper = _primitive_at(self.g, ts[strip])
            lower, err_lower, tail_lower = _primitive_at(self.g, knots[k[strip]])
            coords[strip] = self._coords[k[strip]] + upper - lower
            tails[strip] = self._tails[k[strip]] + tail_upper + tail_lower
            residuals[strip] = self._residuals[k[strip]] + err_upper + err_lower
        return coords, tails, residuals

    def coords(self, ts):
        return self.at(ts)[0]

    def evaluate(self, t):
        t = float(t)
        if not self.start <= t <= self.end:
            raise ValueError(f"{t!r} is outside [{self.start}, {self.end}]")
        coords, tails, residuals = self.at([t])
        return self.g.space.wrap(coords[0], float(tails[0])), float(residuals[0])

    def __call__(self, t):
        return self.evaluate(t)[0]

    def sample(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        coords, tails, residuals = self.at(ts)
        return [
            (float(t), self.g.space.wrap(c, float(tail)), float(r))
            for t, c, tail, r in zip(ts, coords, tails, residuals)
        ]


def cd_primitive(g, a=None, b=None, tol=1e-3, budget=None, eps_levels=None, config=None, partition=None):
    """
    CD primitive of g on [a, b] over `partition`, or over the first partition
    in the eps schedule with eps (b - a) <= tol / 2.
    """
    config = config or SolverConfig()
    a = g.start if a is None else float(a)
    b = g.end if b is None else float(b)
    hl, _, _, _ = assess(g, a, b, config)
    if hl.value is Tri.FALSE:
        raise NotLocallyIntegrable(hl.cutoff, hl.reason)
    if partition is not None:
        return RegulatedPrimitive(g, partition)
    for eps in epsilon_schedule(config, eps_levels):
        if eps * (b - a) <= tol / 2:
            return RegulatedPrimitive(g, build_partition(g, a, b, eps, budget, config))
    raise BudgetExceeded(f"eps schedule cannot reach tol={tol:g} on [{a}, {b}]")


@dataclass(frozen=True)
class DiscontinuitySample:
    points: np.ndarray
    jumps: np.ndarray

    def rows(self):
        jumps = set(self.jumps.tolist())
        for p in self.points:
            yield {'t': float(p), 'jump': p in jumps}


def _is_jump(g, t, scale=1e-3, tol=1e-9):
    right = g.right_values([t])[0]
    offsets = np.ldexp(scale, -np.arange(8, 8 + _RIGHT_LIMIT_LEVELS))
    ts = t - offsets
    ts = ts[ts < t]
    if not len(ts):
        return False
    left = g.values(ts)
    late = left[len(left) // 2:]
    gap = float(np.max(np.abs(late - right)))
    spread = float(np.max(np.ptp(late, axis=0)))
    return gap > tol and (spread > tol or gap > 10 * tol)


def discontinuities(g, a=None, b=None, n_max=3, budget=None, config=None):
    """Union of the knots of the 1/n partitions, n <= n_max, and the knots with a detected jump"""
    config = config or SolverConfig()
    a = g.start if a is None else float(a)
    b = g.end if b is None else float(b)

    def knots_at(n):
        try:
            return build_partition(g, a, b, 1.0 / n, budget, config).points
        except BudgetExceeded as exc:
            logger.warning(f"discontinuity scan at eps=1/{n} stopped early: {exc}")
            return exc.partial.points if exc.partial is not None else np.empty(0)

    with ThreadPoolExecutor(max_workers=max(1, config.threads)) as pool:
        sets = list(pool.map(knots_at, range(1, n_max + 1)))
    points = np.unique(np.concatenate(sets)) if sets else np.empty(0)
    interior = points[(points > a) & (points < b)]
    jumps = np.array([t for t in interior if _is_jump(g, t)], dtype=float)
    logger.info(f"discontinuities: {len(points)} knots, {len(jumps)} detected jumps")
    return DiscontinuitySample(points, jumps)
