"""
Impulsive problems u' = f(t, u) a.e., u(lambda+) - u(lambda) = D(lambda, u)
over a well-ordered impulse set.

Fixed data is solved through the representation
u(t) = sum of z(lambda) over lambda < t plus the integral of g from a to t.
Problems with a monotone right-hand side are solved by iterating
G u(t) = sum_{lambda < t} D(lambda, u) + integral_a^t f(s, u(s)) ds
from the two envelopes w- and w+, on a grid that holds every impulse time
inside the horizon.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import SolverConfig
from .exceptions import (
    AddressAtSup,
    MaxIterExceeded,
    MonotonicityViolation,
    NotConvergent,
    NotLocallySummable,
    ToleranceUnachievable,
)
from .ordinal_core import WellOrderedSet
from .regulated import (
    RegulatedMapping,
    build_partition,
    cd_primitive,
    oracle_primitive,
    sampled_right_limit,
    step_approximation,
)
from .spaces import SpaceKind
from .step_integral import PrimitiveTrace, StepMapping
from .transfinite_sum import TransfiniteSummer

logger = logging.getLogger(__name__)

_HORIZON = 64


@dataclass(frozen=True)
class ImpulsiveProblem:
    """
    f(t, u) = source(t) + coupling(t, u(t)) and D(lambda, u) = impulse(address, u(lambda)).

    `coupling(ts, us)` maps arrays (m,) and (m, dim) to (m, dim) and is
    declared increasing in u; `coupling_bounds` are constant vectors with
    lower <= coupling <= upper. `impulse_bounds` are families over the
    impulse set with z- <= D <= z+. `state_impulses` says D reads u.
    """

    start: float
    end: float
    space: SpaceKind
    impulses: WellOrderedSet
    impulse: Callable
    impulse_bounds: tuple
    source: Optional[RegulatedMapping] = None
    coupling: Optional[Callable] = None
    coupling_bounds: tuple = (None, None)
    increasing: bool = True
    state_impulses: bool = False
    name: str = ''

    def coupling_values(self, ts, us):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.coupling is None:
            return np.zeros((len(ts), self.space.dim))
        return np.asarray(self.coupling(ts, np.asarray(us, dtype=float).reshape(len(ts), -1)), dtype=float)

    def rhs(self, ts, us):
        """f(t, u) on arrays"""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        base = self.source.values(ts) if self.source is not None else np.zeros((len(ts), self.space.dim))
        return base + self.coupling_values(ts, us)


def source_primitive(problem, tol=1e-4, config=None):
    """
    ts -> rows of the source integrated from the start: the source's own
    primitive oracle when it has one, a CD primitive over an oscillation
    partition otherwise.
    """
    dim = problem.space.dim
    source = problem.source
    if source is None:
        return lambda ts: np.zeros((len(np.atleast_1d(ts)), dim))
    if source.primitive is None:
        logger.info(f"source {source.name or 'mapping'} has no primitive oracle, integrating it to {tol:g}")
        return cd_primitive(source, problem.start, problem.end, tol, config=config).coords

    origin, _ = source.primitive(np.array([problem.start]))
    origin = np.asarray(origin, dtype=float).reshape(dim)

    def rows(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        coords, _ = source.primitive(ts)
        return np.asarray(coords, dtype=float).reshape(len(ts), dim) - origin

    return rows


class ImpulseGrid:
    """Impulse times inside the horizon plus a uniform background grid"""

    def __init__(self, problem, per_unit, horizon=_HORIZON):
        start, end = problem.start, problem.end
        knots, addresses = [], []
        for cursor in problem.impulses.traverse(horizon):
            if cursor.value >= end:
                break
            if cursor.value < start or (knots and cursor.value <= knots[-1]):
                continue
            knots.append(cursor.value)
            addresses.append(cursor.current)
        count = max(1, int(math.ceil((end - start) * per_unit)))
        background = start + (end - start) * np.arange(count + 1) / count
        self.times = np.unique(np.concatenate([background, np.asarray(knots, dtype=float)]))
        self.impulse_rows = np.searchsorted(self.times, knots)
        self.addresses = addresses
        self.steps = np.diff(self.times)
        logger.debug(f"impulse grid: {len(self.times)} points, {len(knots)} impulse times")

    def __len__(self):
        return len(self.times)


class GridTrajectory:
    """
    u on [a, c], left continuous at impulse times. Between grid points the
    source enters through `source` (see `source_primitive`) and the coupling
    integral through a trapezoid with a predicted end value. `residuals` are
    the pointwise fixed-point residuals on the grid.
    """

    def __init__(self, problem, grid, values, jumps, c_plus, source, chain='', residuals=None):
        self.problem = problem
        self.grid = grid
        self.values_on_grid = values
        self.jumps = jumps
        self.c_plus = c_plus
        self.source = source
        self.chain = chain
        self.residuals = np.zeros(len(grid)) if residuals is None else residuals
        self._source = source(grid.times)

    @property
    def space(self):
        return self.problem.space

    @property
    def times(self):
        return self.grid.times

    def _coords(self, t):
        times = self.grid.times
        if not times[0] <= t <= times[-1]:
            raise ValueError(f"{t!r} is outside [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side='right')) - 1
        if times[k] == t:
            return self.values_on_grid[k]
        base = self.values_on_grid[k] + self.jumps[k]
        tau = t - times[k]
        source = self.source([t])[0] - self._source[k]
        predicted = base + source + tau * self.c_plus[k]
        c_t = self.problem.coupling_values([t], predicted[None, :])[0]
        return base + source + 0.5 * tau * (self.c_plus[k] + c_t)

    def values(self, ts):
        return np.array([self._coords(float(t)) for t in np.atleast_1d(ts)])

    def tails(self, ts):
        return np.zeros(len(np.atleast_1d(ts)))

    def __call__(self, t):
        return self.space.wrap(self._coords(float(t)))

    def right_limit(self, t):
        times = self.grid.times
        k = int(np.searchsorted(times, t, side='right')) - 1
        if times[k] == t:
            return self.space.wrap(self.values_on_grid[k] + self.jumps[k])
        return self(t)

    def rows(self):
        for t, coords, residual in zip(self.grid.times, self.values_on_grid, self.residuals):
            yield {
                't': float(t),
                'coords': [float(c) for c in coords],
                'residual': float(residual),
                'chain': self.chain,
            }


def _staircase_address(index, t):
    """Least address gamma with embed(gamma) >= t, so that Lambda^{<gamma} = Lambda^{<t}"""
    if t > index.sup_value or (t == index.sup_value and not index.contains_sup):
        return None
    beta = index.locate(t)
    if index.embed(beta) == t:
        return beta
    try:
        return index.successor(beta)
    except AddressAtSup:
        return None


class RepresentationTrajectory:
    """
    u(t) = sum_{lambda < t} z(lambda) + F(t) for fixed data, with F a
    primitive evaluator returning (value, residual).
    """

    def __init__(self, primitive, z, space, start, end, tol=1e-6, config=None, accuracy=0.0, name=''):
        self.primitive = primitive
        self.z = z
        self.space = space
        self.start = start
        self.end = end
        self.tol = tol
        self.config = config or SolverConfig()
        self.accuracy = accuracy
        self.name = name
        self._summer = TransfiniteSummer(z, self.config) if z is not None else None

    def staircase(self, t):
        if self._summer is None:
            return self.space.zero(), 0.0
        index = self.z.index
        if t <= index.minimum:
            return self.space.zero(), 0.0
        gamma = _staircase_address(index, t)
        try:
            if gamma is None:
                result = self._summer.partial_sum(index.sup_address, self.tol / 2)
                if index.contains_sup and index.sup_value < t:
                    return result.value + self.z.value(index.last), result.residual
                return result.value, result.residual
            result = self._summer.partial_sum(gamma, self.tol / 2)
        except (NotConvergent, ToleranceUnachievable) as exc:
            raise NotLocallySummable(exc.cutoff, str(exc)) from exc
        return result.value, result.residual

    def evaluate(self, t):
        """(u(t), residual)"""
        t = float(t)
        jumps, r_jumps = self.staircase(t)
        if self.primitive is None:
            return jumps, r_jumps
        value, r_value = self.primitive(t)
        return jumps + value, r_jumps + r_value + self.accuracy * (t - self.start)

    def __call__(self, t):
        return self.evaluate(t)[0]

    def values(self, ts):
        return np.array([self(float(t)).coords for t in np.atleast_1d(ts)])

    def tails(self, ts):
        return np.array([self(float(t)).tail for t in np.atleast_1d(ts)])


def _primitive_evaluator(g, tol, config):
    if g is None:
        return None, None
    if isinstance(g, StepMapping):
        trace = PrimitiveTrace(g, tol / 2, config)
        return trace.evaluate, g.space
    if g.primitive is not None:
        return oracle_primitive(g), g.space
    primitive = cd_primitive(g, g.start, g.end, tol / 2, config=config)
    return primitive.evaluate, g.space


def fixed_data_solution(g, z, tol=1e-6, config=None, start=None, end=None):
    config = config or SolverConfig()
    evaluator, space = _primitive_evaluator(g, tol, config)
    space = space or z.space
    start = g.start if g is not None else (z.index.minimum if start is None else start)
    end = g.end if g is not None else (z.index.sup_value if end is None else end)
    return RepresentationTrajectory(evaluator, z, space, start, end, tol, config, name='fixed data')


def solve_fixed(g, z, t, tol=1e-6, config=None):
    """(u(t), residual) for u' = g a.e. with jumps z; g may be None for pure impulses"""
    return fixed_data_solution(g, z, tol, config).evaluate(t)


def epsilon_solution(g, z, b=None, eps=0.1, config=None, budget=None):
    """
    u_eps(t) = sum_{lambda < t} z(lambda) + f_eps(t), f_eps the primitive of the
    step approximation g_eps; uniformly within eps (b - a) of the solution on
    resolved cells, strips add their own oscillation bound.
    """
    config = config or SolverConfig()
    b = g.end if b is None else float(b)
    partition = build_partition(g, g.start, b, eps, budget, config)
    trace = PrimitiveTrace(step_approximation(g, partition), 1e-9, config)
    strips = partition.strips

    def primitive(t):
        value, residual = trace.evaluate(t)
        for strip in strips:
            if strip.left < t:
                residual += strip.bound * (min(t, strip.right) - strip.left)
        return value, residual

    logger.info(f"eps-solution at eps={eps:g}: {len(partition.cells)} cells, accuracy {eps * (b - g.start):.3e}")
    return RepresentationTrajectory(
        primitive, z, g.space, g.start, b, 1e-9, config, accuracy=eps, name=f"eps={eps:g}"
    )


def jump_check(u, lam, tol=1e-9):
    """u(lambda+) - u(lambda) from sampled right values"""
    times = getattr(u, 'times', None)
    h0 = None
    if times is not None:
        k = int(np.searchsorted(times, lam, side='right'))
        if k < len(times):
            h0 = float(times[k] - lam)
    elif getattr(u, 'z', None) is not None:
        index = u.z.index
        try:
            h0 = index.embed(index.successor(index.locate(lam))) - lam
        except (AddressAtSup, ValueError):
            h0 = None
    right, _ = sampled_right_limit(u, float(lam), tol, h0=h0)
    return u.space.wrap(right) - u(lam)


# Monotone iteration


@dataclass(frozen=True)
class ChainResult:
    trajectory: GridTrajectory
    iterations: int
    history: tuple
    residual: float
    iterates: tuple = ()


@dataclass(frozen=True)
class ExtremalSolutions:
    lower: GridTrajectory
    upper: GridTrajectory
    iterations: tuple
    gap: float
    residual: float
    history: dict
    iterates: dict = field(default_factory=dict)

    def rows(self):
        yield from self.lower.rows()
        yield from self.upper.rows()

    def to_dict(self):
        return {
            'iterations': {'ascending': self.iterations[0], 'descending': self.iterations[1]},
            'gap': self.gap,
            'residual': self.residual,
            'history': {k: list(v) for k, v in self.history.items()},
        }


class MonotoneIteration:
    """
    Picard map G on the grid, its envelopes and the two monotone chains. The
    source is integrated once, to tol / 2.
    """

    def __init__(self, problem, config=None, horizon=_HORIZON, tol=1e-4):
        self.problem = problem
        self.config = config or SolverConfig()
        self.grid = ImpulseGrid(problem, self.config.grid_per_unit, horizon)
        self.dim = problem.space.dim
        self.source = source_primitive(problem, tol / 2, self.config)
        self.source_steps = np.diff(self.source(self.grid.times), axis=0)
        z_minus, z_plus = problem.impulse_bounds
        self.z_minus = self._impulse_table(lambda addr, u: z_minus.value(addr).coords)
        self.z_plus = self._impulse_table(lambda addr, u: z_plus.value(addr).coords)

    def _impulse_table(self, fn, values=None):
        table = np.zeros((len(self.grid), self.dim))
        for row, addr in zip(self.grid.impulse_rows, self.grid.addresses):
            u = values[row] if values is not None else None
            table[row] = fn(addr, u)
        return table

    def _accumulate(self, jumps, c_plus, c_minus):
        h = self.grid.steps[:, None]
        increments = jumps[:-1] + self.source_steps + 0.5 * h * (c_plus[:-1] + c_minus[1:])
        values = np.zeros((len(self.grid), self.dim))
        np.cumsum(increments, axis=0, out=values[1:])
        return values

    def envelope(self, which):
        lower, upper = self.problem.coupling_bounds
        bound = lower if which == 'lower' else upper
        jumps = self.z_minus if which == 'lower' else self.z_plus
        c = np.broadcast_to(np.asarray(bound if bound is not None else 0.0, dtype=float), (len(self.grid), self.dim))
        values = self._accumulate(jumps, c, c)
        return values, jumps, np.array(c)

    def apply(self, values):
        """(G u, jumps, c_plus) for grid values of u"""
        times = self.grid.times
        jumps = self._impulse_table(self.problem.impulse, values)
        c_minus = self.problem.coupling_values(times, values)
        c_plus = c_minus.copy()
        rows = self.grid.impulse_rows
        if len(rows):
            c_plus[rows] = self.problem.coupling_values(times[rows], values[rows] + jumps[rows])
        return self._accumulate(jumps, c_plus, c_minus), jumps, c_plus

    def chain(self, direction, tol, max_iter, keep_iterates=False):
        """
        Iterate G from w- (ascending) or w+ (descending) until a step is within
        tol / 2. A step against the direction beyond rounding is a
        MonotonicityViolation. With `keep_iterates` every iterate is kept,
        the envelope first.
        """
        start = 'lower' if direction == 'ascending' else 'upper'
        current, jumps, c_plus = self.envelope(start)
        history = []
        iterates = [current] if keep_iterates else []
        slack = 1e-12 * (1.0 + float(np.max(np.abs(current))))
        for k in range(1, max_iter + 1):
            nxt, nxt_jumps, nxt_c = self.apply(current)
            step = nxt - current
            excess = float(np.max(-step)) if direction == 'ascending' else float(np.max(step))
            if excess > slack:
                raise MonotonicityViolation(direction, k, excess)
            gap = float(np.max(np.abs(step)))
            history.append(gap)
            logger.debug(f"{direction} iteration {k}: step {gap:.3e}")
            current, jumps, c_plus = nxt, nxt_jumps, nxt_c
            if keep_iterates:
                iterates.append(current)
            if gap <= tol / 2:
                pointwise = self._fixed_point_residual(current)
                trajectory = GridTrajectory(
                    self.problem, self.grid, current, jumps, c_plus, self.source, direction, pointwise
                )
                return ChainResult(trajectory, k, tuple(history), float(np.max(pointwise)), tuple(iterates))
        raise MaxIterExceeded(max_iter, history[-1] if history else math.inf, current)

    def _fixed_point_residual(self, values):
        """sup-norm of G u - u at every grid point"""
        image, _, _ = self.apply(values)
        return np.max(np.abs(image - values), axis=1)


def extremal_solutions(problem, tol=1e-4, max_iter=200, config=None, horizon=_HORIZON, keep_iterates=False):
    """
    Smallest and greatest grid solutions by monotone iteration from w- and
    w+. The two chains run concurrently.
    """
    config = config or SolverConfig()
    if not problem.increasing:
        raise MonotonicityViolation('declaration', 0, math.inf)
    iteration = MonotoneIteration(problem, config, horizon, tol)
    with ThreadPoolExecutor(max_workers=max(1, min(2, config.threads))) as pool:
        futures = {
            d: pool.submit(iteration.chain, d, tol, max_iter, keep_iterates) for d in ('ascending', 'descending')
        }
        try:
            results = {d: f.result() for d, f in futures.items()}
        except MaxIterExceeded as exc:
            lower, upper = (futures[d] for d in ('ascending', 'descending'))
            pair = tuple(f.result().trajectory if f.done() and not f.exception() else None for f in (lower, upper))
            raise MaxIterExceeded(exc.iterations, exc.gap, pair) from exc

    lower, upper = results['ascending'], results['descending']
    difference = lower.trajectory.values_on_grid - upper.trajectory.values_on_grid
    slack = 1e-9 * (1.0 + float(np.max(np.abs(upper.trajectory.values_on_grid))))
    excess = float(np.max(difference))
    if excess > slack + tol:
        raise MonotonicityViolation('bracket', max(lower.iterations, upper.iterations), excess)
    gap = float(np.max(np.abs(difference)))
    residual = max(lower.residual, upper.residual)
    logger.info(
        f"extremal solutions of {problem.name or 'problem'}: {lower.iterations}/{upper.iterations} iterations, "
        f"bracket gap {gap:.3e}, residual {residual:.3e}"
    )
    return ExtremalSolutions(
        lower.trajectory,
        upper.trajectory,
        (lower.iterations, upper.iterations),
        gap,
        residual,
        {'ascending': lower.history, 'descending': upper.history},
        {'ascending': lower.iterates, 'descending': upper.iterates},
    )


def derivative_defects(problem, u, ts, h=1e-6):
    """sup-norm of (u(t+h) - u(t-h)) / 2h - f(t, u(t)) at each t"""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    ahead = u.values(ts + h)
    behind = u.values(ts - h)
    here = u.values(ts)
    slopes = (ahead - behind) / (2.0 * h)
    return np.max(np.abs(slopes - problem.rhs(ts, here)), axis=1)
