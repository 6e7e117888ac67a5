"""
Step mappings with well-ordered steps.

g(t) = z_alpha on [alpha, S(alpha)). Every integrability question about g is a
question about the weighted family ((S(alpha) - alpha) z_alpha) over the steps
below b: HL and HK integrability are its summability, Bochner integrability its
absolute summability, and Riemann integrability on a bounded interval the
boundedness of (z_alpha).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .config import SolverConfig
from .exceptions import NotConvergent, NotLocallySummable, ToleranceUnachievable
from .ordinal_core import ArithmeticLayer, DyadicLayer, HarmonicLayer
from .spaces import Tri, VectorValue
from .transfinite_sum import (
    Family,
    TransfiniteSummer,
    Verdict,
    _cutoff_repr,
    classify,
    total,
)

logger = logging.getLogger(__name__)

MODES = ('hl', 'hk', 'bochner', 'riemann')


@dataclass(frozen=True)
class StepMapping:
    """
    `weighted_remainder(prefix, n)` may bound the tail of the weighted family
    directly, for families whose steps are unbounded. `weighted_terms` gives
    (S(alpha) - alpha) z_alpha in one piece where widths underflow before the
    steps overflow.
    """

    steps: Family
    terminal: Optional[VectorValue] = None
    weighted_remainder: Optional[Callable] = None
    weighted_abs_remainder: Optional[Callable] = None
    weighted_terms: Optional[Callable] = None
    name: str = ''

    @property
    def index(self):
        return self.steps.index

    @property
    def space(self):
        return self.steps.space

    @property
    def start(self):
        return self.index.minimum

    @property
    def end(self):
        return self.index.sup_value

    @property
    def bound(self):
        return self.steps.bound

    def __call__(self, t):
        index = self.index
        if index.contains_sup and t == self.end:
            return self.steps.value(index.last)
        if t == self.end and self.terminal is not None:
            return self.terminal
        return self.steps.value(index.locate(t))

    def values(self, ts):
        return np.array([self(float(t)).coords for t in np.atleast_1d(ts)])

    def knots(self, per_layer, upper=None):
        return self.index.knots(per_layer, upper)

    def scaled(self, c, other=None):
        """c * self + other over the same steps"""
        steps = self.steps

        def terms(prefix, ns):
            out = c * np.asarray(steps.terms(prefix, ns), dtype=float)
            if other is not None:
                out = out + np.asarray(other.steps.terms(prefix, ns), dtype=float)
            return out

        bound = None
        if steps.bound is not None and (other is None or other.bound is not None):
            bound = abs(c) * steps.bound + (other.bound if other is not None else 0.0)
        return StepMapping(replace(steps, terms=terms, remainder_bound=None, abs_remainder_bound=None, bound=bound))


@dataclass(frozen=True)
class ReflectedStep:
    """h(t) = g(a + b - t) on (a, b] and h(a) = 0, for a step mapping g on [a, b)"""

    base: StepMapping
    name: str = ''

    @property
    def space(self):
        return self.base.space

    @property
    def start(self):
        return self.base.start

    @property
    def end(self):
        return self.base.end

    def __call__(self, t):
        if t == self.start:
            return self.space.zero()
        return self.base(self.start + self.end - t)

    def values(self, ts):
        return np.array([self(float(t)).coords for t in np.atleast_1d(ts)])


def _decreasing_widths(layer):
    return isinstance(layer, (DyadicLayer, HarmonicLayer))


def weighted_family(g):
    """alpha -> (S(alpha) - alpha) z_alpha over the steps below b"""
    index = g.index
    if index.contains_sup:
        index = index.restrict_below(index.last)
    steps = g.steps
    depth = index.depth

    def terms(prefix, ns):
        if g.weighted_terms is not None:
            return np.asarray(g.weighted_terms(prefix, ns), dtype=float).reshape(len(ns), -1)
        widths = index.widths(prefix, ns)
        return widths[:, None] * np.asarray(steps.terms(prefix, ns), dtype=float).reshape(len(ns), -1)

    tails = None
    if steps.tails is not None:
        def tails(prefix, ns):
            return index.widths(prefix, ns) * np.asarray(steps.tails(prefix, ns), dtype=float)

    def remainder(prefix, n):
        if g.weighted_remainder is not None:
            return g.weighted_remainder(prefix, n)
        layer = index.layers[len(prefix)]
        if len(prefix) == depth - 1 and steps.remainder_bound is not None:
            rest = steps.remainder_bound(prefix, n)
            width = float(index.widths(prefix, [n])[0])
            if rest is not None and isinstance(layer, ArithmeticLayer):
                return width * rest
            if rest is not None and _decreasing_widths(layer):
                # Abel summation: nonincreasing weights cost at most a factor 2
                return 2.0 * width * rest
        return _length_bound(prefix, n)

    def abs_remainder(prefix, n):
        if g.weighted_abs_remainder is not None:
            return g.weighted_abs_remainder(prefix, n)
        return _length_bound(prefix, n)

    def _length_bound(prefix, n):
        if steps.bound is None:
            return None
        left, right = index.interval(prefix)
        rest = right - index.positions(prefix, [n])[0]
        return steps.bound * rest if math.isfinite(rest) else None

    return Family(
        index=index,
        terms=terms,
        space=steps.space,
        tails=tails,
        remainder_bound=remainder,
        abs_remainder_bound=abs_remainder,
        nonnegative=steps.nonnegative,
        name=f"weighted {g.name or steps.name}".strip(),
    )


@dataclass(frozen=True)
class IntegrabilityVerdict:
    hl: Verdict
    hk: Verdict
    bochner: Verdict
    riemann: Verdict
    integral: Optional[VectorValue] = None
    residual: Optional[float] = None
    certified: bool = False
    mode: str = 'hl'
    route: str = ''
    notes: dict = field(default_factory=dict)
    partition: Optional[object] = field(default=None, repr=False, compare=False)

    def for_mode(self, mode=None):
        return getattr(self, mode or self.mode)

    @property
    def inconclusive(self):
        return self.for_mode().value is Tri.UNKNOWN

    @property
    def cutoffs(self):
        return {mode: getattr(self, mode).cutoff for mode in MODES}

    def to_dict(self):
        return {
            'mode': self.mode,
            'route': self.route,
            'verdicts': {mode: getattr(self, mode).to_dict() for mode in MODES},
            'cutoffs': {mode: _cutoff_repr(c) for mode, c in self.cutoffs.items()},
            'integral': None if self.integral is None else self.integral.to_dict(),
            'residual': self.residual,
            'certified': self.certified,
            'notes': dict(self.notes),
        }


def enforce_implications(hl, hk, bochner, riemann, bounded_domain=True):
    """bochner => hl => hk, and riemann => hk on bounded domains"""
    if bochner.value is Tri.TRUE and hl.value is not Tri.TRUE:
        hl = Verdict(Tri.TRUE, bochner.certified, f"Bochner integrable: {bochner.reason}")
    if hl.value is Tri.TRUE and hk.value is not Tri.TRUE:
        hk = Verdict(Tri.TRUE, hl.certified, f"HL integrable: {hl.reason}")
    if bounded_domain and riemann.value is Tri.TRUE and hk.value is not Tri.TRUE:
        hk = Verdict(Tri.TRUE, riemann.certified, f"Riemann integrable: {riemann.reason}")
    if hk.value is Tri.FALSE:
        if hl.value is not Tri.FALSE:
            hl = Verdict(Tri.FALSE, hk.certified, f"not HK integrable: {hk.reason}", hk.cutoff)
        if bounded_domain and riemann.value is not Tri.FALSE:
            riemann = Verdict(Tri.FALSE, hk.certified, f"not HK integrable: {hk.reason}", hk.cutoff)
    if hl.value is Tri.FALSE and bochner.value is not Tri.FALSE:
        bochner = Verdict(Tri.FALSE, hl.certified, f"not HL integrable: {hl.reason}", hl.cutoff)
    return hl, hk, bochner, riemann


def integrate_step(g, mode='hl', tol=1e-6, budget=None, config=None):
    config = config or SolverConfig()
    budget = budget or config.layer_budget
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    weighted = weighted_family(g)
    report = classify(weighted, budget, tol, config)

    hl = hk = report.summable
    bochner = report.absolute
    bounded_domain = math.isfinite(g.end)
    steps = g.steps.restricted(g.index.last) if g.index.contains_sup else g.steps
    z_bounded = classify(steps, budget, tol, config).bounded
    if bounded_domain:
        riemann = z_bounded
    elif z_bounded.value is Tri.FALSE:
        riemann = z_bounded
    else:
        # improper Riemann: locally bounded steps and a limit of the primitive
        riemann = Verdict(hk.value, hk.certified, f"improper: {hk.reason}", hk.cutoff)
    hl, hk, bochner, riemann = enforce_implications(hl, hk, bochner, riemann, bounded_domain)

    integral = residual = None
    certified = False
    if hk.value is Tri.TRUE:
        try:
            result = total(weighted, tol, config)
            integral, residual, certified = result.value, result.residual, result.certified
        except (NotConvergent, ToleranceUnachievable) as exc:
            logger.warning(f"Falling back to the classification total: {exc}")
            integral, residual = report.total, report.residual
    logger.info(f"integrate_step {g.name or 'step mapping'} [{mode}]: {hl.value.value}")
    return IntegrabilityVerdict(hl, hk, bochner, riemann, integral, residual, certified, mode, 'weighted family')


class PrimitiveTrace:
    """
    f(t) = sigma(gamma) + (t - gamma) z_gamma on [gamma, S(gamma)), where sigma
    is the partial sum of the weighted family.
    """

    def __init__(self, mapping, tol=1e-6, config=None, per_layer=32):
        self.mapping = mapping
        self.tol = tol
        self.config = config or SolverConfig()
        self.per_layer = per_layer
        self.weighted = weighted_family(mapping)
        self.summer = TransfiniteSummer(self.weighted, self.config)
        self._table = None

    @property
    def start(self):
        return self.mapping.start

    @property
    def end(self):
        return self.mapping.end

    @property
    def knots(self):
        if self._table is None:
            self._table = self.summer.table(self.per_layer, self.tol)
        return self._table

    def _sigma(self, gamma):
        try:
            return self.summer.partial_sum(gamma, self.tol)
        except (NotConvergent, ToleranceUnachievable) as exc:
            raise NotLocallySummable(exc.cutoff, str(exc)) from exc

    def evaluate(self, t):
        """(f(t), residual)"""
        index = self.weighted.index
        t = float(t)
        if t < self.start or t > self.end:
            raise ValueError(f"{t!r} is outside [{self.start}, {self.end}]")
        if t == self.start:
            return self.mapping.space.zero(), 0.0
        if t >= index.sup_value:
            result = self._sigma(index.sup_address)
            return result.value, result.residual
        beta = index.locate(t)
        result = self._sigma(beta)
        slope = self.mapping.steps.value(beta)
        return result.value + (t - index.embed(beta)) * slope, result.residual

    def __call__(self, t):
        return self.evaluate(t)[0]

    def sample(self, ts):
        """Rows (t, coords, residual) over a grid"""
        rows = []
        for t in np.atleast_1d(ts):
            value, residual = self.evaluate(float(t))
            rows.append((float(t), value, residual))
        return rows


def primitive(g, tol=1e-6, config=None):
    return PrimitiveTrace(g, tol, config)


def integrate_between(g, c, d, tol=1e-6, config=None):
    """f(d) - f(c) with the combined residual"""
    trace = PrimitiveTrace(g, tol / 2, config)
    upper, r_upper = trace.evaluate(d)
    lower, r_lower = trace.evaluate(c)
    return upper - lower, r_upper + r_lower


def improper_limit(g, tol=1e-6, config=None):
    """lim f(c) as c -> b-, or None when the weighted family has no certified sum"""
    weighted = weighted_family(g)
    try:
        result = total(weighted, tol, config)
    except (NotConvergent, ToleranceUnachievable) as exc:
        logger.info(f"No improper limit for {g.name or 'step mapping'}: {exc}")
        return None
    if not result.certified:
        logger.info(f"No improper limit for {g.name or 'step mapping'}: only the Cauchy window settled")
        return None
    return result


def integrate_reflected(h, mode='hl', tol=1e-6, budget=None, config=None):
    """Verdicts and integral of h through t -> a + b - t, which maps it onto its base"""
    verdict = integrate_step(h.base, mode, tol, budget, config)
    return replace(verdict, route='reflection')
