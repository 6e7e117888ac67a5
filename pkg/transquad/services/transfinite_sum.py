"""
Partial sums and sums of families indexed by well-ordered sets.

sigma(min) = 0, sigma(S(beta)) = sigma(beta) + x_beta, and at a limit position
sigma is the limit of the partial sums below it. Limits are taken block by
block: the total of a block is the limit of the running sums of its children,
accepted when the family's remainder bound certifies it or, failing that, when
a Cauchy window of K steps stays inside tol/2 (uncertified).
"""
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .config import SolverConfig
from .exceptions import AddressAtSup, NotConvergent, ToleranceUnachievable
from .ordinal_core import OrdinalAddress, WellOrderedSet
from .spaces import SpaceKind, Tri, VectorValue

logger = logging.getLogger(__name__)

_CHUNK_START = 64
_CHUNK_MAX = 65536
_OUTER_WINDOW_MAX = 64


@dataclass(frozen=True)
class Family:
    """
    Values x_alpha over an index set.

    `terms(prefix, ns)` returns the coordinates of the children `ns` of the
    block `prefix` as an array of shape (len(ns), dim). `remainder_bound(prefix, n)`
    bounds the norm of the sum of children n, n+1, ... of that block, at any
    level of the tree.
    """

    index: WellOrderedSet
    terms: Callable
    space: SpaceKind = field(default_factory=lambda: SpaceKind('real'))
    tails: Optional[Callable] = None
    remainder_bound: Optional[Callable] = None
    abs_remainder_bound: Optional[Callable] = None
    bound: Optional[float] = None
    nonnegative: bool = False
    name: str = ''

    @classmethod
    def from_values(cls, index, values, space=None, **kwargs):
        """Family over a finite index set with explicit values"""
        space = space or SpaceKind('real')
        table = np.asarray(values, dtype=float).reshape(len(values), space.dim)
        return cls(index, lambda prefix, ns: table[np.asarray(ns, dtype=int)], space, **kwargs)

    def block(self, prefix, start, stop):
        ns = np.arange(start, stop)
        with np.errstate(over='ignore', invalid='ignore'):
            coords = np.asarray(self.terms(prefix, ns), dtype=float).reshape(len(ns), self.space.dim)
        if self.tails is not None:
            tails = np.asarray(self.tails(prefix, ns), dtype=float).reshape(len(ns))
        else:
            tails = np.zeros(len(ns))
        return coords, tails

    def value(self, address):
        full = address.full_form()
        coords, tails = self.block(full[:-1], full[-1], full[-1] + 1)
        return self.space.wrap(coords[0], float(tails[0]))

    def restricted(self, gamma):
        return replace(self, index=self.index.restrict_below(gamma))


@dataclass(frozen=True)
class BlockSum:
    coords: np.ndarray
    tail: float
    residual: float
    certified: bool
    terms: int


@dataclass(frozen=True)
class PartialSum:
    value: VectorValue
    residual: float
    certified: bool = True

    def __iter__(self):
        yield self.value
        yield self.residual


@dataclass(frozen=True)
class PartialSumEntry:
    address: OrdinalAddress
    value: VectorValue
    status: str
    residual: float


@dataclass(frozen=True)
class PartialSumTable:
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def rows(self, index):
        for entry in self.entries:
            yield {
                'address': str(entry.address),
                'position': index.embed(entry.address),
                'coords': [float(c) for c in entry.value.coords],
                'tail_bound': entry.value.tail,
                'status': entry.status,
                'residual': entry.residual,
            }


def _spread(rows):
    stacked = np.asarray(rows)
    return float(np.max(np.ptp(stacked, axis=0)))


def limit_of(prefix, depth):
    """Limit address closing the block `prefix`; the sup for the root block"""
    if not prefix:
        return OrdinalAddress.sup(depth)
    return OrdinalAddress.of(prefix, depth)


class TransfiniteSummer:
    """Block totals and partial sums of one family, cached per (block, tolerance)"""

    def __init__(self, family, config=None):
        self.family = family
        self.config = config or SolverConfig()
        self.index = family.index
        self._totals = {}

    def _wrap(self, coords, tail):
        return self.family.space.wrap(coords, tail)

    def _remainder(self, prefix, n):
        if self.family.remainder_bound is None:
            return None
        bound = self.family.remainder_bound(prefix, n)
        return None if bound is None else float(bound)

    def block_total(self, prefix, tol):
        key = (prefix, tol)
        if key not in self._totals:
            if len(prefix) == self.index.depth - 1:
                self._totals[key] = self._innermost_total(prefix, tol)
            else:
                self._totals[key] = self._outer_total(prefix, tol)
        return self._totals[key]

    def _innermost_total(self, prefix, tol):
        family, cfg = self.family, self.config
        layer = self.index.layers[len(prefix)]
        if layer.count is not None:
            coords, tails = family.block(prefix, 0, layer.count)
            return BlockSum(np.cumsum(coords, axis=0)[-1], float(tails.sum()), 0.0, True, layer.count)

        cutoff = limit_of(prefix, self.index.depth)
        window = deque(maxlen=cfg.cauchy_window + 1)
        acc = np.zeros(family.space.dim)
        tail = 0.0
        bound = None
        n, chunk = 0, _CHUNK_START
        while n < cfg.layer_budget:
            stop = min(n + chunk, cfg.layer_budget)
            coords, tails = family.block(prefix, n, stop)
            with np.errstate(over='ignore', invalid='ignore'):
                partials = acc + np.cumsum(coords, axis=0)
                peak = np.max(np.abs(partials))
            if not np.isfinite(peak) or peak > cfg.blowup:
                raise NotConvergent(
                    f"Partial sums of block {prefix} passed {cfg.blowup:g}",
                    cutoff=cutoff,
                    partial=self._wrap(acc, tail),
                )
            acc = partials[-1]
            tail += float(tails.sum())
            window.extend(partials[-(cfg.cauchy_window + 1):])
            n = stop
            bound = self._remainder(prefix, n)
            if bound is not None:
                if bound <= tol / 2:
                    return BlockSum(acc, tail, bound, True, n)
            elif len(window) > cfg.cauchy_window:
                spread = _spread(window)
                if spread < tol / 2:
                    return BlockSum(acc, tail, spread, False, n)
            chunk = min(2 * chunk, _CHUNK_MAX)

        if bound is not None:
            raise ToleranceUnachievable(
                f"Remainder bound {bound:.3e} of block {prefix} still above tol/2 after {n} terms",
                bound=bound,
                cutoff=cutoff,
            )
        raise NotConvergent(
            f"Cauchy window of block {prefix} did not settle within {n} terms",
            cutoff=cutoff,
            partial=self._wrap(acc, tail),
        )

    def _outer_total(self, prefix, tol):
        family, cfg = self.family, self.config
        cutoff = limit_of(prefix, self.index.depth)
        window = deque(maxlen=cfg.cauchy_window + 1)
        acc = np.zeros(family.space.dim)
        tail = residual = 0.0
        certified = True
        bound = None
        n = 0
        while n < cfg.layer_budget:
            # child j gets tol * 2^-(j+2), so all children together stay under tol/2
            child = self.block_total(prefix + (n,), tol * 2.0 ** -(n + 2))
            acc = acc + child.coords
            tail += child.tail
            residual += child.residual
            certified = certified and child.certified
            n += 1
            if np.max(np.abs(acc)) > cfg.blowup:
                raise NotConvergent(
                    f"Block totals below {prefix} passed {cfg.blowup:g}",
                    cutoff=cutoff,
                    partial=self._wrap(acc, tail),
                )
            window.append(acc.copy())
            bound = self._remainder(prefix, n)
            if bound is not None:
                if bound <= tol / 2:
                    return BlockSum(acc, tail, residual + bound, certified, n)
            elif len(window) > cfg.cauchy_window:
                spread = _spread(window)
                if spread < tol / 2:
                    return BlockSum(acc, tail, residual + spread, False, n)

        if bound is not None:
            raise ToleranceUnachievable(
                f"Remainder bound {bound:.3e} of block {prefix} still above tol/2", bound=bound, cutoff=cutoff
            )
        raise NotConvergent(f"Block totals below {prefix} did not settle", cutoff=cutoff)

    def partial_sum(self, gamma, tol):
        index = self.index
        dim = self.family.space.dim
        if gamma.is_sup and index.bound is not None:
            gamma = index.bound
        if gamma.is_sup:
            total = self.block_total((), tol)
            return PartialSum(self._wrap(total.coords, total.tail), total.residual, total.certified)
        if gamma == index.first():
            return PartialSum(self.family.space.zero(), 0.0)

        full = gamma.full_form()
        outer_blocks = [full[:level] + (j,) for level in range(index.depth - 1) for j in range(full[level])]
        share = tol / max(len(outer_blocks), 1)
        acc = np.zeros(dim)
        tail = residual = 0.0
        certified = True
        for prefix in outer_blocks:
            block = self.block_total(prefix, share)
            acc = acc + block.coords
            tail += block.tail
            residual += block.residual
            certified = certified and block.certified
        count = full[-1]
        if count:
            coords, tails = self.family.block(full[:-1], 0, count)
            # sequential accumulation keeps sigma(S(beta)) = sigma(beta) + x_beta exact
            acc = np.cumsum(np.vstack([acc, coords]), axis=0)[-1]
            tail += float(tails.sum())
        return PartialSum(self._wrap(acc, tail), residual, certified)

    def table(self, per_layer, tol):
        """Partial sums at every position of the horizon-truncated walk"""
        entries = []
        previous = None
        for cursor in self.index.traverse(per_layer):
            beta = cursor.current
            if previous is not None and self._is_successor(previous.address, beta):
                step = self.family.value(previous.address)
                value = self._wrap(previous.value.coords + step.coords, previous.value.tail + step.tail)
                entry = PartialSumEntry(beta, value, previous.status, previous.residual)
                entries.append(entry)
                previous = entry
                continue
            result = self.partial_sum(beta, tol)
            status = 'exact' if result.residual == 0.0 else 'limit-estimated'
            entry = PartialSumEntry(beta, result.value, status, result.residual)
            entries.append(entry)
            previous = entry
        return PartialSumTable(tuple(entries))

    def _is_successor(self, beta, gamma):
        try:
            return self.index.successor(beta) == gamma
        except AddressAtSup:
            return False


def partial_sum(family, gamma, tol, config=None):
    return TransfiniteSummer(family, config).partial_sum(gamma, tol)


def total(family, tol, config=None):
    """Sum of the family: sigma(b), plus x_b when b belongs to the index set"""
    summer = TransfiniteSummer(family, config)
    index = family.index
    if index.contains_sup:
        last = index.last
        head = summer.partial_sum(last, tol)
        step = family.value(last)
        coords = np.cumsum(np.vstack([head.value.coords, step.coords]), axis=0)[-1]
        return PartialSum(family.space.wrap(coords, head.value.tail + step.tail), head.residual, head.certified)
    return summer.partial_sum(index.sup_address, tol)


def partial_sum_table(family, per_layer, tol, config=None):
    return TransfiniteSummer(family, config).table(per_layer, tol)


# Classification


@dataclass(frozen=True)
class Verdict:
    value: Tri
    certified: bool = False
    reason: str = ''
    cutoff: Optional[OrdinalAddress] = None

    def to_dict(self):
        return {
            'value': self.value.value,
            'certified': self.certified,
            'reason': self.reason,
            'cutoff': _cutoff_repr(self.cutoff),
        }


def _cutoff_repr(cutoff):
    if cutoff is None:
        return None
    if isinstance(cutoff, OrdinalAddress):
        return {'address': cutoff.to_list(), 'sup': cutoff.is_sup}
    return float(cutoff)


@dataclass(frozen=True)
class SummabilityReport:
    summable: Verdict
    absolute: Verdict
    bounded: Verdict
    total: Optional[VectorValue] = None
    residual: Optional[float] = None

    @staticmethod
    def _word(verdict, yes, no):
        if verdict.value is Tri.TRUE:
            return yes if verdict.certified else f"{yes} (uncertified)"
        if verdict.value is Tri.FALSE:
            return no
        return 'inconclusive'

    @property
    def verdict(self):
        return self._word(self.summable, 'summable', 'not_summable')

    @property
    def absolute_verdict(self):
        return self._word(self.absolute, 'summable', 'not_summable')

    @property
    def bounded_verdict(self):
        return self._word(self.bounded, 'bounded', 'unbounded')

    @property
    def cutoffs(self):
        return {'c1': self.bounded.cutoff, 'c2': self.absolute.cutoff, 'c3': self.summable.cutoff}

    @property
    def inconclusive(self):
        return Tri.UNKNOWN in (self.summable.value, self.absolute.value, self.bounded.value)

    def to_dict(self):
        return {
            'verdict': self.verdict,
            'absolute_verdict': self.absolute_verdict,
            'bounded_verdict': self.bounded_verdict,
            'summable': self.summable.to_dict(),
            'absolute': self.absolute.to_dict(),
            'bounded': self.bounded.to_dict(),
            'total': None if self.total is None else self.total.to_dict(),
            'residual': self.residual,
        }


@dataclass(frozen=True)
class _Scan:
    coords: np.ndarray
    abs_total: float
    peak: float
    residual: float
    bounded: Verdict
    summable: Verdict
    absolute: Verdict


def _quarters(norms):
    m = len(norms)
    return [norms[k * m // 4:(k + 1) * m // 4] for k in range(4)]


def _terms_persist(norms, tol):
    """Terms that do not shrink over the window"""
    if len(norms) < 16:
        return False
    _, second, _, last = _quarters(norms)
    return last.mean() > tol and last.mean() >= 0.9 * second.mean()


def _grows(norms):
    if len(norms) < 16:
        return False
    means = [q.mean() for q in _quarters(norms)]
    return means[3] >= 1e3 * max(means[0], 1e-300) and means[1] < means[2] < means[3]


def _harmonic_floor(norms):
    """n * ||x_n|| stays away from zero: comparison with the harmonic series"""
    m = len(norms)
    if m < 16:
        return False
    weighted = norms * np.arange(1, m + 1)
    first, second = weighted[: m // 2], weighted[m // 2:]
    return second.min() > 0 and second.min() >= 0.5 * first.mean()


def _geometric(norms):
    late = norms[len(norms) // 2:]
    if not np.any(late):
        return True
    positive = late[late > 0]
    if len(positive) < 4 or len(positive) < len(late):
        return False
    return float(np.max(positive[1:] / positive[:-1])) <= 0.9


class _Classifier:
    def __init__(self, family, budget, tol, config):
        self.family = family
        self.budget = budget
        self.tol = tol
        self.config = config
        self.index = family.index
        depth = self.index.depth
        window = config.cauchy_window
        self.outer_window = max(2 * window + 2, min(_OUTER_WINDOW_MAX, round(budget ** (1.0 / depth))))

    def scan(self, prefix):
        if len(prefix) == self.index.depth - 1:
            return self._scan_innermost(prefix)
        return self._scan_outer(prefix)

    def _judge(self, prefix, vectors, norms, children_certified, finite=False, abs_norms=None):
        family, cfg, tol = self.family, self.config, self.tol
        cutoff = limit_of(prefix, self.index.depth)
        count = len(norms)
        if abs_norms is None:
            abs_norms = norms
        with np.errstate(over='ignore', invalid='ignore'):
            partials = np.cumsum(vectors, axis=0)
            abs_partials = np.cumsum(abs_norms)
        peak = float(np.max(norms)) if count else 0.0
        coords = partials[-1] if count else np.zeros(family.space.dim)
        abs_total = float(abs_partials[-1]) if count else 0.0

        # 1. boundedness of the terms
        if not np.isfinite(peak) or peak > cfg.blowup:
            bounded = Verdict(Tri.FALSE, True, f"term norm passed {cfg.blowup:g}", cutoff)
        elif _grows(norms):
            bounded = Verdict(Tri.FALSE, False, 'term norms grow steadily', cutoff)
        elif family.bound is not None:
            bounded = Verdict(Tri.TRUE, True, f"declared bound {family.bound:g}")
        else:
            bounded = Verdict(Tri.TRUE, finite, 'finite block' if finite else 'sampled window')

        if finite:
            done = Verdict(Tri.TRUE, True, 'finite block')
            return coords, abs_total, peak, 0.0, bounded, done, done

        # 2. summability
        residual = 0.0
        sums_peak = float(np.max(np.abs(partials))) if count else 0.0
        remainder = family.remainder_bound(prefix, count) if family.remainder_bound else None
        if not np.isfinite(sums_peak) or sums_peak > cfg.blowup:
            summable = Verdict(Tri.FALSE, True, f"partial sums passed {cfg.blowup:g}", cutoff)
        elif remainder is not None and remainder <= tol / 2:
            summable = Verdict(Tri.TRUE, children_certified, f"remainder bound {remainder:.3e}")
            residual = float(remainder)
        elif _terms_persist(norms, tol):
            summable = Verdict(Tri.FALSE, False, 'terms do not tend to zero', cutoff)
        else:
            spread = _spread(partials[-(cfg.cauchy_window + 1):]) if count > cfg.cauchy_window else np.inf
            if spread < tol / 2:
                summable = Verdict(Tri.TRUE, False, f"Cauchy window spread {spread:.3e}")
                residual = float(spread)
            else:
                summable = Verdict(Tri.UNKNOWN, False, 'Cauchy window did not settle')

        # 3. absolute summability
        abs_remainder = family.abs_remainder_bound(prefix, count) if family.abs_remainder_bound else None
        if family.nonnegative and abs_remainder is None:
            abs_remainder = remainder
        if abs_remainder is not None and abs_remainder <= tol / 2:
            absolute = Verdict(Tri.TRUE, children_certified, f"absolute remainder bound {abs_remainder:.3e}")
        elif not np.isfinite(abs_total) or abs_total > cfg.blowup:
            absolute = Verdict(Tri.FALSE, True, f"sum of norms passed {cfg.blowup:g}", cutoff)
        elif _terms_persist(abs_norms, tol):
            absolute = Verdict(Tri.FALSE, False, 'term norms do not tend to zero', cutoff)
        elif _harmonic_floor(abs_norms):
            absolute = Verdict(Tri.FALSE, False, 'norms dominate the harmonic series', cutoff)
        elif _geometric(abs_norms):
            absolute = Verdict(Tri.TRUE, False, 'ratio test on term norms')
        elif count > cfg.cauchy_window and _spread(abs_partials[-(cfg.cauchy_window + 1):, None]) < tol / 2:
            absolute = Verdict(Tri.TRUE, False, 'Cauchy window on sums of norms')
        else:
            absolute = Verdict(Tri.UNKNOWN, False, 'sums of norms did not settle')
        return coords, abs_total, peak, residual, bounded, summable, absolute

    def _scan_innermost(self, prefix):
        layer = self.index.layers[len(prefix)]
        finite = layer.count is not None
        count = layer.count if finite else self.budget
        vectors, tails = self.family.block(prefix, 0, count)
        with np.errstate(invalid='ignore'):
            norms = np.max(np.abs(vectors), axis=1) + tails
        return _Scan(*self._judge(prefix, vectors, norms, True, finite=finite))

    def _scan_outer(self, prefix):
        children = [self.scan(prefix + (j,)) for j in range(self.outer_window)]
        vectors = np.array([c.coords for c in children])
        abs_totals = np.array([c.abs_total for c in children])
        peaks = np.array([c.peak for c in children])
        certified = all(c.summable.certified for c in children)

        with np.errstate(invalid='ignore'):
            norms = np.max(np.abs(vectors), axis=1)
        coords, _, _, residual, bounded, summable, absolute = self._judge(
            prefix, vectors, norms, certified, abs_norms=abs_totals
        )
        # the bounded verdict of a limit block looks at the terms, not the block totals
        peak = float(np.max(peaks))
        if not np.isfinite(peak) or peak > self.config.blowup:
            bounded = Verdict(Tri.FALSE, True, f"term norm passed {self.config.blowup:g}", limit_of(prefix, self.index.depth))
        elif _grows(peaks):
            bounded = Verdict(Tri.FALSE, False, 'block suprema grow steadily', limit_of(prefix, self.index.depth))
        elif self.family.bound is not None:
            bounded = Verdict(Tri.TRUE, True, f"declared bound {self.family.bound:g}")
        else:
            bounded = Verdict(Tri.TRUE, False, 'sampled window')

        for child in children:
            if child.bounded.value is Tri.FALSE:
                bounded = child.bounded
                break
        for child in children:
            if child.summable.value is not Tri.TRUE:
                summable = child.summable
                break
        for child in children:
            if child.absolute.value is not Tri.TRUE:
                # a child that fails only on its signed sum says nothing about norms
                if child.absolute.value is Tri.FALSE or absolute.value is Tri.TRUE:
                    absolute = child.absolute
                break
        residual += sum(c.residual for c in children)
        return _Scan(coords, float(np.sum(abs_totals)), peak, residual, bounded, summable, absolute)


def _reconcile(bounded, summable, absolute):
    """absolute => summable => bounded"""
    if bounded.value is Tri.FALSE and summable.value is not Tri.FALSE:
        summable = Verdict(Tri.FALSE, bounded.certified, f"unbounded terms: {bounded.reason}", bounded.cutoff)
    if summable.value is Tri.FALSE and absolute.value is not Tri.FALSE:
        absolute = Verdict(Tri.FALSE, summable.certified, f"not summable: {summable.reason}", summable.cutoff)
    if absolute.value is Tri.TRUE and summable.value is Tri.UNKNOWN:
        summable = Verdict(Tri.TRUE, absolute.certified, f"absolutely summable: {absolute.reason}")
    if summable.value is Tri.TRUE and bounded.value is not Tri.TRUE:
        bounded = Verdict(Tri.TRUE, summable.certified, 'summable family')
    return bounded, summable, absolute


def classify(family, budget, tol, config=None):
    """
    Tri-state verdicts on boundedness, absolute summability and summability,
    with the cutoff address of the first failing limit block.
    """
    config = config or SolverConfig()
    if budget < 1 or tol <= 0:
        raise ValueError("budget and tol must be positive")
    scan = _Classifier(family, budget, tol, config).scan(())
    bounded, summable, absolute = _reconcile(scan.bounded, scan.summable, scan.absolute)
    logger.info(
        f"classify {family.name or 'family'}: bounded={bounded.value.value} "
        f"summable={summable.value.value} absolute={absolute.value.value}"
    )
    if summable.value is Tri.TRUE:
        total_value = family.space.wrap(scan.coords)
        return SummabilityReport(summable, absolute, bounded, total_value, scan.residual)
    return SummabilityReport(summable, absolute, bounded)
