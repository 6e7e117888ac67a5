"""
Gauges, delta-fine tagged partitions and Riemann-sum defects.

A tagged cell (u, v, xi) is delta-fine when [u, v] lies inside
(xi - delta(xi), xi + delta(xi)). For a primitive f of g the HL defect of a
partition is the sum of ||f(v) - f(u) - g(xi)(v - u)|| over its cells, the HK
defect the norm of the same sum.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .config import SolverConfig
from .exceptions import DepthExceeded

logger = logging.getLogger(__name__)

MAX_DEPTH = 64
DELTA_FLOOR = 1e-12


@dataclass(frozen=True)
class Gauge:
    delta: Callable
    start: float
    end: float
    anchors: tuple = ()
    name: str = ''

    def __call__(self, t):
        d = float(self.delta(float(t)))
        if not d > 0:
            raise ValueError(f"gauge is not positive at {t!r}: {d!r}")
        return d


@dataclass(frozen=True)
class TaggedCell:
    left: float
    right: float
    tag: float

    def is_fine(self, gauge):
        d = gauge(self.tag)
        return self.left <= self.tag <= self.right and self.tag - d < self.left and self.right < self.tag + d


@dataclass(frozen=True)
class TaggedPartition:
    cells: tuple

    @property
    def points(self):
        return np.array([c.left for c in self.cells] + [self.cells[-1].right], dtype=float)

    @property
    def tags(self):
        return np.array([c.tag for c in self.cells], dtype=float)

    def __len__(self):
        return len(self.cells)

    def violations(self, gauge):
        """Cells failing the fineness inclusion, or breaking the tiling"""
        bad = [c for c in self.cells if not c.is_fine(gauge)]
        for prev, nxt in zip(self.cells, self.cells[1:]):
            if prev.right != nxt.left:
                bad.append(nxt)
        return bad

    def is_fine(self, gauge):
        return (
            self.cells[0].left == gauge.start
            and self.cells[-1].right == gauge.end
            and not self.violations(gauge)
        )


def uniform_gauge(a, b, width):
    return Gauge(lambda t: width, float(a), float(b), name=f"constant {width:g}")


def canonical_gauge(g, scale, eps_target=1e-4, floor=DELTA_FLOOR, per_layer=64):
    """
    Gauge for a step mapping with finitely many knots below the horizon:
    half the distance to the nearest knot off the knots, and
    scale * eps_target / (2 * jump * m) at a knot with jump norm `jump`.
    """
    knots = g.knots(per_layer)
    if not len(knots) or knots[-1] < g.end:
        knots = np.append(knots, g.end)
    m = len(knots)
    right = np.array([g(float(k)).coords for k in knots])
    left = np.vstack([right[:1], right[:-1]])
    jumps = np.max(np.abs(right - left), axis=1)
    jumps[0] = 0.0
    at_knot = {
        float(k): max(scale * eps_target / (2.0 * (j if j > 0 else 1.0) * m), floor)
        for k, j in zip(knots, jumps)
    }

    def delta(t):
        if t in at_knot:
            return at_knot[t]
        k = np.searchsorted(knots, t)
        dist = min(abs(t - knots[max(k - 1, 0)]), abs(knots[min(k, m - 1)] - t))
        return max(dist / 2.0, floor)

    return Gauge(delta, float(g.start), float(g.end), tuple(float(k) for k in knots), f"canonical s={scale:g}")


def _fine_tag(gauge, u, v, anchors):
    candidates = [p for p in anchors if u <= p <= v] + [u, v, 0.5 * (u + v)]
    for xi in candidates:
        d = gauge(xi)
        if xi - d < u and v < xi + d:
            return xi
    return None


def cousin_partition(gauge, a=None, b=None, max_depth=MAX_DEPTH):
    """
    Delta-fine tagged partition of [a, b] by bisection: an interval is a cell
    as soon as one candidate tag covers it; otherwise it is split at an
    interior anchor, or at its midpoint when it holds none.
    """
    a = gauge.start if a is None else float(a)
    b = gauge.end if b is None else float(b)
    if not a < b or not np.isfinite(b - a):
        raise ValueError(f"cousin_partition needs a bounded interval, got [{a}, {b}]")
    anchors = np.array(sorted(gauge.anchors), dtype=float)
    cells = []
    stack = [(a, b, 0)]
    while stack:
        u, v, depth = stack.pop()
        inside = anchors[(anchors >= u) & (anchors <= v)]
        tag = _fine_tag(gauge, u, v, inside)
        if tag is not None:
            cells.append(TaggedCell(u, v, tag))
            continue
        if depth >= max_depth:
            raise DepthExceeded(depth, (u, v))
        interior = inside[(inside > u) & (inside < v)]
        split = float(interior[len(interior) // 2]) if len(interior) else 0.5 * (u + v)
        if not u < split < v:
            raise DepthExceeded(depth, (u, v))
        stack.append((split, v, depth + 1))
        stack.append((u, split, depth + 1))
    logger.debug(f"cousin partition for {gauge.name or 'gauge'}: {len(cells)} cells")
    return TaggedPartition(tuple(cells))


class Defect(NamedTuple):
    hl: float
    hk: float
    residual: float = 0.0


def _primitive_value(f, t):
    value = f(t)
    return value if isinstance(value, tuple) else (value, 0.0)


def hl_riemann_defect(g, f, partition):
    """
    (HL defect, HK defect, residual) of the partition for the pair (g, f).
    The residual bounds how far either defect can move with the residuals
    of f at the cell ends.
    """
    values = {t: _primitive_value(f, float(t)) for t in partition.points}
    total = None
    hl = residual = 0.0
    for cell in partition.cells:
        (right, r_right), (left, r_left) = values[cell.right], values[cell.left]
        term = right - left - (cell.right - cell.left) * g(cell.tag)
        hl += term.norm().hi
        residual += r_right + r_left
        total = term if total is None else total + term
    hk = total.norm().hi if total is not None else 0.0
    return Defect(hl, hk, residual)


def defect_table(g, f, scales, eps_target=1e-4, config=None, gauge_factory=None):
    """Rows (scale, cells, hl_defect, hk_defect, residual, fine) for canonical gauges at the given scales"""
    config = config or SolverConfig()
    gauge_factory = gauge_factory or (lambda s: canonical_gauge(g, s, eps_target))

    def row(scale):
        gauge = gauge_factory(scale)
        partition = cousin_partition(gauge)
        defect = hl_riemann_defect(g, f, partition)
        return {
            'scale': scale,
            'cells': len(partition),
            'hl_defect': defect.hl,
            'hk_defect': defect.hk,
            'residual': defect.residual,
            'fine': partition.is_fine(gauge),
        }

    with ThreadPoolExecutor(max_workers=max(1, config.threads)) as pool:
        rows = list(pool.map(row, scales))
    for r in rows:
        logger.info(f"gauge scale {r['scale']:g}: {r['cells']} cells, HL defect {r['hl_defect']:.3e}")
    return rows
