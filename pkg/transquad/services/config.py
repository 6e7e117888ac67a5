"""Solver defaults, gathered from django settings."""
from dataclasses import dataclass, field, replace

from django.conf import settings


def _setting(name):
    return field(default_factory=lambda: getattr(settings, name))


@dataclass(frozen=True)
class SolverConfig:
    threads: int = _setting('TRANSQUAD_THREADS')
    depth: int = _setting('TRANSQUAD_DEPTH')
    prefix_length: int = _setting('TRANSQUAD_PREFIX_LENGTH')
    cauchy_window: int = _setting('TRANSQUAD_CAUCHY_WINDOW')
    layer_budget: int = _setting('TRANSQUAD_LAYER_BUDGET')
    blowup: float = _setting('TRANSQUAD_BLOWUP')
    osc_samples: int = _setting('TRANSQUAD_OSC_SAMPLES')
    osc_rounds: int = _setting('TRANSQUAD_OSC_ROUNDS')
    epsilon0: float = _setting('TRANSQUAD_EPSILON0')
    grid_per_unit: int = _setting('TRANSQUAD_GRID_PER_UNIT')
    block_budget: int = _setting('TRANSQUAD_BLOCK_BUDGET')
    cell_budget: int = _setting('TRANSQUAD_CELL_BUDGET')
    series_terms: int = _setting('TRANSQUAD_SERIES_TERMS')
    seed: int = _setting('TRANSQUAD_SEED')

    def but(self, **changes):
        """Copy with some fields replaced"""
        return replace(self, **changes)
