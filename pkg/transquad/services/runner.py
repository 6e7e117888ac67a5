"""
One run of a subcommand: load the input, call the services, assemble the
report and write it. `run` returns the exit code: 0 for a definite result, 2
when budgets ran out or a verdict stayed inconclusive. Input errors raise
TransquadError subclasses, which the commands turn into exit code 1.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import reports, specs
from .config import SolverConfig
from .exceptions import (
    BudgetExceeded,
    DepthExceeded,
    MaxIterExceeded,
    NoProgress,
    NotConvergent,
    NotLocallyIntegrable,
    NotLocallySummable,
    SpecError,
    ToleranceUnachievable,
)
from .gauge import canonical_gauge, defect_table
from .impulsive import extremal_solutions, fixed_data_solution, jump_check
from .regulated import build_partition, cd_primitive, integrate_regulated
from .spaces import Tri
from .step_integral import MODES, PrimitiveTrace, ReflectedStep, integrate_reflected, integrate_step
from .transfinite_sum import classify, partial_sum_table, total

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('sum', 'integrate_step', 'integrate', 'gauge_check', 'impulsive_solve')

# horizon used to sample primitives of mappings on [a, inf)
_IMPROPER_SPAN = 8.0


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    source: str
    params: dict = field(default_factory=dict)
    tol: float = 1e-6
    budget: Optional[int] = None
    eps_levels: Optional[int] = None
    max_iter: int = 200
    mode: str = 'hl'
    interval: Optional[tuple] = None
    grid: int = 33
    per_layer: int = 16
    scales: tuple = (4, 6, 8)
    eps: Optional[float] = None
    seed: Optional[int] = None
    output: Optional[str] = None
    csv: Optional[str] = None
    format: str = 'json'

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise SpecError(f"Unknown subcommand '{self.subcommand}'")
        if not self.tol > 0:
            raise SpecError("tolerance must be positive")
        for name in ('budget', 'eps_levels', 'max_iter'):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise SpecError(f"{name} must be at least 1")
        if self.mode not in MODES:
            raise SpecError(f"mode must be one of {', '.join(MODES)}")

    def settings(self):
        return {
            'tol': self.tol,
            'budget': self.budget,
            'eps_levels': self.eps_levels,
            'max_iter': self.max_iter,
            'mode': self.mode,
            'interval': list(self.interval) if self.interval else None,
            'grid': self.grid,
            'params': dict(self.params),
            'seed': self.seed,
        }


def _coords(value):
    return [float(c) for c in value.coords]


def _conformance(expected, verdicts):
    """Expected 'true'/'false' against the computed tri-states; None when nothing is expected"""
    checked = {k: v for k, v in expected.items() if k in verdicts}
    if not checked:
        return None
    return all(verdicts[k] in (want, Tri.UNKNOWN.value) for k, want in checked.items())


class Runner:
    def __init__(self, run_config, solver_config=None):
        self.run_config = run_config
        config = solver_config or SolverConfig()
        if run_config.seed is not None:
            config = config.but(seed=run_config.seed)
        self.config = config

    def load(self, expect):
        loaded = specs.load(self.run_config.source, self.run_config.params, self.config)
        if loaded.kind not in expect:
            raise SpecError(f"{self.run_config.subcommand} needs a {' or '.join(expect)}, got a {loaded.kind}")
        return loaded

    def execute(self):
        rc = self.run_config
        report = reports.Report(rc.subcommand, rc.source, settings=rc.settings())
        getattr(self, f'_{rc.subcommand}')(report)
        logger.info(f"{rc.subcommand} on {rc.source}: {report.status}")
        return report

    # sum

    def _sum(self, report):
        rc = self.run_config
        loaded = self.load(('family',))
        family = loaded.obj
        summary = classify(family, rc.budget or self.config.layer_budget, rc.tol, self.config)
        results = summary.to_dict()
        if summary.summable.value is Tri.TRUE:
            try:
                result = total(family, rc.tol, self.config)
                results.update(total=result.value, residual=result.residual, certified=result.certified)
            except (NotConvergent, ToleranceUnachievable) as exc:
                report.mark_inconclusive(f"total not reached within tol={rc.tol:g}: {exc}")
        if loaded.exact is not None:
            results['exact'] = loaded.exact
        results['expected'] = dict(loaded.expected)
        results['conforms'] = _conformance(
            loaded.expected,
            {
                'summable': summary.summable.value.value,
                'absolute': summary.absolute.value.value,
                'bounded': summary.bounded.value.value,
            },
        )
        report.results = results
        if summary.inconclusive:
            report.mark_inconclusive('classification left a verdict inconclusive')

        table = reports.Table('partial_sums', ('address', 'position', 'coords', 'tail_bound', 'status', 'residual'))
        try:
            table.rows = list(partial_sum_table(family, rc.per_layer, rc.tol, self.config).rows(family.index))
        except (NotConvergent, ToleranceUnachievable) as exc:
            report.messages.append(f"partial-sum table stopped: {exc}")
        report.add_table(table)

    # integrate_step

    def _integrate_step(self, report):
        rc = self.run_config
        loaded = self.load(('step', 'reflected'))
        g = loaded.obj
        if isinstance(g, ReflectedStep):
            verdict = integrate_reflected(g, rc.mode, rc.tol, rc.budget, self.config)
        else:
            verdict = integrate_step(g, rc.mode, rc.tol, rc.budget, self.config)
        self._verdict_results(report, verdict, loaded)
        if verdict.hk.value is not Tri.FALSE:
            report.add_table(self._step_primitive_table(g, report))

    def _step_primitive_table(self, g, report):
        rc = self.run_config
        table = reports.Table('primitive', ('t', 'coords', 'residual'))
        base = g.base if isinstance(g, ReflectedStep) else g
        trace = PrimitiveTrace(base, rc.tol, self.config)
        start, end = g.start, g.end
        stop = end if math.isfinite(end) else start + _IMPROPER_SPAN
        total_value = None
        for t in np.linspace(start, stop, rc.grid):
            try:
                if isinstance(g, ReflectedStep):
                    # F_h(t) = f(b) - f(a + b - t)
                    if total_value is None:
                        total_value = trace.evaluate(end)
                    lower, residual = trace.evaluate(start + end - t)
                    value, residual = total_value[0] - lower, residual + total_value[1]
                else:
                    value, residual = trace.evaluate(t)
            except (NotLocallySummable, NotConvergent, ToleranceUnachievable) as exc:
                report.messages.append(f"primitive table stopped at t={t:g}: {exc}")
                break
            table.rows.append({'t': float(t), 'coords': _coords(value), 'residual': residual})
        return table

    def _verdict_results(self, report, verdict, loaded):
        results = verdict.to_dict()
        if loaded.exact is not None:
            results['exact'] = loaded.exact
        results['expected'] = dict(loaded.expected)
        results['conforms'] = _conformance(
            loaded.expected, {mode: verdict.for_mode(mode).value.value for mode in MODES}
        )
        if results['conforms'] is False:
            logger.warning(f"{loaded.source}: verdicts {results['verdicts']} contradict {loaded.expected}")
        report.results = results
        if verdict.inconclusive:
            report.mark_inconclusive(f"{verdict.mode} verdict is inconclusive")

    # integrate

    def _interval(self, g):
        if self.run_config.interval is None:
            return g.start, g.end
        a, b = self.run_config.interval
        return float(a), float(b)

    def _integrate(self, report):
        rc = self.run_config
        loaded = self.load(('mapping',))
        g = loaded.obj
        a, b = self._interval(g)
        verdict = integrate_regulated(g, a, b, rc.mode, rc.tol, rc.budget, rc.eps_levels, self.config)
        self._verdict_results(report, verdict, loaded)
        report.results['interval'] = [a, b]
        if verdict.integral is None or not verdict.certified:
            report.mark_inconclusive(f"no integral within tol={rc.tol:g} (residual {verdict.residual})")

        if rc.eps is not None and math.isfinite(b):
            try:
                partition = build_partition(g, a, b, rc.eps, rc.budget, self.config)
            except BudgetExceeded as exc:
                partition = exc.partial
                report.mark_inconclusive(f"partition at eps={rc.eps:g}: {exc}")
            table = reports.Table('partition', ('cell', 'left', 'right', 'osc_bound', 'resolved', 'certified'))
            table.rows = list(partition.rows()) if partition is not None else []
            report.add_table(table)

        if verdict.hl.value is not Tri.FALSE and math.isfinite(b):
            table = reports.Table('primitive', ('t', 'coords', 'residual'))
            try:
                primitive = cd_primitive(
                    g, a, b, rc.tol, rc.budget, rc.eps_levels, self.config, partition=verdict.partition
                )
                for t, value, residual in primitive.sample(np.linspace(a, b, rc.grid)):
                    table.rows.append({'t': t, 'coords': _coords(value), 'residual': residual})
            except (NotLocallyIntegrable, BudgetExceeded, NoProgress) as exc:
                report.messages.append(f"no primitive table: {exc}")
            report.add_table(table)

    # gauge_check

    def _gauge_check(self, report):
        rc = self.run_config
        loaded = self.load(('step',))
        g = loaded.obj
        if not g.index.is_finite:
            raise SpecError("gauge_check needs a step mapping with finitely many knots")
        trace = PrimitiveTrace(g, rc.tol, self.config)
        scales = [2.0 ** -k for k in rc.scales]
        eps_target = self.config.epsilon0 * 1e-4
        try:
            rows = defect_table(
                g, trace.evaluate, scales, eps_target, self.config,
                gauge_factory=lambda s: canonical_gauge(g, s, eps_target),
            )
        except DepthExceeded as exc:
            report.mark_inconclusive(str(exc))
            return
        hl = [r['hl_defect'] for r in rows]
        monotone = all(later <= earlier for earlier, later in zip(hl, hl[1:]))
        dominated = all(r['hk_defect'] <= r['hl_defect'] * (1 + 1e-12) for r in rows)
        fine = all(r['fine'] for r in rows)
        report.results = {'monotone': monotone, 'hk_below_hl': dominated, 'all_fine': fine, 'scales': scales}
        if not (monotone and dominated and fine):
            report.mark_inconclusive('defects are not monotone or a partition is not fine')
        table = reports.Table('defects', ('scale', 'cells', 'hl_defect', 'hk_defect', 'residual', 'fine'))
        table.rows = rows
        report.add_table(table)

    # impulsive_solve

    def _impulsive_solve(self, report):
        rc = self.run_config
        loaded = self.load(('problem',))
        problem = loaded.obj
        if problem.coupling is None and not problem.state_impulses:
            self._fixed_solution(report, problem, loaded)
            return
        table = reports.Table('trajectory', ('t', 'coords', 'residual', 'chain'))
        try:
            solutions = extremal_solutions(problem, rc.tol, rc.max_iter, self.config)
        except MaxIterExceeded as exc:
            report.results = {'iterations': exc.iterations, 'gap': exc.gap}
            report.mark_inconclusive(str(exc))
            for trajectory in exc.last_pair or ():
                if trajectory is not None:
                    table.rows.extend(trajectory.rows())
            report.add_table(table)
            return
        report.results = solutions.to_dict()
        table.rows = list(solutions.rows())
        report.add_table(table)

    def _fixed_solution(self, report, problem, loaded):
        rc = self.run_config
        z = problem.impulse_bounds[0]
        u = fixed_data_solution(problem.source, z, rc.tol, self.config, problem.start, problem.end)
        table = reports.Table('trajectory', ('t', 'coords', 'residual', 'chain'))
        stop = problem.end if math.isfinite(problem.end) else problem.start + _IMPROPER_SPAN
        for t in np.linspace(problem.start, stop, rc.grid):
            value, residual = u.evaluate(float(t))
            table.rows.append({'t': float(t), 'coords': _coords(value), 'residual': residual, 'chain': 'fixed'})
        jumps = []
        for cursor in problem.impulses.traverse(rc.per_layer):
            if cursor.value >= stop:
                break
            jumps.append({'lambda': cursor.value, 'jump': _coords(jump_check(u, cursor.value))})
        report.results = {'jumps': jumps}
        if loaded.exact is not None:
            report.results['exact_total_jump'] = loaded.exact
        report.add_table(table)


def run(run_config, solver_config=None):
    """Execute, write the outputs, and return (exit code, report)"""
    report = Runner(run_config, solver_config).execute()
    if run_config.output:
        if run_config.format == 'csv' and report.main_table() is not None:
            reports.write_csv(report.main_table(), run_config.output)
        else:
            reports.write_json(report, run_config.output)
    if run_config.csv and report.main_table() is not None:
        reports.write_csv(report.main_table(), run_config.csv)
    return report.exit_code, report
