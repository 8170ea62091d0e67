"""Chunked, optionally parallel, scenario runs and parameter sweeps.

Paths are processed in fixed-size chunks of consecutive path ids and the
chunk results are combined in chunk order, so outputs do not depend on the
number of worker processes.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .collateral import MarginingRule
from .config import RunConfig, SweepSpec
from .errors import ConfigError, NumericalError
from .pricer import (
    TERMS,
    AdjustmentReport,
    ProfileAccumulator,
    collateral_for,
    nested_exposures,
    path_contributions,
    special_cases,
    summarize,
)
from .simulation import simulate_paths

REHYP_CHOICES = ("both", "on", "off")


def rehyp_flags(choice: str | None, default: bool) -> tuple[bool, ...]:
    if choice is None:
        return (default,)
    if choice not in REHYP_CHOICES:
        raise ConfigError("rehyp", f"must be one of {REHYP_CHOICES}")
    return {"both": (True, False), "on": (True,), "off": (False,)}[choice]


@functools.lru_cache(maxsize=8)
def _model_for(cfg: RunConfig):
    return cfg.model()


def _chunks(n: int, size: int):
    return [(s, min(s + size, n)) for s in range(0, n, size)]


def _process_chunk(task):
    cfg, grid, lo, hi, rules, profile_rule = task
    model = _model_for(cfg)
    sim = cfg.simulation
    nested = sim.closeout == "nested"
    paths = simulate_paths(model, grid, sim.seed, np.arange(lo, hi), keep_states=nested)
    terms = []
    colls = {}
    for rule in rules:
        key = replace(rule, rehypothecation=True)
        if key not in colls:
            colls[key] = collateral_for(paths, rule)
        rec = cfg.recovery.effective(rule.rehypothecation)
        eps_I = eps_C = None
        if nested:
            eps_I, eps_C = nested_exposures(model, paths, rule, rec, sim.seed, sim.inner_paths)
        terms.append(path_contributions(paths, rule, rec, colls[key], eps_I, eps_C))
    profile = None
    if profile_rule is not None:
        key = replace(profile_rule, rehypothecation=True)
        coll = colls[key] if key in colls else collateral_for(paths, profile_rule)
        profile = ProfileAccumulator(grid)
        profile.add(paths.eps, coll.pre)
    return terms, profile, paths.clipped


def simulate_rules(cfg: RunConfig, grid, rules, *, workers: int = 1, profile_rule=None):
    """Run all chunks and evaluate every rule on the same paths.

    Returns (per-rule concatenated terms, merged profile accumulator or None,
    number of clipped intensity steps).
    """
    sim = cfg.simulation
    tasks = [(cfg, grid, lo, hi, tuple(rules), profile_rule) for lo, hi in _chunks(sim.paths, sim.chunk_size)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_process_chunk, tasks))
    else:
        results = [_process_chunk(t) for t in tasks]
    terms = [{k: np.concatenate([r[0][i][k] for r in results]) for k in TERMS} for i in range(len(rules))]
    profile = None
    if profile_rule is not None:
        profile = ProfileAccumulator(grid)
        for _, p, _ in results:
            profile.n += p.n
            for c in profile.sums:
                profile.sums[c] += p.sums[c]
                profile.sumsq[c] += p.sumsq[c]
            profile._eps.extend(p._eps)
    clipped = sum(r[2] for r in results)
    return terms, profile, clipped


def _report(cfg: RunConfig, rule: MarginingRule, terms) -> AdjustmentReport:
    sim = cfg.simulation
    rec = cfg.recovery.effective(rule.rehypothecation)
    cases = special_cases(rule, rec, cfg.investor_default_free(), sim.closeout)
    rep = summarize(terms, cfg.swap.notional, sim.closeout, rule.rehypothecation, cases)
    for e in (rep.bccva, rep.ccva, rep.cdva):
        if not math.isfinite(e.value):
            raise NumericalError("non-finite estimate")
    return rep


@dataclass
class RunResult:
    config: RunConfig
    fixed_rate: float
    grid: np.ndarray
    reports: list[AdjustmentReport]
    profiles: dict | None
    clipped: int

    def to_dict(self) -> dict:
        return {
            "swap": {
                "direction": self.config.swap.direction,
                "notional": self.config.swap.notional,
                "maturity": self.config.swap.maturity,
                "fixed_rate": self.fixed_rate,
            },
            "margining": {
                "mode": self.config.margining.mode,
                "interval": self.config.margining.interval,
            },
            "n_paths": self.config.simulation.paths,
            "seed": self.config.simulation.seed,
            "grid_nodes": len(self.grid),
            "clipped_intensity_steps": self.clipped,
            "results": [r.to_dict() for r in self.reports],
        }


def run(cfg: RunConfig, *, workers: int = 1, rehyp: str | None = None, profiles: bool = True) -> RunResult:
    """Price the configured scenario."""
    flags = rehyp_flags(rehyp, cfg.margining.rehypothecation)
    rules = [replace(cfg.margining, rehypothecation=f) for f in flags]
    grid = cfg.grid()
    model = _model_for(cfg)
    terms, prof, clipped = simulate_rules(
        cfg, grid, rules, workers=workers, profile_rule=cfg.margining if profiles else None
    )
    reports = [_report(cfg, r, t) for r, t in zip(rules, terms)]
    return RunResult(cfg, model.swap.fixed_rate, grid, reports, prof.result() if prof else None, clipped)


@dataclass
class ResultRow:
    parameter: str
    value: float
    rehypothecation: bool
    bccva_bp: float
    bccva_se_bp: float
    ccva_bp: float
    ccva_se_bp: float
    cdva_bp: float
    cdva_se_bp: float
    mismatch_bp: float
    mismatch_se_bp: float
    n_paths: int

    @classmethod
    def from_report(cls, parameter, value, rep: AdjustmentReport) -> "ResultRow":
        b = rep.bccva.bp(rep.notional)
        c = rep.ccva.bp(rep.notional)
        d = rep.cdva.bp(rep.notional)
        m = rep.mismatch.bp(rep.notional)
        return cls(parameter, float(value), rep.rehypothecation, *b, *c, *d, *m, rep.n_paths)


ROW_FIELDS = tuple(ResultRow.__dataclass_fields__)


@dataclass
class GridResult:
    sweep: SweepSpec
    rows: list[ResultRow]
    reports: dict = field(default_factory=dict, repr=False)  # (value, rehyp) -> AdjustmentReport

    def report(self, value: float, rehypothecation: bool) -> AdjustmentReport:
        return self.reports[(float(value), bool(rehypothecation))]


def run_grid(cfg: RunConfig, sweep: SweepSpec, *, rehyp: str | None = "both", workers: int = 1) -> GridResult:
    """Evaluate the scenario on every sweep value with common random numbers.

    Margining-interval sweeps share one set of paths on the union of all
    margin dates; other parameters re-simulate with the same seed and path
    ids. Failing cells raise with their coordinates attached.
    """
    flags = rehyp_flags(rehyp, cfg.margining.rehypothecation)
    out = GridResult(sweep, [])

    def cell_error(value, exc):
        where = f"sweep cell {sweep.parameter}={value}"
        if isinstance(exc, ConfigError):
            return ConfigError(where, str(exc))
        return NumericalError(f"{where}: {exc}")

    if sweep.parameter == "delta":
        rules, keys = [], []
        for v in sweep.values:
            try:
                base = cfg.with_sweep_value("delta", v).margining
            except ConfigError as exc:
                raise cell_error(v, exc) from None
            for f in flags:
                rules.append(replace(base, rehypothecation=f))
                keys.append((float(v), f))
        grid = cfg.grid(extra_intervals=sweep.values)
        terms, _, _ = simulate_rules(cfg, grid, rules, workers=workers)
        for (v, f), rule, t in zip(keys, rules, terms):
            rep = _report(cfg, rule, t)
            out.reports[(v, f)] = rep
            out.rows.append(ResultRow.from_report("delta", v, rep))
        return out

    for v in sweep.values:
        try:
            cell = cfg.with_sweep_value(sweep.parameter, v)
            rules = [replace(cell.margining, rehypothecation=f) for f in flags]
            terms, _, _ = simulate_rules(cell, cell.grid(), rules, workers=workers)
            reps = [_report(cell, r, t) for r, t in zip(rules, terms)]
        except (ConfigError, NumericalError, FloatingPointError) as exc:
            raise cell_error(v, exc) from None
        for f, rep in zip(flags, reps):
            out.reports[(float(v), f)] = rep
            out.rows.append(ResultRow.from_report(sweep.parameter, v, rep))
    return out
