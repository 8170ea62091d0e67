"""Joint path simulation: rates, intensities, default times and swap exposure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import path_engine as pe
from .cirpp import Cirpp
from .g2pp import G2pp
from .irs import SwapSpec, swap_exposure

GRID_TOL = 1e-9


def build_grid(horizon: float, base_step: float, event_dates=()) -> np.ndarray:
    """Simulation grid: event dates (payments, margin dates) plus a regular base step.

    Base-step nodes closer than 1e-9 to an event date are dropped in favour
    of the event date, so event dates appear exactly.
    """
    if not base_step > 0:
        raise ValueError("base step must be > 0")
    events = np.asarray(sorted({0.0, float(horizon), *map(float, event_dates)}))
    events = events[(events >= 0) & (events <= horizon + GRID_TOL)]
    n = int(np.ceil(horizon / base_step - 1e-9))
    base = np.arange(n + 1) * base_step
    base = base[base < horizon - GRID_TOL]
    keep = [b for b in base if np.min(np.abs(events - b)) > GRID_TOL]
    grid = np.union1d(events, keep)
    # merge near-duplicate events
    out = [grid[0]]
    for t in grid[1:]:
        if t - out[-1] > GRID_TOL:
            out.append(t)
    return np.array(out)


@dataclass
class Model:
    """Everything needed to simulate one scenario."""

    rates: G2pp
    cir_I: Cirpp
    cir_C: Cirpp
    corr_chol: np.ndarray
    rho_G: float
    swap: SwapSpec

    def __post_init__(self):
        if self.swap.fixed_rate is None:
            self.swap = self.swap.with_rate(self.rates.curve)


@dataclass
class PathSet:
    """Per-path quantities consumed by the pricer.

    ``idx_I``/``idx_C`` are the first grid nodes at or after each default
    time (``len(grid)`` if the name survives the grid).
    """

    grid: np.ndarray
    maturity: float
    eps: np.ndarray
    int_r: np.ndarray
    tau_I: np.ndarray
    tau_C: np.ndarray
    idx_I: np.ndarray
    idx_C: np.ndarray
    path_ids: np.ndarray | None = None
    x: np.ndarray | None = None
    z: np.ndarray | None = None
    y_I: np.ndarray | None = None
    y_C: np.ndarray | None = None
    cum_I: np.ndarray | None = None
    cum_C: np.ndarray | None = None
    flows: np.ndarray | None = None
    clipped: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.eps.shape[0]

    @property
    def discount(self) -> np.ndarray:
        return np.exp(-self.int_r)

    def default_info(self):
        """Flags, snapped index and discount factor at the first default."""
        T = self.maturity
        cpty = (self.tau_C <= self.tau_I) & (self.tau_C < T)
        inv = (self.tau_I < self.tau_C) & (self.tau_I < T)
        idx = np.where(cpty, self.idx_C, np.where(inv, self.idx_I, len(self.grid)))
        idx = np.minimum(idx, len(self.grid) - 1)
        rows = np.arange(self.n)
        disc = np.where(cpty | inv, np.exp(-self.int_r[rows, idx]), 0.0)
        return cpty, inv, idx, disc


def simulate_paths(model: Model, grid, seed: int, path_ids, *, stream: int = pe.BROWNIAN,
                   start=None, xi=None, keep_states: bool = True) -> PathSet:
    """Simulate ``path_ids`` on ``grid``.

    ``start`` optionally gives the state at ``grid[0]`` as a dict with keys
    ``x, z, y_I, y_C, fixing``. ``xi`` optionally supplies the exponential
    default triggers (xi_I, xi_C); by default they come from the copula stream.
    """
    grid = np.asarray(grid, dtype=float)
    path_ids = np.asarray(path_ids, dtype=np.int64)
    start = start or {}
    dZ, aux = pe.gen_increments(model.corr_chol, grid, seed, path_ids, stream)
    x, z, int_r = model.rates.simulate_states(
        grid, dZ[:, :, :2], aux, start.get("x", 0.0), start.get("z", 0.0)
    )
    y_I, _, cum_I, clip_I = model.cir_I.simulate(grid, dZ[:, :, 2], start.get("y_I"))
    y_C, _, cum_C, clip_C = model.cir_C.simulate(grid, dZ[:, :, 3], start.get("y_C"))
    if xi is None:
        xi = pe.copula_uniform_pair(seed, path_ids, model.rho_G)
    draw, idx_I, idx_C = pe.sample_default_times(xi[0], xi[1], cum_I, cum_C, grid)
    eps, flows = swap_exposure(model.swap, model.rates, grid, x, z, start.get("fixing"))
    ps = PathSet(
        grid=grid,
        maturity=model.swap.maturity,
        eps=eps,
        int_r=int_r,
        tau_I=draw.tau_I,
        tau_C=draw.tau_C,
        idx_I=idx_I,
        idx_C=idx_C,
        path_ids=path_ids,
        flows=flows,
        clipped=clip_I + clip_C,
    )
    if keep_states:
        ps.x, ps.z, ps.y_I, ps.y_C, ps.cum_I, ps.cum_C = x, z, y_I, y_C, cum_I, cum_C
    return ps


def running_fixing(model: Model, paths: PathSet, row: int, k: int):
    """P(reset, payment) of the accrual period containing node ``k`` on path ``row``.

    Returns None when node ``k`` is itself a reset date or past maturity.
    """
    t = paths.grid[k]
    fl = model.swap.float_dates()
    starts, ends = fl[:-1], fl[1:]
    j = int(np.searchsorted(ends, t + GRID_TOL))
    if j >= len(starts) or abs(starts[j] - t) <= GRID_TOL:
        return None
    ks = int(np.searchsorted(paths.grid, starts[j] - GRID_TOL))
    return float(model.rates.bond_price(starts[j], ends[j], paths.x[row, ks], paths.z[row, ks]))
