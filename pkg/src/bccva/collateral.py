"""Collateral account simulation under discrete margining.

Sign convention: C > 0 means the counterparty has net-posted collateral in
the investor's favour; C < 0 means the investor has net-posted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MODES = ("perfect", "margined", "none")


@dataclass(frozen=True)
class MarginingRule:
    mode: str = "margined"
    interval: float = 1.0 / 52.0
    threshold_I: float = 0.0
    threshold_C: float = 0.0
    mta: float = 0.0
    rehypothecation: bool = True
    allow_threshold_below_mta: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("margining.mode", f"must be one of {MODES}")
        if not self.interval > 0:
            raise ConfigError("margining.interval", "update interval must be > 0")
        for name in ("threshold_I", "threshold_C", "mta"):
            if getattr(self, name) < 0:
                raise ConfigError(f"margining.{name}", "must be >= 0")
        if self.mode == "margined" and not self.allow_threshold_below_mta:
            for name in ("threshold_I", "threshold_C"):
                if getattr(self, name) < self.mta:
                    raise ConfigError(f"margining.{name}", "threshold must be >= minimum transfer amount")

    def margin_dates(self, maturity: float) -> np.ndarray:
        """Update dates t_1 < t_2 < ... strictly before maturity (t_0 = 0 carries no update)."""
        n = int(np.floor(maturity / self.interval + 1e-9))
        dates = np.arange(1, n + 1) * self.interval
        return dates[dates < maturity - 1e-9]


def margin_update(eps, c_pre, rule: MarginingRule):
    """Post-update account value from the investor and counterparty transfer rules."""
    eps = np.asarray(eps, dtype=float)
    c_pre = np.asarray(c_pre, dtype=float)
    M = rule.mta
    inv_target = np.minimum(eps + rule.threshold_I, 0.0)
    inv_move = inv_target - np.minimum(c_pre, 0.0)
    cpty_target = np.maximum(eps - rule.threshold_C, 0.0)
    cpty_move = cpty_target - np.maximum(c_pre, 0.0)
    return (
        c_pre
        + np.where(np.abs(inv_move) > M, inv_move, 0.0)
        + np.where(np.abs(cpty_move) > M, cpty_move, 0.0)
    )


def accrue(c_post, step_discount):
    """Roll an account value forward: divide by the path discount factor over the gap."""
    return np.asarray(c_post, dtype=float) / np.asarray(step_discount, dtype=float)


@dataclass
class CollateralPath:
    pre: np.ndarray   # account right before any update at each node
    post: np.ndarray  # account right after the update at each node

    def at_default(self, index):
        """Account available at default for snapped node ``index`` (pending calls ignored)."""
        index = np.asarray(index)
        n = self.pre.shape[0]
        out = np.zeros(n)
        ok = index < self.pre.shape[1]
        rows = np.nonzero(ok)[0]
        out[rows] = self.pre[rows, index[rows]]
        return out


def margin_mask(grid, dates, tol: float = 1e-9) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    mask = np.zeros(len(grid), dtype=bool)
    for d in dates:
        k = int(np.searchsorted(grid, d - tol))
        if k >= len(grid) or abs(grid[k] - d) > tol:
            raise ValueError(f"margin date {d} not on the simulation grid")
        mask[k] = True
    return mask


def simulate_collateral(eps, int_r, grid, rule: MarginingRule, maturity: float,
                        c_start=None) -> CollateralPath:
    """Collateral account along each path.

    ``eps`` is the exposure and ``int_r`` the cumulative integral of the
    short rate, both (n, len(grid)). Between updates the account accrues at
    the path's own short rate. A margined account is zero at the first node
    (unless ``c_start`` is given) and zero from maturity on; a perfect one
    equals the exposure everywhere.
    """
    eps = np.asarray(eps, dtype=float)
    grid = np.asarray(grid, dtype=float)
    n, m = eps.shape
    if rule.mode == "none":
        z = np.zeros((n, m))
        return CollateralPath(z, z.copy())
    if rule.mode == "perfect":
        return CollateralPath(eps.copy(), eps.copy())
    after_mat = grid >= maturity - 1e-9
    mask = margin_mask(grid, rule.margin_dates(maturity)[rule.margin_dates(maturity) > grid[0] + 1e-9])
    growth = np.exp(np.diff(int_r, axis=1))
    pre = np.zeros((n, m))
    post = np.zeros((n, m))
    if c_start is not None:
        pre[:, 0] = post[:, 0] = c_start
    for k in range(1, m):
        if after_mat[k]:
            break
        pre[:, k] = post[:, k - 1] * growth[:, k - 1]
        post[:, k] = margin_update(eps[:, k], pre[:, k], rule) if mask[k] else pre[:, k]
    return CollateralPath(pre, post)
