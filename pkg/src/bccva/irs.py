"""Interest-rate swap and its mid-market exposure under G2++."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .g2pp import G2pp
from .market_data import DiscountCurve

TIME_TOL = 1e-9


@dataclass(frozen=True)
class SwapSpec:
    """Spot-starting fixed/float swap.

    ``direction`` is seen from the investor: ``payer`` pays fixed and
    receives floating. ``fixed_rate=None`` means the par rate on the input
    curve.
    """

    notional: float
    maturity: float
    fixed_rate: float | None = None
    fixed_frequency: int = 1
    float_frequency: int = 2
    direction: str = "payer"

    def __post_init__(self):
        if not self.maturity > 0:
            raise ConfigError("swap.maturity", "must be > 0")
        if not self.notional > 0:
            raise ConfigError("swap.notional", "must be > 0")
        if self.direction not in ("payer", "receiver"):
            raise ConfigError("swap.direction", "must be 'payer' or 'receiver'")
        for name in ("fixed_frequency", "float_frequency"):
            f = getattr(self, name)
            if f <= 0 or abs(self.maturity * f - round(self.maturity * f)) > 1e-9:
                raise ConfigError(f"swap.{name}", "must divide the swap schedule evenly")

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == "payer" else -1.0

    def fixed_dates(self) -> np.ndarray:
        n = int(round(self.maturity * self.fixed_frequency))
        return np.arange(1, n + 1) / self.fixed_frequency

    def float_dates(self) -> np.ndarray:
        n = int(round(self.maturity * self.float_frequency))
        return np.arange(0, n + 1) / self.float_frequency

    def payment_dates(self) -> np.ndarray:
        return np.union1d(self.fixed_dates(), self.float_dates()[1:])

    def with_rate(self, curve: DiscountCurve) -> "SwapSpec":
        if self.fixed_rate is not None:
            return self
        return SwapSpec(self.notional, self.maturity, fair_rate(self, curve),
                        self.fixed_frequency, self.float_frequency, self.direction)


def fair_rate(spec: SwapSpec, curve: DiscountCurve) -> float:
    """Fixed rate giving zero value at time 0."""
    alpha = 1.0 / spec.fixed_frequency
    annuity = alpha * float(np.sum(curve.discount(spec.fixed_dates())))
    if annuity <= 0.0:
        raise ValueError("zero annuity")
    return (1.0 - curve.discount(spec.maturity)) / annuity


def _locate(grid, t):
    k = int(np.searchsorted(grid, t - TIME_TOL))
    if k >= len(grid) or abs(grid[k] - t) > TIME_TOL:
        return None
    return k


def swap_exposure(spec: SwapSpec, model: G2pp, grid, x, z, running_fixing=None):
    """Mid-market exposure on every grid node, investor's view.

    ``x``, ``z`` are factor paths of shape (n, len(grid)). Cash flows paid at
    a node are excluded from the value at that node. Floating coupons are
    fixed at their reset node from the simulated bond price; when ``grid``
    starts inside an accrual period ``running_fixing`` must give
    P(reset, payment) for that period per path.

    Returns ``(eps, cashflows)``, both (n, len(grid)); ``cashflows`` holds
    the net payment received by the investor at each node.
    """
    if spec.fixed_rate is None:
        raise ValueError("swap fixed rate not set; call SwapSpec.with_rate first")
    grid = np.asarray(grid, dtype=float)
    x = np.atleast_2d(x)
    z = np.atleast_2d(z)
    n = x.shape[0]
    eps = np.zeros((n, len(grid)))
    flows = np.zeros((n, len(grid)))
    fixed = spec.fixed_dates()
    alpha_fix = 1.0 / spec.fixed_frequency
    fl = spec.float_dates()
    starts, ends = fl[:-1], fl[1:]
    T = spec.maturity
    fixing = {}
    if grid[0] > TIME_TOL:
        j = int(np.searchsorted(ends, grid[0] + TIME_TOL))
        if j < len(starts) and starts[j] < grid[0] - TIME_TOL:
            if running_fixing is None:
                raise ValueError("grid starts inside an accrual period; running_fixing required")
            fixing[j] = np.broadcast_to(np.asarray(running_fixing, dtype=float), (n,))
    for j, s in enumerate(starts):
        if s >= grid[0] - TIME_TOL and _locate(grid, s) is None:
            raise ValueError(f"reset date {s} not on the simulation grid")
    K = spec.fixed_rate
    for k, t in enumerate(grid):
        if t > T + TIME_TOL:
            break
        xs, zs = x[:, k], z[:, k]
        # payments at t; those at the first node are already settled
        paid_fix = np.abs(fixed - t) <= TIME_TOL
        if k == 0:
            paid_fix[:] = False
        if paid_fix.any():
            flows[:, k] -= K * alpha_fix
        paid_fl = np.nonzero(np.abs(ends - t) <= TIME_TOL)[0] if k > 0 else ()
        for j in paid_fl:
            flows[:, k] += 1.0 / fixing[j] - 1.0
        if t >= T - TIME_TOL:
            continue
        rem_fix = fixed[fixed > t + TIME_TOL]
        pv_fixed = K * alpha_fix * np.sum(model.bond_price(t, rem_fix[None, :], xs[:, None], zs[:, None]), axis=1)
        j = int(np.searchsorted(ends, t + TIME_TOL))
        p_end = model.bond_price(t, ends[j], xs, zs)
        if abs(starts[j] - t) <= TIME_TOL:
            fixing[j] = p_end
            pv_float_first = 1.0 - p_end
        else:
            pv_float_first = p_end / fixing[j] - p_end
        pv_float = pv_float_first + p_end - model.bond_price(t, T, xs, zs)
        eps[:, k] = pv_float - pv_fixed
    scale = spec.sign * spec.notional
    return eps * scale, flows * scale


def exposure(spec: SwapSpec, model: G2pp, t: float, x, z, fixing=None):
    """Exposure at a single time ``t`` for states (x, z).

    Inside an accrual period ``fixing`` is P(reset, payment) of that period.
    """
    if t > spec.maturity + TIME_TOL:
        raise ValueError("valuation time beyond swap maturity")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    pts = np.union1d([t], spec.float_dates()[spec.float_dates() > t + TIME_TOL])
    pts = np.union1d(pts, spec.fixed_dates()[spec.fixed_dates() > t + TIME_TOL])
    # deterministic placeholder states beyond t are never used for value at t
    xs = np.repeat(x[:, None], len(pts), axis=1)
    zs = np.repeat(z[:, None], len(pts), axis=1)
    eps, _ = swap_exposure(spec, model, pts, xs, zs, running_fixing=fixing)
    return eps[:, 0]
