"""CIR++ default intensity: lambda(t) = y(t) + psi(t) with y a CIR process.

The shift psi is fitted so that the analytic model survival matches the
market hazard curve; simulation uses a full-truncation Euler scheme so the
intensity shocks can share a grid with the interest-rate shocks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .market_data import HazardCurve

log = logging.getLogger(__name__)

_NU_DETERMINISTIC = 1e-7


@dataclass(frozen=True)
class CirppParams:
    name: str
    kappa: float
    mu: float
    nu: float
    y0: float

    def __post_init__(self):
        prefix = f"cir_{self.name}"
        if self.name not in ("I", "C"):
            raise ConfigError(f"{prefix}.name", "must be 'I' or 'C'")
        if not self.kappa > 0:
            raise ConfigError(f"{prefix}.kappa", "mean reversion must be > 0")
        if not self.mu > 0:
            raise ConfigError(f"{prefix}.mu", "long-run mean must be > 0")
        if self.nu < 0:
            raise ConfigError(f"{prefix}.nu", "volatility must be >= 0")
        if self.y0 < 0:
            raise ConfigError(f"{prefix}.y0", "initial level must be >= 0")

    @property
    def feller(self) -> bool:
        return 2.0 * self.kappa * self.mu > self.nu**2


def cir_log_survival(p: CirppParams, t):
    """ln E[exp(-int_0^t y)] for the CIR component, closed form."""
    t = np.asarray(t, dtype=float)
    k, mu, nu, y0 = p.kappa, p.mu, p.nu, p.y0
    if nu < _NU_DETERMINISTIC:
        return -(mu * t + (y0 - mu) * (-np.expm1(-k * t)) / k)
    h = np.sqrt(k * k + 2.0 * nu * nu)
    em1 = np.expm1(h * t)
    g = 2.0 * h + (k + h) * em1
    log_a = (2.0 * k * mu / nu**2) * (np.log(2.0 * h) + 0.5 * (k + h) * t - np.log(g))
    b = 2.0 * em1 / g
    return log_a - b * y0


def cir_forward(p: CirppParams, t):
    """-d/dt ln E[exp(-int_0^t y)]."""
    t = np.asarray(t, dtype=float)
    k, mu, nu, y0 = p.kappa, p.mu, p.nu, p.y0
    if nu < _NU_DETERMINISTIC:
        return mu + (y0 - mu) * np.exp(-k * t)
    h = np.sqrt(k * k + 2.0 * nu * nu)
    eht = np.exp(h * t)
    g = 2.0 * h + (k + h) * (eht - 1.0)
    dlog_a = (2.0 * k * mu / nu**2) * (0.5 * (k + h) - (k + h) * h * eht / g)
    db = 4.0 * h * h * eht / g**2
    return -dlog_a + db * y0


def cir_mean(p: CirppParams, t):
    t = np.asarray(t, dtype=float)
    return p.mu + (p.y0 - p.mu) * np.exp(-p.kappa * t)


class Cirpp:
    """CIR++ intensity for one name, shift fitted to a hazard curve."""

    def __init__(self, params: CirppParams, hazard: HazardCurve):
        self.params = params
        self.hazard = hazard

    def psi(self, t):
        return self.hazard.hazard(t) - cir_forward(self.params, t)

    def psi_integral(self, t):
        """int_0^t psi(u) du = -ln S_market(t) + ln S_CIR(t)."""
        return self.hazard.cumulative(t) + cir_log_survival(self.params, t)

    def model_survival(self, t):
        return np.exp(cir_log_survival(self.params, t) - self.psi_integral(t))

    def simulate(self, grid, dZ, y_start=None):
        """Full-truncation Euler path of y, the clipped intensity and its integral.

        ``dZ`` are Brownian increments of shape (n, steps). Returns
        ``(y, lam, cum, clipped)`` where ``cum`` is the cumulative intensity
        from ``grid[0]`` (trapezoidal in y, exact in psi) and ``clipped``
        counts grid nodes where y+ + psi < 0 had to be floored at 0.
        """
        grid = np.asarray(grid, dtype=float)
        steps = len(grid) - 1
        dZ = np.asarray(dZ)
        if dZ.ndim != 2 or dZ.shape[1] != steps:
            raise ValueError(f"shock dimensions {dZ.shape} do not match a grid of {steps} steps")
        p = self.params
        n = dZ.shape[0]
        y = np.empty((n, steps + 1))
        y[:, 0] = p.y0 if y_start is None else y_start
        dts = np.diff(grid)
        for k in range(steps):
            yk = np.maximum(y[:, k], 0.0)
            y[:, k + 1] = y[:, k] + p.kappa * (p.mu - yk) * dts[k] + p.nu * np.sqrt(yk) * dZ[:, k]
        ypos = np.maximum(y, 0.0)
        psi = self.psi(grid)
        raw = ypos + psi
        lam = np.maximum(raw, 0.0)
        neg = raw < 0.0
        clipped = int(np.count_nonzero(neg))
        psi_int = self.psi_integral(grid)
        inc = 0.5 * (ypos[:, 1:] + ypos[:, :-1]) * dts + np.diff(psi_int)
        if clipped:
            bad = neg[:, 1:] | neg[:, :-1]
            trap = 0.5 * (lam[:, 1:] + lam[:, :-1]) * dts
            inc = np.where(bad, trap, inc)
        cum = np.zeros((n, steps + 1))
        np.cumsum(inc, axis=1, out=cum[:, 1:])
        return y, lam, cum, clipped


def fit_psi(params: CirppParams, hazard: HazardCurve, horizon: float = 30.0) -> Cirpp:
    """Fit the shift so model survival reproduces ``hazard``.

    Warns when the shift turns negative; raises when the expected intensity
    itself would be negative somewhere on ``[0, horizon]``.
    """
    if hazard.name != params.name:
        raise ConfigError(f"cir_{params.name}", f"hazard curve is for name {hazard.name}")
    model = Cirpp(params, hazard)
    if not params.feller:
        log.info("CIR %s parameters violate the Feller condition", params.name)
    t = np.linspace(0.0, horizon, 2001)
    psi = model.psi(t)
    if np.min(psi) < 0.0:
        worst = psi + cir_mean(params, t)
        if np.min(worst) < -1e-12:
            raise ConfigError(
                f"cir_{params.name}",
                "shift makes the expected intensity negative; intensity positivity cannot be maintained",
            )
        log.warning("negative shift psi for name %s (min %.3g); intensities will be clipped at 0",
                    params.name, float(np.min(psi)))
    return model
