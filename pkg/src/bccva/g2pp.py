"""G2++ shifted two-factor Gaussian short-rate model.

r(t) = x(t) + z(t) + phi(t), with x, z Ornstein-Uhlenbeck factors driven by
Brownian motions of correlation rho12. The shift phi is fitted so that model
zero-coupon prices at time 0 reproduce the input discount curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .market_data import DiscountCurve

_SMALL = 1e-3
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _quad(fn, tau):
    """Gauss-Legendre integral of ``fn(u)`` over ``[0, tau]``, vectorised in tau."""
    tau = np.asarray(tau, dtype=float)
    u = 0.5 * tau[..., None] * (_GL_X + 1.0)
    return 0.5 * tau * np.sum(_GL_W * fn(u), axis=-1)


def b_fn(c: float, tau):
    """(1 - exp(-c tau)) / c with the c -> 0 limit tau."""
    tau = np.asarray(tau, dtype=float)
    if c == 0.0:
        return tau.copy()
    return -np.expm1(-c * tau) / c


def _int_b(c: float, tau):
    # int_0^tau B_c(u) du
    tau = np.asarray(tau, dtype=float)
    if c * np.max(tau, initial=0.0) < _SMALL:
        return _quad(lambda u: b_fn(c, u), tau)
    return (tau - b_fn(c, tau)) / c


def _int_bb(c: float, d: float, tau):
    # int_0^tau B_c(u) B_d(u) du
    tau = np.asarray(tau, dtype=float)
    if min(c, d) * np.max(tau, initial=0.0) < _SMALL:
        return _quad(lambda u: b_fn(c, u) * b_fn(d, u), tau)
    return (tau - b_fn(c, tau) - b_fn(d, tau) + b_fn(c + d, tau)) / (c * d)


def _int_eb(c: float, d: float, tau):
    # int_0^tau exp(-c u) B_d(u) du
    tau = np.asarray(tau, dtype=float)
    if d * np.max(tau, initial=0.0) < _SMALL:
        return _quad(lambda u: np.exp(-c * u) * b_fn(d, u), tau)
    return (b_fn(c, tau) - b_fn(c + d, tau)) / d


@dataclass(frozen=True)
class G2ppParams:
    a: float
    b: float
    sigma: float
    eta: float
    rho12: float
    r0: float | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError("g2pp.a", "mean reversion must be > 0")
        if not self.b > 0:
            raise ConfigError("g2pp.b", "mean reversion must be > 0")
        if self.sigma < 0:
            raise ConfigError("g2pp.sigma", "volatility must be >= 0")
        if self.eta < 0:
            raise ConfigError("g2pp.eta", "volatility must be >= 0")
        if not -1.0 <= self.rho12 <= 1.0:
            raise ConfigError("g2pp.rho12", "correlation must lie in [-1, 1]")


class G2pp:
    """G2++ model with the shift fitted to ``curve``.

    Use :func:`fit_phi` to build one.
    """

    def __init__(self, params: G2ppParams, curve: DiscountCurve):
        self.params = params
        self.curve = curve

    # -- deterministic quantities -------------------------------------------------
    def variance(self, tau):
        """Variance of int_t^{t+tau} (x + z) du given the state at t."""
        p = self.params
        out = p.sigma**2 * _int_bb(p.a, p.a, tau) + p.eta**2 * _int_bb(p.b, p.b, tau)
        if p.sigma and p.eta:
            out = out + 2.0 * p.rho12 * p.sigma * p.eta * _int_bb(p.a, p.b, tau)
        return out

    def phi(self, t):
        """Deterministic shift phi(t)."""
        p = self.params
        ba, bb = b_fn(p.a, t), b_fn(p.b, t)
        dv = p.sigma**2 * ba**2 + p.eta**2 * bb**2 + 2.0 * p.rho12 * p.sigma * p.eta * ba * bb
        return self.curve.forward(t) + 0.5 * dv

    def phi_integral(self, t):
        """int_0^t phi(u) du, exact."""
        return -self.curve.log_discount(t) + 0.5 * self.variance(t)

    def bond_price(self, t, T, x, z):
        """Zero-coupon price P(t, T) given the factor state (x, z) at time t.

        Broadcasts over ``T`` and the state arrays.
        """
        t = float(t)
        T = np.asarray(T, dtype=float)
        if np.any(T < t - 1e-12):
            raise ValueError("bond maturity before valuation time")
        T = np.maximum(T, t)
        p = self.params
        tau = T - t
        log_a = (
            self.curve.log_discount(T)
            - self.curve.log_discount(t)
            + 0.5 * (self.variance(tau) - self.variance(T) + self.variance(t))
        )
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return np.exp(log_a - b_fn(p.a, tau) * x - b_fn(p.b, tau) * z)

    # -- simulation -------------------------------------------------------------------
    def transition(self, dt: float):
        """Exact one-step law of the OU pair and its time integrals.

        Returns ``(decay, integ, gain, chol)``: the state maps
        ``x' = decay_x x + e_x`` and ``int x = integ_x x + e_ix`` where the
        innovation vector ``e = (e_x, e_z, e_ix, e_iz)`` equals
        ``gain @ dW + chol @ aux`` with ``dW`` the Brownian increments of
        (Z1, Z2) over the step and ``aux`` independent standard normals.
        """
        return _transition(self.params, round(float(dt), 14))

    def simulate_states(self, grid, dW, aux, x0=0.0, z0=0.0):
        """Simulate factors and the cumulative integral of r along ``grid``.

        ``dW`` holds the (Z1, Z2) Brownian increments, shape (n, steps, 2);
        ``aux`` holds independent standard normals, shape (n, steps, 4).
        Returns ``x, z, int_r`` each of shape (n, steps + 1) where ``int_r``
        is int_{grid[0]}^{t} r(u) du.
        """
        grid = np.asarray(grid, dtype=float)
        steps = len(grid) - 1
        if steps < 1 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")
        dW = np.asarray(dW)
        aux = np.asarray(aux)
        if dW.ndim != 3 or dW.shape[1:] != (steps, 2) or aux.shape != dW.shape[:2] + (4,):
            raise ValueError(
                f"shock dimensions {dW.shape}/{aux.shape} do not match a grid of {steps} steps"
            )
        n = dW.shape[0]
        x = np.empty((n, steps + 1))
        z = np.empty((n, steps + 1))
        int_r = np.empty((n, steps + 1))
        x[:, 0] = x0
        z[:, 0] = z0
        int_r[:, 0] = 0.0
        phi_int = self.phi_integral(grid)
        dts = np.diff(grid)
        for k in range(steps):
            decay, integ, gain, chol = self.transition(dts[k])
            e = dW[:, k, :] @ gain.T + aux[:, k, :] @ chol.T
            xk, zk = x[:, k], z[:, k]
            x[:, k + 1] = decay[0] * xk + e[:, 0]
            z[:, k + 1] = decay[1] * zk + e[:, 1]
            step_int = integ[0] * xk + e[:, 2] + integ[1] * zk + e[:, 3]
            int_r[:, k + 1] = int_r[:, k] + step_int + (phi_int[k + 1] - phi_int[k])
        return x, z, int_r


@lru_cache(maxsize=256)
def _transition(p: G2ppParams, dt: float):
    a, b, s, e, rho = p.a, p.b, p.sigma, p.eta, p.rho12
    ba, bb = float(b_fn(a, dt)), float(b_fn(b, dt))
    ja, jb = float(_int_b(a, dt)), float(_int_b(b, dt))
    # covariance of innovations with (dZ1, dZ2)
    cross = np.array(
        [
            [s * ba, s * rho * ba],
            [e * rho * bb, e * bb],
            [s * ja, s * rho * ja],
            [e * rho * jb, e * jb],
        ]
    )
    cov_ww = dt * np.array([[1.0, rho], [rho, 1.0]])
    ee = np.empty((4, 4))
    ee[0, 0] = s * s * float(b_fn(2 * a, dt))
    ee[1, 1] = e * e * float(b_fn(2 * b, dt))
    ee[0, 1] = ee[1, 0] = rho * s * e * float(b_fn(a + b, dt))
    ee[2, 2] = s * s * float(_int_bb(a, a, dt))
    ee[3, 3] = e * e * float(_int_bb(b, b, dt))
    ee[2, 3] = ee[3, 2] = rho * s * e * float(_int_bb(a, b, dt))
    ee[0, 2] = ee[2, 0] = s * s * float(_int_eb(a, a, dt))
    ee[0, 3] = ee[3, 0] = rho * s * e * float(_int_eb(a, b, dt))
    ee[1, 2] = ee[2, 1] = rho * s * e * float(_int_eb(b, a, dt))
    ee[1, 3] = ee[3, 1] = e * e * float(_int_eb(b, b, dt))
    gain = cross @ np.linalg.pinv(cov_ww)
    cond = ee - gain @ cross.T
    chol = psd_sqrt(0.5 * (cond + cond.T))
    decay = np.array([np.exp(-a * dt), np.exp(-b * dt)])
    integ = np.array([ba, bb])
    return decay, integ, gain, chol


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Matrix square root L with L @ L.T == m for a PSD matrix (eigenvalues clipped at 0)."""
    w, v = np.linalg.eigh(m)
    return v * np.sqrt(np.clip(w, 0.0, None))


def fit_phi(params: G2ppParams, curve: DiscountCurve) -> G2pp:
    """Fit the deterministic shift to ``curve`` and return the model."""
    if not isinstance(curve, DiscountCurve):
        raise TypeError("curve must be a DiscountCurve")
    return G2pp(params, curve)
