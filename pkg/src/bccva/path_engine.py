"""Correlated shocks, counter-based random streams and copula default times.

Every random number is a pure function of ``(seed, stream, path_id,
position)``: each path owns a Philox stream keyed by the seed and its id, so
results do not depend on how paths are batched or distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtri

from .errors import ConfigError, NumericalError
from .g2pp import G2ppParams

# stream tags
BROWNIAN = 0
COPULA = 1
NESTED = 2

_PSD_TOL = 1e-12


def effective_rate_spread_corr(g2pp: G2ppParams, rho_1i: float) -> float:
    """Instantaneous short-rate / intensity correlation given rho_1i = rho_2i."""
    s, e = g2pp.sigma, g2pp.eta
    if rho_1i == 0.0:
        return 0.0
    den = s * s + e * e + 2.0 * s * e * g2pp.rho12
    if den <= 0.0:
        raise NumericalError("short-rate variance is zero; rate/spread correlation undefined")
    return rho_1i * (s + e) / math.sqrt(den)


def factor_corr_for(g2pp: G2ppParams, rho_bar: float) -> float:
    """Inverse of :func:`effective_rate_spread_corr`: rho_1i achieving ``rho_bar``."""
    s, e = g2pp.sigma, g2pp.eta
    if rho_bar == 0.0:
        return 0.0
    den = s * s + e * e + 2.0 * s * e * g2pp.rho12
    if den <= 0.0 or s + e == 0.0:
        raise NumericalError("short-rate variance is zero; rate/spread correlation undefined")
    return rho_bar * math.sqrt(den) / (s + e)


@dataclass(frozen=True)
class CorrelationParams:
    """Free correlation inputs: rate/spread correlations per name and the copula parameter.

    The rate-factor correlation rho12 lives on :class:`G2ppParams`.
    """

    rho_bar_I: float = 0.0
    rho_bar_C: float = 0.0
    rho_G: float = 0.0

    def __post_init__(self):
        for name in ("rho_bar_I", "rho_bar_C"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"correlation.{name}", "must lie in [-1, 1]")
        if not -1.0 < self.rho_G < 1.0:
            raise ConfigError("correlation.rho_G", "must lie in (-1, 1)")

    def matrix(self, g2pp: G2ppParams) -> np.ndarray:
        """4x4 correlation of (Z1, Z2, Z3_I, Z3_C); raises if not PSD."""
        r1i = factor_corr_for(g2pp, self.rho_bar_I)
        r1c = factor_corr_for(g2pp, self.rho_bar_C)
        if abs(r1i) > 1.0 or abs(r1c) > 1.0:
            raise NumericalError("correlation matrix not PSD (implied factor correlation exceeds 1)")
        r = g2pp.rho12
        m = np.array(
            [
                [1.0, r, r1i, r1c],
                [r, 1.0, r1i, r1c],
                [r1i, r1i, 1.0, 0.0],
                [r1c, r1c, 0.0, 1.0],
            ]
        )
        return m

    def cholesky(self, g2pp: G2ppParams) -> np.ndarray:
        return psd_cholesky(self.matrix(g2pp))


def psd_cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular factor of a PSD matrix, tolerating zero pivots.

    Raises :class:`NumericalError` ("correlation matrix not PSD") otherwise.
    """
    m = np.asarray(m, dtype=float)
    if np.min(np.linalg.eigvalsh(m)) < -_PSD_TOL:
        raise NumericalError("correlation matrix not PSD")
    n = m.shape[0]
    L = np.zeros_like(m)
    for j in range(n):
        d = m[j, j] - L[j, :j] @ L[j, :j]
        if d <= _PSD_TOL:
            continue
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (m[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def _key(seed: int, stream: int, path_id: int) -> int:
    if not 0 <= path_id < 1 << 56:
        raise ValueError("path id out of range")
    return (int(seed) % (1 << 64)) << 64 | (stream & 0xFF) << 56 | int(path_id)


def uniforms(seed: int, stream: int, path_id: int, count: int) -> np.ndarray:
    """``count`` uniforms in (0, 1) from the Philox stream of one path."""
    raw = np.random.Philox(key=_key(seed, stream, path_id)).random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, stream: int, path_ids, per_path: int) -> np.ndarray:
    """Standard normals, shape (len(path_ids), per_path), by inverse CDF."""
    out = np.empty((len(path_ids), per_path))
    for row, pid in enumerate(path_ids):
        out[row] = uniforms(seed, stream, int(pid), per_path)
    return ndtri(out, out=out)


def gen_increments(corr_chol: np.ndarray, grid, seed: int, path_ids, stream: int = BROWNIAN):
    """Correlated Brownian increments and auxiliary normals for a set of paths.

    Returns ``(dZ, aux)``: ``dZ`` has shape (n, steps, 4) with per-step
    covariance ``dt * R`` for (Z1, Z2, Z3_I, Z3_C); ``aux`` (n, steps, 4)
    are independent standard normals consumed by the exact rate transition.
    Position of a draw in a path stream is ``8 * step + component``.
    """
    grid = np.asarray(grid, dtype=float)
    steps = len(grid) - 1
    eps = normals(seed, stream, path_ids, 8 * steps).reshape(len(path_ids), steps, 8)
    sqdt = np.sqrt(np.diff(grid))[None, :, None]
    dZ = (eps[:, :, :4] @ corr_chol.T) * sqdt
    return dZ, eps[:, :, 4:]


def copula_uniform_pair(seed: int, path_ids, rho_G: float):
    """Exponential default triggers (xi_I, xi_C) from a Gaussian copula.

    U = Phi(z) with (z_I, z_C) bivariate normal; xi = -ln U.
    """
    n = normals(seed, COPULA, path_ids, 2)
    z_i = n[:, 0]
    z_c = rho_G * n[:, 0] + math.sqrt(1.0 - rho_G * rho_G) * n[:, 1]
    return -log_ndtr(z_i), -log_ndtr(z_c)


@dataclass
class DefaultDraw:
    xi_I: np.ndarray
    xi_C: np.ndarray
    tau_I: np.ndarray
    tau_C: np.ndarray

    @property
    def tau(self) -> np.ndarray:
        return np.minimum(self.tau_I, self.tau_C)

    @property
    def counterparty_first(self) -> np.ndarray:
        # ties go to the counterparty
        return self.tau_C <= self.tau_I


def crossing_times(cum, grid, xi):
    """First time the cumulative intensity reaches ``xi`` (linear in between grid nodes).

    Returns ``(tau, index)`` where ``index`` is the first grid node at or
    after tau (``len(grid)`` when never reached, with tau = inf).
    """
    grid = np.asarray(grid, dtype=float)
    cum = np.asarray(cum, dtype=float)
    xi = np.asarray(xi, dtype=float)
    hit = cum >= xi[:, None]
    ever = hit.any(axis=1)
    idx = np.where(ever, hit.argmax(axis=1), len(grid))
    tau = np.full(len(xi), np.inf)
    rows = np.nonzero(ever)[0]
    k = idx[rows]
    at_start = k == 0
    lo = np.maximum(k - 1, 0)
    c0, c1 = cum[rows, lo], cum[rows, k]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(c1 > c0, (xi[rows] - c0) / (c1 - c0), 1.0)
    t = grid[lo] + np.clip(w, 0.0, 1.0) * (grid[k] - grid[lo])
    tau[rows] = np.where(at_start, grid[0], t)
    return tau, idx


def sample_default_times(xi_I, xi_C, cum_I, cum_C, grid) -> tuple[DefaultDraw, np.ndarray, np.ndarray]:
    """Default times tau^k = inf{t : Lambda^k(0, t) >= xi^k}.

    Returns the draw and the snapped grid indices for both names.
    """
    tau_I, idx_I = crossing_times(cum_I, grid, xi_I)
    tau_C, idx_C = crossing_times(cum_C, grid, xi_C)
    return DefaultDraw(np.asarray(xi_I), np.asarray(xi_C), tau_I, tau_C), idx_I, idx_C
