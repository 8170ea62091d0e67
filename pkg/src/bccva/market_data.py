"""Deterministic market inputs: discount curve and per-name hazard curves.

All year fractions are ACT/365F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class DiscountCurve:
    """Log-linear discount curve with flat zero-rate extrapolation.

    ``pillars`` is a sequence of ``(time, discount_factor)`` starting at
    ``(0, 1.0)``.
    """

    pillars: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pillars = tuple((float(t), float(df)) for t, df in self.pillars)
        object.__setattr__(self, "pillars", pillars)
        if not pillars or pillars[0] != (0.0, 1.0):
            raise ConfigError("discount.pillars", "first pillar must be (0, 1.0)")
        times = [t for t, _ in pillars]
        dfs = [df for _, df in pillars]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ConfigError("discount.pillars", "times must be strictly increasing")
        if any(df <= 0.0 for df in dfs):
            raise ConfigError("discount.pillars", "discount factors must be positive")
        if any(d1 > d0 for d0, d1 in zip(dfs, dfs[1:])):
            raise ConfigError("discount.pillars", "discount factors must be non-increasing")
        object.__setattr__(self, "_t", np.array(times))
        object.__setattr__(self, "_logdf", np.log(np.array(dfs)))

    @classmethod
    def flat(cls, rate: float, horizon: float = 50.0) -> "DiscountCurve":
        return cls(((0.0, 1.0), (horizon, math.exp(-rate * horizon))))

    @classmethod
    def from_zero_rates(cls, times: Sequence[float], rates: Sequence[float]) -> "DiscountCurve":
        pillars = [(0.0, 1.0)] + [(t, math.exp(-r * t)) for t, r in zip(times, rates)]
        return cls(tuple(pillars))

    def log_discount(self, t):
        """Return ln P(0, t); vectorised over ``t``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("discount requested at negative time")
        out = np.interp(t, self._t, self._logdf)
        last_t = self._t[-1]
        if last_t > 0:
            beyond = t > last_t
            out = np.where(beyond, self._logdf[-1] * t / last_t, out)
        return out

    def discount(self, t):
        out = np.exp(self.log_discount(t))
        return float(out) if out.ndim == 0 else out

    def forward(self, t):
        """Instantaneous forward rate f(0, t), right-continuous at pillars."""
        t = np.asarray(t, dtype=float)
        ts, lp = self._t, self._logdf
        if len(ts) == 1:
            return np.zeros_like(t)
        seg_fwd = -np.diff(lp) / np.diff(ts)
        tail = -lp[-1] / ts[-1]
        idx = np.searchsorted(ts, t, side="right") - 1
        return np.where(idx >= len(seg_fwd), tail, seg_fwd[np.clip(idx, 0, len(seg_fwd) - 1)])

    def to_dict(self) -> dict:
        return {"pillars": [list(p) for p in self.pillars]}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscountCurve":
        return cls(tuple(tuple(p) for p in d["pillars"]))


@dataclass(frozen=True)
class HazardCurve:
    """Piecewise-constant hazard rates.

    A pillar ``(T_k, h_k)`` means the rate is ``h_k`` on ``(T_{k-1}, T_k]``;
    the last rate extends beyond the last pillar time (which may be ``inf``).
    """

    name: str
    pillars: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pillars = tuple((float(t), float(h)) for t, h in self.pillars)
        object.__setattr__(self, "pillars", pillars)
        field = f"hazard_{self.name}.pillars"
        if self.name not in ("I", "C"):
            raise ConfigError(f"hazard_{self.name}.name", "must be 'I' or 'C'")
        if not pillars:
            raise ConfigError(field, "at least one pillar required")
        times = [t for t, _ in pillars]
        if times[0] <= 0 or any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ConfigError(field, "times must be positive and strictly increasing")
        if any(h < 0 for _, h in pillars):
            raise ConfigError(field, "hazard rates must be non-negative")
        ends = np.array(times)
        starts = np.concatenate([[0.0], ends[:-1]])
        rates = np.array([h for _, h in pillars])
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_rates", rates)

    @classmethod
    def flat(cls, name: str, rate: float) -> "HazardCurve":
        return cls(name, ((math.inf, rate),))

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._starts, t, side="left") - 1
        return self._rates[np.clip(idx, 0, len(self._rates) - 1)]

    def cumulative(self, t):
        """Integrated hazard from 0 to ``t``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("survival requested at negative time")
        lengths = np.clip(t[..., None] - self._starts, 0.0, None)
        widths = np.diff(np.concatenate([self._starts, [np.inf]]))
        return np.sum(self._rates * np.minimum(lengths, widths), axis=-1)

    def survival(self, t):
        out = np.exp(-self.cumulative(t))
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"pillars": [list(p) for p in self.pillars]}

    @classmethod
    def from_dict(cls, name: str, d: dict) -> "HazardCurve":
        return cls(name, tuple(tuple(p) for p in d["pillars"]))
