"""Run configuration: a YAML document mapped onto the model dataclasses."""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import yaml

from .cirpp import CirppParams, fit_psi
from .collateral import MarginingRule
from .errors import ConfigError
from .g2pp import G2ppParams, fit_phi
from .irs import SwapSpec
from .market_data import DiscountCurve, HazardCurve
from .path_engine import CorrelationParams
from .pricer import CLOSEOUTS, RecoveryParams
from .simulation import Model, build_grid

SWEEP_PARAMETERS = ("delta", "rho_bar", "rho_G", "nu_C")


@dataclass(frozen=True)
class SimulationSettings:
    paths: int = 20000
    base_step: float = 1.0 / 52.0
    seed: int = 1
    chunk_size: int = 2000
    closeout: str = "mid_market"
    inner_paths: int = 200

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError("simulation.paths", "must be >= 1")
        if not self.base_step > 0:
            raise ConfigError("simulation.base_step", "must be > 0")
        if self.chunk_size < 1:
            raise ConfigError("simulation.chunk_size", "must be >= 1")
        if self.closeout not in CLOSEOUTS:
            raise ConfigError("simulation.closeout", f"must be one of {CLOSEOUTS}")
        if self.closeout == "nested" and self.inner_paths < 100:
            raise ConfigError("simulation.inner_paths", "nested close-out needs at least 100 inner paths")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError("sweep.parameter", f"must be one of {SWEEP_PARAMETERS}")
        if not self.values:
            raise ConfigError("sweep", "no sweep values")

    @classmethod
    def parse(cls, text: str) -> "SweepSpec":
        """``param=start:stop:step`` (stop inclusive) or ``param=v1,v2,...``."""
        if "=" not in text:
            raise ConfigError("sweep", "expected <param>=<start>:<stop>:<step>")
        name, rng = text.split("=", 1)
        name = name.strip()
        try:
            if ":" in rng:
                start, stop, step = (float(v) for v in rng.split(":"))
                values = arange_inclusive(start, stop, step)
            else:
                values = tuple(float(v) for v in rng.split(","))
        except ValueError as exc:
            raise ConfigError("sweep", f"cannot parse range {rng!r}: {exc}") from None
        return cls(name, values)

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "values": list(self.values)}


def arange_inclusive(start: float, stop: float, step: float) -> tuple[float, ...]:
    if step == 0 or (stop - start) / step < -1e-12:
        raise ConfigError("sweep", "step must move start towards stop")
    n = int(math.floor((stop - start) / step + 1e-9))
    return tuple(round(start + i * step, 12) for i in range(n + 1))


@dataclass(frozen=True)
class RunConfig:
    discount: DiscountCurve
    hazard_I: HazardCurve
    hazard_C: HazardCurve
    g2pp: G2ppParams
    cir_I: CirppParams
    cir_C: CirppParams
    correlation: CorrelationParams
    recovery: RecoveryParams
    swap: SwapSpec
    margining: MarginingRule
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    sweep: SweepSpec | None = None

    # -- construction -----------------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "configuration must be a mapping")
        curves = _section(d, "curves")
        disc = _section(curves, "discount", "curves.")
        if "zero_rates" in disc:
            zr = disc["zero_rates"]
            discount = DiscountCurve.from_zero_rates(zr["times"], zr["rates"])
        else:
            discount = _build(DiscountCurve, "curves.discount", pillars=tuple(map(tuple, disc.get("pillars", ()))))
        hazards = {}
        for nm in ("I", "C"):
            hz = _section(curves, f"hazard_{nm}", "curves.")
            if "flat" in hz:
                hazards[nm] = HazardCurve.flat(nm, float(hz["flat"]))
            else:
                hazards[nm] = _build(HazardCurve, f"curves.hazard_{nm}", name=nm,
                                     pillars=tuple(map(tuple, hz.get("pillars", ()))))
        sim = d.get("simulation", {}) or {}
        swap = _build(SwapSpec, "swap", **_section(d, "swap"))
        if "horizon" in sim:
            if abs(float(sim["horizon"]) - swap.maturity) > 1e-9:
                raise ConfigError("simulation.horizon", "horizon must equal the swap maturity")
            sim = {k: v for k, v in sim.items() if k != "horizon"}
        sweep = None
        if d.get("sweep"):
            sw = d["sweep"]
            if "values" in sw:
                sweep = SweepSpec(sw["parameter"], tuple(float(v) for v in sw["values"]))
            else:
                sweep = SweepSpec(sw["parameter"], arange_inclusive(float(sw["start"]), float(sw["stop"]), float(sw["step"])))
        return cls(
            discount=discount,
            hazard_I=hazards["I"],
            hazard_C=hazards["C"],
            g2pp=_build(G2ppParams, "g2pp", **_section(d, "g2pp")),
            cir_I=_build(CirppParams, "cir_I", name="I", **_section(d, "cir_I")),
            cir_C=_build(CirppParams, "cir_C", name="C", **_section(d, "cir_C")),
            correlation=_build(CorrelationParams, "correlation", **(d.get("correlation") or {})),
            recovery=_build(RecoveryParams, "recovery", **(d.get("recovery") or {})),
            swap=swap,
            margining=_build(MarginingRule, "margining", **_section(d, "margining")),
            simulation=_build(SimulationSettings, "simulation", **sim),
            sweep=sweep,
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from None
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"invalid YAML: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        cir = lambda p: {k: v for k, v in asdict(p).items() if k != "name"}  # noqa: E731
        out = {
            "curves": {
                "discount": self.discount.to_dict(),
                "hazard_I": self.hazard_I.to_dict(),
                "hazard_C": self.hazard_C.to_dict(),
            },
            "g2pp": asdict(self.g2pp),
            "cir_I": cir(self.cir_I),
            "cir_C": cir(self.cir_C),
            "correlation": asdict(self.correlation),
            "recovery": asdict(self.recovery),
            "swap": asdict(self.swap),
            "margining": asdict(self.margining),
            "simulation": asdict(self.simulation),
        }
        if self.sweep is not None:
            out["sweep"] = self.sweep.to_dict()
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    # -- derived objects -------------------------------------------------------------
    def model(self) -> Model:
        rates = fit_phi(self.g2pp, self.discount)
        cir_I = fit_psi(self.cir_I, self.hazard_I, self.swap.maturity)
        cir_C = fit_psi(self.cir_C, self.hazard_C, self.swap.maturity)
        chol = self.correlation.cholesky(self.g2pp)
        return Model(rates, cir_I, cir_C, chol, self.correlation.rho_G, self.swap)

    def grid(self, extra_intervals=()) -> "np.ndarray":  # noqa: F821
        events = list(self.swap.payment_dates())
        rules = [self.margining] + [replace(self.margining, interval=d) for d in extra_intervals]
        for r in rules:
            if r.mode == "margined":
                events += list(r.margin_dates(self.swap.maturity))
        return build_grid(self.swap.maturity, self.simulation.base_step, events)

    def investor_default_free(self) -> bool:
        return self.cir_I.nu == 0 and all(h == 0 for _, h in self.hazard_I.pillars) and self.cir_I.y0 == 0

    def with_sweep_value(self, parameter: str, value: float) -> "RunConfig":
        """Copy with one sweep coordinate applied."""
        if parameter == "delta":
            return replace(self, margining=_build(MarginingRule, "margining",
                                                  **{**asdict(self.margining), "interval": value}))
        if parameter == "rho_bar":
            return replace(self, correlation=_build(CorrelationParams, "correlation",
                                                    **{**asdict(self.correlation), "rho_bar_I": value, "rho_bar_C": value}))
        if parameter == "rho_G":
            return replace(self, correlation=_build(CorrelationParams, "correlation",
                                                    **{**asdict(self.correlation), "rho_G": value}))
        if parameter == "nu_C":
            return replace(self, cir_C=_build(CirppParams, "cir_C", **{**asdict(self.cir_C), "nu": value}))
        raise ConfigError("sweep.parameter", f"must be one of {SWEEP_PARAMETERS}")

    def with_overrides(self, **sim) -> "RunConfig":
        if not sim:
            return self
        return replace(self, simulation=_build(SimulationSettings, "simulation",
                                               **{**asdict(self.simulation), **sim}))


def _section(d: dict, key: str, prefix: str = "") -> dict:
    if key not in d or d[key] is None:
        raise ConfigError(prefix + key, "missing section")
    sec = d[key]
    if not isinstance(sec, dict):
        raise ConfigError(prefix + key, "must be a mapping")
    return copy.deepcopy(sec)


def _build(cls, where: str, **kwargs):
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(where, str(exc)) from None
