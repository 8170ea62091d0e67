"""Bilateral collateralized CVA: path terms, estimators, exposure profiles.

Conventions (investor's view): CCVA and CDVA are reported as non-negative
magnitudes and

    BCCVA = mismatch - CCVA + CDVA

where ``mismatch`` is the discounted gap between mid-market and on-default
exposure, identically zero under mid-market close-out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from . import path_engine as pe
from .collateral import CollateralPath, MarginingRule, simulate_collateral
from .errors import ConfigError
from .simulation import Model, PathSet, running_fixing, simulate_paths

TERMS = ("mismatch", "ccva_lgd", "ccva_lgd_prime", "cdva_lgd", "cdva_lgd_prime")
CLOSEOUTS = ("mid_market", "nested")


def pos(x):
    return np.maximum(x, 0.0)


def neg(x):
    return np.minimum(x, 0.0)


@dataclass(frozen=True)
class RecoveryParams:
    rec_I: float = 0.4
    rec_C: float = 0.4
    rec_I_prime: float = 0.4
    rec_C_prime: float = 0.4

    def __post_init__(self):
        for name in ("rec_I", "rec_C", "rec_I_prime", "rec_C_prime"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"recovery.{name}", "must lie in [0, 1]")
        if self.rec_I_prime < self.rec_I:
            raise ConfigError("recovery.rec_I_prime", "collateral recovery must be >= trade recovery")
        if self.rec_C_prime < self.rec_C:
            raise ConfigError("recovery.rec_C_prime", "collateral recovery must be >= trade recovery")

    @property
    def lgd_I(self):
        return 1.0 - self.rec_I

    @property
    def lgd_C(self):
        return 1.0 - self.rec_C

    @property
    def lgd_I_prime(self):
        return 1.0 - self.rec_I_prime

    @property
    def lgd_C_prime(self):
        return 1.0 - self.rec_C_prime

    def effective(self, rehypothecation: bool) -> "RecoveryParams":
        """Without re-hypothecation posted collateral is returned in full."""
        if rehypothecation:
            return self
        return RecoveryParams(self.rec_I, self.rec_C, 1.0, 1.0)


def path_terms_compact(eps_tau, eps_I, eps_C, coll, cpty_default, inv_default, disc,
                       rec: RecoveryParams) -> dict:
    """Per-path contributions of the five terms of the general BCCVA formula.

    CCVA/CDVA components are returned as non-negative magnitudes.
    """
    cpty = np.asarray(cpty_default, dtype=bool)
    inv = np.asarray(inv_default, dtype=bool)
    d = np.asarray(disc, dtype=float)
    eps_tau, eps_I, eps_C, coll = (np.asarray(a, dtype=float) for a in (eps_tau, eps_I, eps_C, coll))
    on_default = np.where(cpty, eps_I, 0.0) + np.where(inv, eps_C, 0.0)
    mismatch = -np.where(cpty | inv, d * (eps_tau - on_default), 0.0)
    return {
        "mismatch": mismatch,
        "ccva_lgd": np.where(cpty, d * rec.lgd_C * pos(pos(eps_I) - pos(coll)), 0.0),
        "ccva_lgd_prime": np.where(cpty, d * rec.lgd_C_prime * pos(neg(eps_I) - neg(coll)), 0.0),
        "cdva_lgd": -np.where(inv, d * rec.lgd_I * neg(neg(eps_C) - neg(coll)), 0.0),
        "cdva_lgd_prime": -np.where(inv, d * rec.lgd_I_prime * neg(pos(eps_C) - pos(coll)), 0.0),
    }


def path_bccva(terms: dict):
    return terms["mismatch"] - (terms["ccva_lgd"] + terms["ccva_lgd_prime"]) + (
        terms["cdva_lgd"] + terms["cdva_lgd_prime"]
    )


def path_terms_ledger(eps_I, eps_C, coll, cpty_default, inv_default, disc,
                      rec: RecoveryParams):
    """Discounted default-leg cash value from the case-by-case close-out cash flows.

    Returns D(0, tau) * (C_tau + close-out payment) on default paths and 0
    otherwise. Boundary cases (zero exposure or zero collateral) are folded
    into the neighbouring branch; every branch agrees there.
    """
    cpty = np.asarray(cpty_default, dtype=bool)
    inv = np.asarray(inv_default, dtype=bool)
    d = np.asarray(disc, dtype=float)
    e_i, e_c, c = (np.asarray(a, dtype=float) for a in (eps_I, eps_C, coll))
    net_i = e_i - c
    rc, rcp = rec.rec_C, rec.rec_C_prime
    # counterparty defaults first, investor values the close-out
    cpty_pay = np.select(
        [(e_i > 0) & (c > 0), (e_i > 0) & (c <= 0), (e_i <= 0) & (c > 0)],
        [
            rc * pos(net_i) + neg(net_i),
            rc * e_i - rcp * c,
            net_i,
        ],
        default=neg(net_i) + rcp * pos(net_i),
    )
    net_c = e_c - c
    ri, rip = rec.rec_I, rec.rec_I_prime
    inv_pay = np.select(
        [(e_c < 0) & (c < 0), (e_c < 0) & (c >= 0), (e_c >= 0) & (c < 0)],
        [
            ri * neg(net_c) + pos(net_c),
            ri * e_c - rip * c,
            net_c,
        ],
        default=pos(net_c) + rip * neg(net_c),
    )
    return np.where(cpty, d * (c + cpty_pay), 0.0) + np.where(inv, d * (c + inv_pay), 0.0)


@dataclass
class Estimate:
    value: float
    se: float

    def bp(self, notional: float) -> tuple[float, float]:
        return 1e4 * self.value / notional, 1e4 * self.se / notional


def mean_se(x) -> Estimate:
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n == 0:
        raise ValueError("empty path set")
    m = math.fsum(x) / n
    if n < 2:
        return Estimate(m, float("nan"))
    var = math.fsum((x - m) ** 2) / (n - 1)
    return Estimate(m, math.sqrt(var / n))


@dataclass
class AdjustmentReport:
    """BCCVA decomposition with Monte Carlo standard errors.

    ``contributions`` keeps the per-path terms (not serialised) so callers
    can form paired differences across scenarios run on common numbers.
    """

    bccva: Estimate
    ccva: Estimate
    cdva: Estimate
    mismatch: Estimate
    components: dict
    n_paths: int
    notional: float
    closeout: str
    rehypothecation: bool
    special_cases: list = field(default_factory=list)
    contributions: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        def pack(e: Estimate):
            v, s = e.bp(self.notional)
            return {"value": e.value, "se": e.se, "value_bp": v, "se_bp": s}

        return {
            "bccva": pack(self.bccva),
            "ccva": pack(self.ccva),
            "cdva": pack(self.cdva),
            "mismatch": pack(self.mismatch),
            "components": {k: pack(v) for k, v in self.components.items()},
            "n_paths": self.n_paths,
            "notional": self.notional,
            "closeout": self.closeout,
            "rehypothecation": self.rehypothecation,
            "special_cases": list(self.special_cases),
        }


def summarize(terms: dict, notional: float, closeout: str, rehypothecation: bool,
              special_cases=()) -> AdjustmentReport:
    comps = {k: mean_se(terms[k]) for k in TERMS}
    ccva_path = terms["ccva_lgd"] + terms["ccva_lgd_prime"]
    cdva_path = terms["cdva_lgd"] + terms["cdva_lgd_prime"]
    ccva = Estimate(comps["ccva_lgd"].value + comps["ccva_lgd_prime"].value, mean_se(ccva_path).se)
    cdva = Estimate(comps["cdva_lgd"].value + comps["cdva_lgd_prime"].value, mean_se(cdva_path).se)
    mism = comps["mismatch"]
    bccva = Estimate(mism.value - ccva.value + cdva.value, mean_se(path_bccva(terms)).se)
    return AdjustmentReport(
        bccva=bccva,
        ccva=ccva,
        cdva=cdva,
        mismatch=mism,
        components={k: comps[k] for k in TERMS if k != "mismatch"},
        n_paths=len(terms["mismatch"]),
        notional=notional,
        closeout=closeout,
        rehypothecation=rehypothecation,
        special_cases=list(special_cases),
        contributions=terms,
    )


def special_cases(rule: MarginingRule, rec: RecoveryParams, investor_default_free: bool = False,
                  closeout: str = "mid_market") -> list[str]:
    """Names of the textbook formulas the configuration reduces to."""
    out = []
    if closeout == "mid_market":
        out.append("mid_market_closeout")
    if rule.mode == "perfect":
        out.append("perfect_collateralization")
    if rule.mode == "none":
        out.append("uncollateralized_bcva")
        if investor_default_free:
            out.append("unilateral_cva")
    elif rec.rec_I_prime == 1.0 and rec.rec_C_prime == 1.0:
        out.append("no_rehypothecation")
    elif rec.rec_I_prime == rec.rec_I and rec.rec_C_prime == rec.rec_C:
        out.append("rehypothecation_worst_case")
    return out


def collateral_for(paths: PathSet, rule: MarginingRule) -> CollateralPath:
    return simulate_collateral(paths.eps, paths.int_r, paths.grid, rule, paths.maturity)


def path_contributions(paths: PathSet, rule: MarginingRule, rec: RecoveryParams,
                       coll: CollateralPath | None = None, eps_I=None, eps_C=None) -> dict:
    """Per-path term contributions; on-default exposures default to mid-market."""
    if coll is None:
        coll = collateral_for(paths, rule)
    cpty, inv, idx, disc = paths.default_info()
    rows = np.arange(paths.n)
    eps_tau = paths.eps[rows, idx]
    c_tau = coll.at_default(idx)
    e_i = eps_tau if eps_I is None else eps_I
    e_c = eps_tau if eps_C is None else eps_C
    return path_terms_compact(eps_tau, e_i, e_c, c_tau, cpty, inv, disc, rec)


def estimate(paths: PathSet, rule: MarginingRule, recoveries: RecoveryParams,
             closeout: str = "mid_market", *, notional: float = 1.0, model: Model | None = None,
             seed: int = 0, inner_paths: int = 0, investor_default_free: bool = False,
             coll: CollateralPath | None = None) -> AdjustmentReport:
    """Estimate BCCVA, CCVA and CDVA from simulated paths.

    Re-hypothecation is governed by ``rule.rehypothecation``: when off, the
    collateral recoveries are set to 1.
    """
    if paths.n == 0:
        raise ValueError("empty path set")
    if closeout not in CLOSEOUTS:
        raise ConfigError("closeout", f"must be one of {CLOSEOUTS}")
    rec = recoveries.effective(rule.rehypothecation)
    if coll is None:
        coll = collateral_for(paths, rule)
    eps_I = eps_C = None
    if closeout == "nested":
        if model is None:
            raise ValueError("nested close-out needs the model")
        eps_I, eps_C = nested_exposures(model, paths, rule, rec, seed, inner_paths)
    terms = path_contributions(paths, rule, rec, coll, eps_I, eps_C)
    cases = special_cases(rule, rec, investor_default_free, closeout)
    return summarize(terms, notional, closeout, rule.rehypothecation, cases)


def nested_exposures(model: Model, paths: PathSet, rule: MarginingRule, rec: RecoveryParams,
                     seed: int, inner_paths: int):
    """On-default exposures for every defaulting path (mid-market elsewhere)."""
    cpty, inv, idx, _ = paths.default_info()
    rows = np.arange(paths.n)
    eps_I = paths.eps[rows, idx].copy()
    eps_C = eps_I.copy()
    for r in np.nonzero(cpty | inv)[0]:
        survivor = "I" if cpty[r] else "C"
        val = nested_on_default_exposure(model, paths, int(r), int(idx[r]), survivor, rule, rec,
                                         seed, inner_paths)
        if survivor == "I":
            eps_I[r] = val
        else:
            eps_C[r] = val
    return eps_I, eps_C


def nested_on_default_exposure(model: Model, paths: PathSet, row: int, k: int, survivor: str,
                               rule: MarginingRule, rec: RecoveryParams, seed: int,
                               inner_paths: int) -> float:
    """Survivor's close-out value including its own default risk on a replacement deal.

    The replacement trade is the same swap against a default-free party with
    the same margining rule and a freshly opened collateral account. The
    survivor's default after ``grid[k]`` is driven by a fresh exponential
    trigger on its inner-simulated cumulative intensity. ``survivor`` is
    ``"I"`` (counterparty defaulted, returns eps_I) or ``"C"``.
    """
    if inner_paths < 1:
        raise ValueError("nested close-out needs a positive inner path budget")
    if paths.x is None:
        raise ValueError("nested close-out needs simulated states on the path set")
    grid = paths.grid[k:]
    mid = float(paths.eps[row, k])
    if len(grid) < 2 or grid[0] >= paths.maturity - 1e-9:
        return mid
    pid = int(paths.path_ids[row]) if paths.path_ids is not None else row
    inner_ids = (pid << 20) + np.arange(inner_paths)
    start = {
        "x": paths.x[row, k],
        "z": paths.z[row, k],
        "y_I": paths.y_I[row, k],
        "y_C": paths.y_C[row, k],
        "fixing": running_fixing(model, paths, row, k),
    }
    trigger = -log_ndtr(pe.normals(seed, pe.NESTED + 1, inner_ids, 1)[:, 0])
    never = np.full(inner_paths, np.inf)
    xi = (trigger, never) if survivor == "I" else (never, trigger)
    inner = simulate_paths(model, grid, seed, inner_ids, stream=pe.NESTED, start=start, xi=xi,
                           keep_states=False)
    coll = simulate_collateral(inner.eps, inner.int_r, grid, rule, paths.maturity)
    cpty, inv, idx, disc = inner.default_info()
    rws = np.arange(inner_paths)
    e = inner.eps[rws, idx]
    c = coll.at_default(idx)
    if survivor == "I":
        adj = -(rec.lgd_I * neg(neg(e) - neg(c)) + rec.lgd_I_prime * neg(pos(e) - pos(c)))
        adj = np.where(inv, disc * adj, 0.0)
        return mid + math.fsum(adj) / inner_paths
    adj = rec.lgd_C * pos(pos(e) - pos(c)) + rec.lgd_C_prime * pos(neg(e) - neg(c))
    adj = np.where(cpty, disc * adj, 0.0)
    return mid - math.fsum(adj) / inner_paths


PROFILE_COLUMNS = (
    "mean_eps",
    "p95_eps",
    "mean_eps_pos",
    "mean_eps_neg",
    "mean_net_pos_rehyp",
    "mean_net_neg_rehyp",
    "mean_net_pos_norehyp",
    "mean_net_neg_norehyp",
)
_MEAN_COLUMNS = tuple(c for c in PROFILE_COLUMNS if c != "p95_eps")


def profile_quantities(eps, coll_pre) -> dict:
    """Pathwise exposure quantities entering the expected-exposure profiles."""
    c = coll_pre
    return {
        "mean_eps": eps,
        "mean_eps_pos": pos(eps),
        "mean_eps_neg": neg(eps),
        "mean_net_pos_rehyp": pos(eps - c),
        "mean_net_neg_rehyp": neg(eps - c),
        "mean_net_pos_norehyp": pos(pos(eps) - pos(c)),
        "mean_net_neg_norehyp": neg(neg(eps) - neg(c)),
    }


class ProfileAccumulator:
    """Streams per-chunk sums so profiles can be built from batched paths."""

    def __init__(self, grid):
        self.grid = np.asarray(grid)
        self.n = 0
        self.sums = {c: np.zeros(len(grid)) for c in _MEAN_COLUMNS}
        self.sumsq = {c: np.zeros(len(grid)) for c in _MEAN_COLUMNS}
        self._eps = []

    def add(self, eps, coll_pre):
        q = profile_quantities(eps, coll_pre)
        for c in _MEAN_COLUMNS:
            self.sums[c] += q[c].sum(axis=0)
            self.sumsq[c] += (q[c] ** 2).sum(axis=0)
        self._eps.append(np.asarray(eps))
        self.n += eps.shape[0]

    def result(self) -> dict:
        if self.n == 0:
            raise ValueError("empty path set")
        n = self.n
        out = {"time": self.grid.copy()}
        for c in PROFILE_COLUMNS:
            if c == "p95_eps":
                out[c] = np.percentile(np.concatenate(self._eps, axis=0), 95, axis=0)
                continue
            m = self.sums[c] / n
            var = np.maximum(self.sumsq[c] / n - m * m, 0.0) * n / max(n - 1, 1)
            out[c] = m
            out["se_" + c] = np.sqrt(var / n)
        return out


def exposure_profiles(paths: PathSet, rule: MarginingRule, coll: CollateralPath | None = None) -> dict:
    """Per grid time: mean and 95th percentile of the exposure and the collateralized profiles."""
    if paths.n == 0:
        raise ValueError("empty path set")
    if coll is None:
        coll = collateral_for(paths, rule)
    acc = ProfileAccumulator(paths.grid)
    acc.add(paths.eps, coll.pre)
    return acc.result()
