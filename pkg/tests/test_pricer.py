import itertools
import math

import numpy as np
import pytest

from bccva import MarginingRule, RecoveryParams, estimate, exposure_profiles
from bccva.pricer import (
    TERMS,
    mean_se,
    nested_on_default_exposure,
    path_bccva,
    path_terms_compact,
    path_terms_ledger,
    special_cases,
    summarize,
)
from bccva.simulation import PathSet

from conftest import within_se

SIGNS = (-1.0, -0.5, 0.0, 0.5, 1.0)


def _one(**kw):
    base = dict(eps_tau=0.0, eps_I=0.0, eps_C=0.0, coll=0.0, cpty_default=False, inv_default=False,
                disc=1.0, rec=RecoveryParams())
    base.update(kw)
    return {k: float(v[0]) for k, v in path_terms_compact(
        *(np.atleast_1d(base[k]) for k in ("eps_tau", "eps_I", "eps_C", "coll", "cpty_default", "inv_default", "disc")),
        base["rec"]).items()}


def test_no_default_all_zero():
    assert all(v == 0 for v in _one(eps_tau=1, eps_I=1, coll=0.3).values())


def test_counterparty_default_uncollateralized():
    t = _one(eps_tau=1, eps_I=1, cpty_default=True)
    assert t["ccva_lgd"] == pytest.approx(0.6)
    assert t["ccva_lgd_prime"] == t["cdva_lgd"] == t["cdva_lgd_prime"] == t["mismatch"] == 0


def test_counterparty_default_investor_posted():
    t = _one(eps_tau=1, eps_I=1, coll=-0.5, cpty_default=True)
    assert t["ccva_lgd"] + t["ccva_lgd_prime"] == pytest.approx(0.9)
    ledger = path_terms_ledger([1.0], [0.0], [-0.5], [True], [False], [1.0], RecoveryParams())[0]
    # ledger minus the risk-free value 1 equals minus the CCVA contribution
    assert ledger - 1.0 == pytest.approx(-0.9)


def test_ledger_case_values():
    rec = RecoveryParams(0.4, 0.3, 0.5, 0.7)
    assert path_terms_ledger([2.0], [0.0], [0.0], [True], [False], [1.0], rec)[0] == pytest.approx(0.3 * 2.0)
    no_rehyp = rec.effective(False)
    got = path_terms_ledger([2.0], [0.0], [-0.5], [True], [False], [1.0], no_rehyp)[0]
    assert got == pytest.approx(0.3 * 2.0 - (-0.5) + (-0.5))  # C_tau plus REC_C eps - C


def _identity_residual(eps_tau, e_i, e_c, c, cpty, inv, d, rec):
    terms = path_terms_compact(eps_tau, e_i, e_c, c, cpty, inv, d, rec)
    ledger = path_terms_ledger(e_i, e_c, c, cpty, inv, d, rec)
    lhs = ledger - np.where(cpty | inv, d * eps_tau, 0.0)
    return lhs, path_bccva(terms)


def test_ledger_equals_compact_exhaustive():
    rng = np.random.default_rng(2024)
    grid = np.array(list(itertools.product(SIGNS, SIGNS, SIGNS)))
    for _ in range(40):
        r = np.sort(rng.uniform(0, 1, 2))
        s = np.sort(rng.uniform(0, 1, 2))
        rec = RecoveryParams(rec_I=r[0], rec_I_prime=r[1], rec_C=s[0], rec_C_prime=s[1])
        for cpty, inv in ((True, False), (False, True)):
            n = len(grid)
            eps_tau = rng.uniform(-1, 1, n)
            d = rng.uniform(0.5, 1.0, n)
            lhs, rhs = _identity_residual(eps_tau, grid[:, 0], grid[:, 1], grid[:, 2],
                                          np.full(n, cpty), np.full(n, inv), d, rec)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-15)


def test_no_rehyp_kills_prime_terms():
    rng = np.random.default_rng(1)
    n = 1000
    rec = RecoveryParams(0.3, 0.2, 0.5, 0.6).effective(False)
    t = path_terms_compact(*rng.normal(size=(4, n)), rng.random(n) < 0.3, rng.random(n) < 0.3,
                           rng.uniform(0.5, 1, n), rec)
    assert not t["ccva_lgd_prime"].any() and not t["cdva_lgd_prime"].any()


def test_rehyp_dominance_pathwise():
    rng = np.random.default_rng(9)
    n = 5000
    e, c = rng.normal(size=n), rng.normal(size=n)
    np.testing.assert_allclose(np.maximum(e - c, 0),
                               np.maximum(np.maximum(e, 0) - np.maximum(c, 0), 0)
                               + np.maximum(np.minimum(e, 0) - np.minimum(c, 0), 0), atol=1e-15)
    cpty = rng.random(n) < 0.5
    inv = ~cpty
    d = np.ones(n)
    base = RecoveryParams(0.4, 0.4, 0.4, 0.4)
    with_rh = path_terms_compact(e, e, e, c, cpty, inv, d, base)
    no_rh = path_terms_compact(e, e, e, c, cpty, inv, d, base.effective(False))
    ccva = lambda t: t["ccva_lgd"] + t["ccva_lgd_prime"]  # noqa: E731
    cdva = lambda t: t["cdva_lgd"] + t["cdva_lgd_prime"]  # noqa: E731
    assert np.all(ccva(with_rh) >= ccva(no_rh)) and np.all(cdva(with_rh) >= cdva(no_rh))


def test_report_identity_exact():
    rng = np.random.default_rng(3)
    terms = {k: rng.normal(size=777) for k in TERMS}
    rep = summarize(terms, 1e6, "nested", True)
    assert rep.bccva.value == rep.mismatch.value - rep.ccva.value + rep.cdva.value
    d = rep.to_dict()
    assert d["bccva"]["value_bp"] == pytest.approx(1e4 * rep.bccva.value / 1e6)
    assert "contributions" not in d


def test_special_case_names():
    rec = RecoveryParams()
    assert "perfect_collateralization" in special_cases(MarginingRule(mode="perfect"), rec)
    assert "unilateral_cva" in special_cases(MarginingRule(mode="none"), rec, investor_default_free=True)
    assert "no_rehypothecation" in special_cases(MarginingRule(), rec.effective(False))
    assert "rehypothecation_worst_case" in special_cases(MarginingRule(), rec)


def _hand_paths(n, K, h, T=5.0, seed=0):
    from bccva.path_engine import copula_uniform_pair, sample_default_times

    grid = np.linspace(0, T, 61)
    ones = np.ones((n, 1))
    xi_I, xi_C = copula_uniform_pair(seed, np.arange(n), 0.0)
    draw, idx_I, idx_C = sample_default_times(xi_I, xi_C, 0.0 * grid * ones, h * grid * ones, grid)
    return PathSet(grid=grid, maturity=T, eps=np.full((n, len(grid)), K), int_r=np.zeros((n, len(grid))),
                   tau_I=draw.tau_I, tau_C=draw.tau_C, idx_I=idx_I, idx_C=idx_C, path_ids=np.arange(n))


def test_unilateral_cva_closed_form():
    K, h, T = 2.5, 0.07, 5.0
    paths = _hand_paths(100000, K, h, T)
    rec = RecoveryParams(0.4, 0.35, 1.0, 1.0)
    rep = estimate(paths, MarginingRule(mode="none"), rec, investor_default_free=True)
    assert within_se(rep.bccva.value, -0.65 * K * (1 - math.exp(-h * T)), rep.bccva.se)
    assert "unilateral_cva" in rep.special_cases


def test_perfect_collateral_zero():
    paths = _hand_paths(2000, 1.0, 0.1)
    rep = estimate(paths, MarginingRule(mode="perfect"), RecoveryParams())
    assert rep.bccva.value == 0.0


def test_empty_path_set():
    paths = _hand_paths(1, 1.0, 0.1)
    empty = PathSet(paths.grid, paths.maturity, paths.eps[:0], paths.int_r[:0], paths.tau_I[:0],
                    paths.tau_C[:0], paths.idx_I[:0], paths.idx_C[:0])
    with pytest.raises(ValueError, match="empty"):
        estimate(empty, MarginingRule(), RecoveryParams())
    with pytest.raises(ValueError, match="empty"):
        mean_se([])


def test_profiles_perfect_and_one_sided():
    paths = _hand_paths(10, 0.0, 0.1)
    rng = np.random.default_rng(0)
    paths.eps = rng.normal(size=paths.eps.shape)
    paths.eps[:, 0] = 0.0
    grid_rule = MarginingRule(mode="perfect")
    prof = exposure_profiles(paths, grid_rule)
    for c in ("mean_net_pos_rehyp", "mean_net_neg_rehyp", "mean_net_pos_norehyp", "mean_net_neg_norehyp"):
        np.testing.assert_allclose(prof[c][:-1], 0.0, atol=1e-15)
    assert set(prof) >= {"time", "mean_eps", "p95_eps", "se_mean_eps"}


def test_one_sided_posting_dominance(cir_I, cir_C, rates):
    from bccva.path_engine import CorrelationParams
    from bccva.simulation import Model, build_grid, simulate_paths
    from bccva import SwapSpec

    swap = SwapSpec(1e6, 5.0)
    rule = MarginingRule(interval=0.25, threshold_I=math.inf, threshold_C=1e4, mta=1e3)
    model = Model(rates, cir_I, cir_C, CorrelationParams().cholesky(rates.params), 0.0, swap)
    grid = build_grid(5.0, 1 / 12, list(swap.payment_dates()) + list(rule.margin_dates(5.0)))
    paths = simulate_paths(model, grid, 1, np.arange(2000))
    prof = exposure_profiles(paths, rule)
    assert np.all(prof["mean_net_pos_norehyp"] <= prof["mean_eps_pos"] + 1e-9)


def test_nested_inner_budget_must_be_positive(rates):
    paths = _hand_paths(2, 1.0, 0.1)
    with pytest.raises(ValueError, match="inner"):
        nested_on_default_exposure(None, paths, 0, 1, "I", MarginingRule(), RecoveryParams(), 0, 0)
