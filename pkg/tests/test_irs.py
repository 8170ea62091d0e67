import math

import numpy as np
import pytest

from bccva import ConfigError, DiscountCurve, SwapSpec, fair_rate
from bccva.irs import exposure, swap_exposure
from bccva.path_engine import CorrelationParams, gen_increments
from bccva.simulation import build_grid

from conftest import mc_mean, within_se


def test_fair_rate_flat_curve_hand_value():
    curve = DiscountCurve.flat(0.03)
    dfs = [math.exp(-0.03 * i) for i in range(1, 11)]
    expected = (1 - dfs[-1]) / sum(dfs)
    assert fair_rate(SwapSpec(1.0, 10.0), curve) == pytest.approx(expected, rel=1e-13)


def test_fair_rate_zero_curve():
    assert fair_rate(SwapSpec(1.0, 10.0), DiscountCurve.flat(0.0)) == 0.0


def test_one_period_swap_rate_is_forward(curve):
    p = curve.discount(1.0)
    assert fair_rate(SwapSpec(1.0, 1.0, float_frequency=1), curve) == pytest.approx((1 - p) / p, rel=1e-13)


def test_exposure_zero_at_inception_and_maturity(rates):
    spec = SwapSpec(1.0, 10.0).with_rate(rates.curve)
    assert abs(exposure(spec, rates, 0.0, 0.0, 0.0)[0]) < 1e-12
    assert exposure(spec, rates, 10.0, 0.03, 0.01)[0] == 0.0
    with pytest.raises(ValueError):
        exposure(spec, rates, 10.5, 0.0, 0.0)


def test_direction_flips_sign(rates):
    pay = SwapSpec(1e6, 10.0, 0.03)
    rec = SwapSpec(1e6, 10.0, 0.03, direction="receiver")
    e1 = exposure(pay, rates, 2.0, 0.01, -0.003)
    e2 = exposure(rec, rates, 2.0, 0.01, -0.003)
    np.testing.assert_allclose(e1, -e2, rtol=1e-15)


def test_payer_exposure_increases_with_rates(rates):
    spec = SwapSpec(1.0, 10.0, 0.03)
    x = np.linspace(-0.03, 0.03, 7)
    assert np.all(np.diff(exposure(spec, rates, 3.0, x, np.zeros_like(x))) > 0)


def test_exposure_nested_mc(rates):
    spec = SwapSpec(1.0, 5.0, 0.025)
    t, x0, z0, fixing = 1.25, 0.004, -0.002, 0.985
    value = exposure(spec, rates, t, x0, z0, fixing=fixing)[0]
    events = [d for d in spec.payment_dates() if d > t] + [1.5]
    grid = t + build_grid(5.0 - t, 1 / 24, [e - t for e in events])
    chol = CorrelationParams().cholesky(rates.params)
    dZ, aux = gen_increments(chol, grid, 77, np.arange(40000))
    x, z, int_r = rates.simulate_states(grid, dZ[:, :, :2], aux, x0, z0)
    _, flows = swap_exposure(spec, rates, grid, x, z, running_fixing=fixing)
    pv = np.sum(flows * np.exp(-int_r), axis=1)
    est, se = mc_mean(pv)
    assert within_se(est, value, se), (est, value, se)


def test_cashflows_paid_at_node_are_excluded(rates):
    spec = SwapSpec(1.0, 2.0, 0.02, fixed_frequency=1, float_frequency=1)
    grid = np.array([0.0, 1.0, 2.0])
    x = np.zeros((1, 3))
    eps, flows = swap_exposure(spec, rates, grid, x, x)
    remaining = exposure(spec, rates, 1.0, 0.0, 0.0, fixing=float(rates.bond_price(0.0, 1.0, 0.0, 0.0)))
    assert eps[0, 1] == pytest.approx(remaining[0], rel=1e-12)
    assert flows[0, 1] == pytest.approx(1 / rates.curve.discount(1.0) - 1 - 0.02, rel=1e-12)
    assert eps[0, 2] == 0.0


def test_missing_reset_date_rejected(rates):
    spec = SwapSpec(1.0, 2.0, 0.02)
    with pytest.raises(ValueError, match="reset"):
        swap_exposure(spec, rates, np.array([0.0, 0.7, 1.0, 2.0]), np.zeros((1, 4)), np.zeros((1, 4)))


@pytest.mark.parametrize("kwargs, field", [
    (dict(notional=0.0, maturity=10.0), "swap.notional"),
    (dict(notional=1.0, maturity=10.0, direction="long"), "swap.direction"),
    (dict(notional=1.0, maturity=10.3), "swap.fixed_frequency"),
])
def test_spec_validation(kwargs, field):
    with pytest.raises(ConfigError, match=field):
        SwapSpec(**kwargs)
