import math

import pytest
from hypothesis import given, strategies as st

from numsim.num_core import (PriceState, objective, price_update, step_size,
                             user_demand, utility, utility_slope)
from numsim.topology import single_link


def grid_demand(lambda_s, x_max, step=1e-4):
    """Independent oracle: brute-force maximizer of utility(x) - lambda*x."""
    best_x, best_v = 0.0, utility(0.0)
    n = int(round(x_max / step))
    for i in range(n + 1):
        x = i * step
        v = utility(x) - lambda_s * x
        if v > best_v:
            best_x, best_v = x, v
    return best_x


def test_utility_values():
    assert utility(0.0) == pytest.approx(0.5)
    assert utility(10.0) == pytest.approx(1.0 / (1.0 + math.exp(-10.0)))
    with pytest.raises(ValueError):
        utility(-1.0)


def test_utility_monotone_and_bounded():
    xs = [i * 0.25 for i in range(41)]
    vals = [utility(x) for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert all(0.5 <= v < 1.0 for v in vals)


def test_utility_slope_peak_and_derivative():
    assert utility_slope(0.0) == pytest.approx(0.25)
    for x in (0.1, 1.0, 3.0, 7.5):
        eps = 1e-6
        numeric = (utility(x + eps) - utility(x - eps)) / (2 * eps)
        assert utility_slope(x) == pytest.approx(numeric, abs=1e-8)


def test_user_demand_boundaries():
    assert user_demand(0.0, 10.0) == 10.0
    assert user_demand(0.25, 10.0) == 0.0
    assert user_demand(0.4, 10.0) == 0.0


def test_user_demand_example():
    # frozen oracle: grid search at step 1e-4 gives 2.0634 for lambda=0.1
    assert user_demand(0.1, 10.0) == pytest.approx(2.0634, abs=1e-3)
    assert user_demand(0.1, 10.0) == pytest.approx(grid_demand(0.1, 10.0),
                                                   abs=1e-3)


def test_user_demand_matches_grid_oracle():
    for lam in (0.01, 0.05, 0.12, 0.2, 0.24, 0.3):
        assert user_demand(lam, 10.0) == pytest.approx(
            grid_demand(lam, 10.0), abs=1e-3)


def test_user_demand_stationarity():
    # interior demand satisfies the first-order condition U'(x) = lambda
    for lam in (0.01, 0.05, 0.1, 0.2):
        x = user_demand(lam, 10.0)
        assert utility_slope(x) == pytest.approx(lam, abs=1e-9)


def test_user_demand_validation():
    with pytest.raises(ValueError):
        user_demand(-0.1, 10.0)
    with pytest.raises(ValueError):
        user_demand(0.1, 0.0)


@given(st.floats(min_value=0.0, max_value=0.5),
       st.floats(min_value=0.1, max_value=100.0))
def test_user_demand_range(lam, x_max):
    x = user_demand(lam, x_max)
    assert 0.0 <= x <= x_max


@given(st.floats(min_value=0.0, max_value=0.5),
       st.floats(min_value=0.0, max_value=0.5))
def test_user_demand_nonincreasing(a, b):
    lo, hi = sorted((a, b))
    assert user_demand(lo, 10.0) >= user_demand(hi, 10.0)


def test_step_size_schedule():
    assert step_size(0) == 1.0
    assert step_size(9) == pytest.approx(0.1)
    assert step_size(0, sigma0=2.0) == 2.0
    vals = [step_size(t) for t in range(50)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        step_size(-1)


def test_price_update_direction_and_floor():
    # overloaded link raises the price, underloaded lowers it
    assert price_update(0.1, 0.5, 10.0, 12.0) == pytest.approx(1.1)
    assert price_update(0.1, 0.01, 10.0, 8.0) == pytest.approx(0.08)
    assert price_update(0.1, 0.5, 10.0, 8.0) == 0.0
    assert price_update(0.1, 0.5, 10.0, 8.0, lambda_min=0.05) == 0.05
    # flow exactly at capacity is a fixed point
    assert price_update(0.123, 0.5, 10.0, 10.0) == pytest.approx(0.123)
    with pytest.raises(ValueError):
        price_update(0.1, 0.0, 10.0, 10.0)


@given(st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=1e-3, max_value=1.0),
       st.floats(min_value=0.0, max_value=40.0))
def test_price_update_never_below_floor(lam, sigma, flow):
    assert price_update(lam, sigma, 10.0, flow) >= 0.0


def test_objective_values():
    net = single_link()
    rates0 = {uid: 0.0 for uid in net.users}
    assert objective(net, rates0) == pytest.approx(1.5)
    rates_opt = {uid: 10.0 / 3.0 for uid in net.users}
    # frozen oracle: 3 * utility(10/3)
    assert objective(net, rates_opt) == pytest.approx(2.896664413, abs=1e-9)


def test_objective_monotone_in_rates():
    net = single_link()
    low = objective(net, {"u0": 1.0, "u1": 1.0, "u2": 1.0})
    high = objective(net, {"u0": 2.0, "u1": 1.0, "u2": 1.0})
    assert high > low


def test_price_state_validation():
    PriceState(lam={"L0": 0.1}, lambda_min=0.05)
    with pytest.raises(ValueError):
        PriceState(lam={"L0": 0.1}, sigma0=0.0)
    with pytest.raises(ValueError):
        PriceState(lam={"L0": 0.1}, lambda_min=-0.1)
    with pytest.raises(ValueError):
        PriceState(lam={"L0": 0.01}, lambda_min=0.05)
