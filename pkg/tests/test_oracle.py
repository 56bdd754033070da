import math

import pytest

from tokenomics import econ_core as ec
from tokenomics.errors import OracleError
from tokenomics.first_best import first_best_allocation
from tokenomics.oracle import GridSpec, grid_best_response, grid_first_best

from helpers import ISO, ZERO

R = 0.05
BETA = 1.0 / (1.0 + R)


def one_state(price, tax=0.0, rt=0.0, utility=ISO(0.5, 0.5)):
    """Market conditions with all probability mass on state 1."""
    return dict(
        utility_by_state={1: utility},
        probs={1: 1.0},
        prices={1: price},
        taxes={1: tax},
        returns={1: rt},
        r=R,
    )


def test_zero_utility_prefers_empty_wallet():
    m, value = grid_best_response(m_grid=GridSpec(1.0), **one_state(1.0, utility=ZERO))
    assert m == 0.0
    assert value == 0.0


def test_binding_kink_found_exactly_when_on_grid():
    # u'(a)/p = 1 + r pins a = (0.5/1.05)^2 and the kink m = p*a; an upper
    # bound of exactly 2m puts the kink on the grid midpoint
    a_star = (0.5 / 1.05) ** 2
    m_star = a_star  # price 1, no tax
    m, value = grid_best_response(m_grid=GridSpec(2 * m_star), **one_state(1.0))
    assert m == pytest.approx(m_star, abs=1e-15)
    expected = -m_star + BETA * (m_star + 2 * 0.5 * math.sqrt(a_star) - a_star)
    assert value == pytest.approx(expected, rel=1e-12)


def test_grid_mode_agrees_with_closed_form_inner_search():
    a_star = (0.5 / 1.05) ** 2
    spec = GridSpec(2 * a_star)
    m_closed, _ = grid_best_response(m_grid=spec, **one_state(1.0))
    m_grid, _ = grid_best_response(m_grid=spec, a_grid=GridSpec(1.0, 4001), **one_state(1.0))
    step = spec.upper / (spec.points - 1)
    assert abs(m_grid - m_closed) <= 2 * step


def test_return_equal_to_r_gives_flat_top_and_smallest_tie():
    # carry is free when the return matches r: every m above the satiation
    # level is equally good, and the tie must break to the smallest one
    satiation = 0.25 / (1.0 + R)  # u'(a)=1 at a=0.25, wealth (1+r)m = p*a
    m, value = grid_best_response(m_grid=GridSpec(1.0), **one_state(1.0, rt=R))
    step = 1.0 / 2000
    assert satiation - 1e-12 <= m <= satiation + step
    assert value == pytest.approx(BETA * 0.25, rel=1e-9)


def test_grid_expands_to_reach_interior_optimum():
    a_star = (0.5 / 1.05) ** 2  # optimum near 0.227, beyond the initial grid
    m, _ = grid_best_response(m_grid=GridSpec(0.1), **one_state(1.0))
    assert m == pytest.approx(a_star, abs=2 * 0.4 / 2000)


def test_unbounded_objective_raises():
    # a token return above r makes waiting strictly profitable at any balance
    with pytest.raises(OracleError, match="unbounded"):
        grid_best_response(m_grid=GridSpec(1.0), **one_state(1.0, rt=0.2))


def test_zero_probability_state_is_ignored():
    kwargs = one_state(1.0)
    kwargs["utility_by_state"][0] = ISO(100.0, 0.5)  # huge demand, never drawn
    kwargs["probs"] = {0: 0.0, 1: 1.0}
    kwargs["prices"][0] = 1.0
    kwargs["taxes"][0] = 0.0
    kwargs["returns"][0] = 0.0
    m, _ = grid_best_response(m_grid=GridSpec(1.0), **kwargs)
    assert m == pytest.approx((0.5 / 1.05) ** 2, abs=1e-3)


def test_refinement_approaches_the_kink():
    m_star = (0.5 / 1.05) ** 2
    errors = []
    for points in (101, 1001, 10001):
        m, _ = grid_best_response(m_grid=GridSpec(1.0, points), **one_state(1.0))
        step = 1.0 / (points - 1)
        err = abs(m - m_star)
        assert err <= 2 * step
        errors.append(err)
    assert errors[-1] <= errors[0]


def test_deterministic_across_calls():
    first = grid_best_response(m_grid=GridSpec(1.0), **one_state(0.8, tax=0.1, rt=0.02))
    second = grid_best_response(m_grid=GridSpec(1.0), **one_state(0.8, tax=0.1, rt=0.02))
    assert first == second


# ---------------------------------------------------------------------------
# first-best product grid
# ---------------------------------------------------------------------------


def test_grid_first_best_matches_analytic(det_cfg):
    analytic = first_best_allocation(det_cfg, 1)
    alloc, surplus = grid_first_best(det_cfg, 1)
    step = 2 * analytic.activities["users"] / 2000
    assert abs(alloc.activities["users"] - analytic.activities["users"]) <= step
    gross = 2 * 0.5 * math.sqrt(alloc.activities["users"])
    assert surplus == pytest.approx(gross - alloc.total**2 / 2, rel=1e-9)


def test_grid_first_best_zero_state(iid_cfg):
    alloc, surplus = grid_first_best(iid_cfg, 0)
    assert alloc.total == 0.0
    assert surplus == 0.0


def test_grid_first_best_respects_capacity(het_cfg):
    alloc, _ = grid_first_best(het_cfg, 1)
    assert alloc.total <= ec.BLOCKSPACE_CAPACITY + 1e-9
    assert alloc.congested


def test_grid_first_best_boundary_raises(det_cfg):
    with pytest.raises(OracleError, match="widen the grid"):
        grid_first_best(det_cfg, 1, grids={"users": GridSpec(0.3)})
