import math
import random

import pytest

from tokenomics import econ_core as ec
from tokenomics.first_best import (
    expected_first_best_surplus,
    first_best_allocation,
    flow_surplus,
)

from helpers import ISO, single_user_config, two_type_config

#: planner's activity for the canonical single-user economy, from
#: 0.5 a^(-1/2) = a  =>  a = 0.5^(2/3)
CANONICAL_ACTIVITY = 0.6299605249474366
CANONICAL_SURPLUS = 0.5952753944880749


def test_canonical_uncongested_allocation(det_cfg):
    alloc = first_best_allocation(det_cfg, 1)
    assert not alloc.congested
    assert alloc.shadow_marginal == 0.0
    assert alloc.activities["users"] == pytest.approx(CANONICAL_ACTIVITY, abs=1e-10)
    assert alloc.total == pytest.approx(CANONICAL_ACTIVITY, abs=1e-10)
    assert flow_surplus(det_cfg, alloc, 1) == pytest.approx(CANONICAL_SURPLUS, abs=1e-10)


def test_congested_two_type_allocation():
    # strong demand from both types: ration one unit at the shadow value
    # sqrt(2.5), giving activities (2/x)^2 = 1.6 and (1/x)^2 = 0.4
    cfg = ec.EconomyConfig(
        r=0.05,
        gamma=0.0,
        agent_types=(
            ec.AgentTypeSpec(mass=0.5, utility_by_state={1: ISO(2.0, 0.5)}, name="hi"),
            ec.AgentTypeSpec(mass=0.5, utility_by_state={1: ISO(1.0, 0.5)}, name="lo"),
        ),
        cost=ec.CostFn(1.0, 1.0),
        shocks=ec.ShockProcess(ec.ShockKind.DETERMINISTIC),
    )
    alloc = first_best_allocation(cfg, 1)
    assert alloc.congested
    assert alloc.total == pytest.approx(1.0, abs=1e-10)
    assert alloc.shadow_marginal == pytest.approx(1.5811388300841898, rel=1e-10)
    assert alloc.activities["hi"] == pytest.approx(1.6, rel=1e-9)
    assert alloc.activities["lo"] == pytest.approx(0.4, rel=1e-9)
    # rationing must price at or above marginal cost at capacity
    assert alloc.shadow_marginal >= ec.c_prime(cfg.cost, 1.0)


def test_total_is_mass_weighted_sum(het_cfg):
    for state in (0, 1):
        alloc = first_best_allocation(het_cfg, state)
        expected = math.fsum(
            t.mass * alloc.activities[t.name] for t in het_cfg.agent_types
        )
        assert alloc.total == pytest.approx(expected, abs=1e-12)


def test_equal_marginal_utilities_at_optimum(het_cfg):
    alloc = first_best_allocation(het_cfg, 1)
    marginals = [
        ec.u_prime(t.utility_in(1), alloc.activities[t.name])
        for t in het_cfg.agent_types
    ]
    assert marginals[0] == pytest.approx(marginals[1], rel=1e-9)
    if alloc.congested:
        assert marginals[0] == pytest.approx(alloc.shadow_marginal, rel=1e-9)


def test_no_demand_state_allocates_nothing(iid_cfg):
    alloc = first_best_allocation(iid_cfg, 0)
    assert alloc.total == 0.0
    assert alloc.activities == {"users": 0.0}


def test_random_perturbations_never_improve(det_cfg, het_cfg):
    """The reported optimum beats 100 random feasible perturbations."""
    rng = random.Random(20260817)
    for cfg, state in ((det_cfg, 1), (het_cfg, 1), (het_cfg, 0)):
        alloc = first_best_allocation(cfg, state)
        base = flow_surplus(cfg, alloc, state)
        for _ in range(100):
            candidate = {
                name: max(a * (1.0 + rng.uniform(-0.05, 0.05)), 0.0)
                for name, a in alloc.activities.items()
            }
            total = math.fsum(
                t.mass * candidate[t.name] for t in cfg.agent_types
            )
            if total > ec.BLOCKSPACE_CAPACITY:
                continue
            perturbed = type(alloc)(
                activities=candidate, total=total, congested=False, shadow_marginal=0.0
            )
            assert flow_surplus(cfg, perturbed, state) <= base + 1e-12


def test_surplus_monotone_in_demand_scale():
    surpluses = []
    for scale in (0.25, 0.5, 1.0, 2.0):
        cfg = single_user_config(ec.ShockKind.DETERMINISTIC, scale=scale)
        alloc = first_best_allocation(cfg, 1)
        surpluses.append(flow_surplus(cfg, alloc, 1))
    assert all(x < y for x, y in zip(surpluses, surpluses[1:]))


def test_expected_surplus_weights_states(common_cfg):
    high = flow_surplus(common_cfg, first_best_allocation(common_cfg, 1), 1)
    low = flow_surplus(common_cfg, first_best_allocation(common_cfg, 0), 0)
    rho = common_cfg.shocks.rho
    assert expected_first_best_surplus(common_cfg) == pytest.approx(
        rho * high + (1 - rho) * low, abs=1e-12
    )


def test_iid_expected_surplus_uses_cross_section(iid_cfg):
    # under idiosyncratic draws only a fraction rho is active, so the benchmark
    # must beat the naive state-1 surplus weighted by rho (cost convexity)
    expected = expected_first_best_surplus(iid_cfg)
    naive_high = flow_surplus(iid_cfg, first_best_allocation(iid_cfg, 1), 1)
    assert expected > iid_cfg.shocks.rho * naive_high - 1e-12
