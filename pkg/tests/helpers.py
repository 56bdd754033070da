"""Config builders shared across the test modules."""

from __future__ import annotations

from pathlib import Path

from tokenomics import econ_core as ec

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

ISO = ec.UtilityFn
ZERO = ec.ZeroUtility()


def single_user_config(
    kind: ec.ShockKind,
    *,
    r: float = 0.05,
    gamma: float = 0.0,
    rho: float = 0.5,
    scale: float = 0.5,
    curvature: float = 0.5,
    cost: tuple[float, float] = (1.0, 1.0),
) -> ec.EconomyConfig:
    """One unit-mass type, active only under a positive shock."""
    return ec.EconomyConfig(
        r=r,
        gamma=gamma,
        agent_types=(
            ec.AgentTypeSpec(
                mass=1.0,
                utility_by_state={0: ZERO, 1: ISO(scale, curvature)},
                name="users",
            ),
        ),
        cost=ec.CostFn(*cost),
        shocks=ec.ShockProcess(kind, rho=rho),
    )


def two_type_config(
    *,
    r: float = 0.05,
    gamma: float = 0.0,
    rho: float = 0.5,
    shocked_high: float = 2.0,
    shocked_low: float = 0.5,
    steady_high: float = 0.5,
    steady_low: float = 0.5,
    curvature: float = 0.5,
    cost: tuple[float, float] = (1.0, 1e-9),
) -> ec.EconomyConfig:
    """Shocked + unshocked types under a common binary shock (utility scales
    per state; the near-flat default cost keeps the low-state fee pinned)."""
    return ec.EconomyConfig(
        r=r,
        gamma=gamma,
        agent_types=(
            ec.AgentTypeSpec(
                mass=0.5,
                utility_by_state={0: ISO(shocked_low, curvature), 1: ISO(shocked_high, curvature)},
                name="shocked",
            ),
            ec.AgentTypeSpec(
                mass=0.5,
                utility_by_state={0: ISO(steady_low, curvature), 1: ISO(steady_high, curvature)},
                name="steady",
            ),
        ),
        cost=ec.CostFn(*cost),
        shocks=ec.ShockProcess(ec.ShockKind.COMMON_BINARY, rho=rho),
    )
