"""Brute-force grid oracles.

Slow, dumb cross-checks for the analytic solvers: a token-holdings best
response by direct search, and a first-best allocation by product-grid
enumeration. Neither shares any solution logic with the closed-form code
paths; both only reuse the primitive utility and cost evaluations.

Tie handling is deterministic: among grid values within a small tolerance
of the maximum, the smallest index wins. The tolerance matters because a
carry-cost-free optimum (token return equal to r) leaves the objective
exactly flat above the optimal holdings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import econ_core as ec
from .errors import OracleError
from .first_best import Allocation

#: relative tolerance for treating grid values as tied at the maximum
TIE_RTOL = 1e-11

_MAX_EXPANSIONS = 4


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [0, upper] with the given number of points."""

    upper: float
    points: int = 2001

    def __post_init__(self) -> None:
        if not (self.upper > 0 and math.isfinite(self.upper)):
            raise ValueError(f"grid upper bound must be positive and finite, got {self.upper!r}")
        if self.points < 3:
            raise ValueError(f"grid needs at least 3 points, got {self.points}")

    def values(self) -> np.ndarray:
        return np.linspace(0.0, self.upper, self.points)


def _tie_argmax(values: np.ndarray) -> int:
    vmax = float(np.max(values))
    tol = TIE_RTOL * (1.0 + abs(vmax))
    return int(np.argmax(values >= vmax - tol))


def _utility_on_grid(f: ec.Utility, a: np.ndarray) -> np.ndarray:
    if isinstance(f, ec.ZeroUtility):
        return np.zeros_like(a)
    return f.scale * a ** (1.0 - f.curvature) / (1.0 - f.curvature)


def _net_flow_closed_form(
    f: ec.Utility, eff_price: float, wealth: np.ndarray
) -> np.ndarray:
    """u(a*) - eff_price * a* with a* the budget-capped demand, per wealth."""
    if isinstance(f, ec.ZeroUtility) or eff_price <= 0.0:
        return np.zeros_like(wealth)
    unconstrained = (f.scale / eff_price) ** (1.0 / f.curvature)
    a_star = np.minimum(unconstrained, wealth / eff_price)
    return _utility_on_grid(f, a_star) - eff_price * a_star


def _net_flow_grid(
    f: ec.Utility, eff_price: float, wealth: np.ndarray, a_grid: GridSpec
) -> tuple[np.ndarray, bool]:
    """Best feasible u(a) - eff_price * a per wealth level, by prefix search.

    Also reports whether the unconstrained argmax sat on the grid's upper
    boundary, which signals the activity grid must expand.
    """
    if isinstance(f, ec.ZeroUtility) or eff_price <= 0.0:
        return np.zeros_like(wealth), False
    a = a_grid.values()
    net = _utility_on_grid(f, a) - eff_price * a
    best_prefix = np.maximum.accumulate(net)
    # largest affordable index under the budget wealth >= eff_price * a
    step = a_grid.upper / (a_grid.points - 1)
    idx = np.clip((wealth / (eff_price * step)).astype(np.int64), 0, a.size - 1)
    boundary = _tie_argmax(net) == a.size - 1
    return best_prefix[idx], boundary


def grid_best_response(
    utility_by_state: Mapping[int, ec.Utility],
    probs: Mapping[int, float],
    prices: Mapping[int, float],
    taxes: Mapping[int, float],
    returns: Mapping[int, float],
    r: float,
    m_grid: GridSpec,
    a_grid: GridSpec | None = None,
) -> tuple[float, float]:
    """Best token holdings for one agent facing fixed market conditions.

    Evaluates -m + beta * E[u(a*) + (1 + rT) m - (1 + theta) p a*] on the
    m-grid, where a* maximizes state flow value subject to the token budget.
    With a_grid given, the inner maximization runs in pure grid mode;
    otherwise it uses the capped marginal-utility inversion.

    Grids auto-expand (doubling the upper bound, up to 4 times) whenever the
    argmax lands on the upper boundary; persistent boundary solutions raise
    OracleError, which is the expected signal for non-existent optima such
    as a token return above r.
    """
    states = sorted(utility_by_state)
    beta = 1.0 / (1.0 + r)

    for _ in range(_MAX_EXPANSIONS + 1):
        m = m_grid.values()
        value = -m.copy()
        a_boundary = False
        for s in states:
            f = utility_by_state[s]
            pi = probs[s]
            if pi <= 0.0:
                continue
            gross_return = 1.0 + returns[s]
            eff_price = (1.0 + taxes[s]) * prices[s]
            wealth = gross_return * m
            if a_grid is None:
                net = _net_flow_closed_form(f, eff_price, wealth)
            else:
                net, hit = _net_flow_grid(f, eff_price, wealth, a_grid)
                a_boundary = a_boundary or hit
            value += beta * pi * (wealth + net)
        if a_boundary:
            a_grid = GridSpec(a_grid.upper * 2.0, a_grid.points)
            continue
        best = _tie_argmax(value)
        if best < m.size - 1:
            return float(m[best]), float(value[best])
        m_grid = GridSpec(m_grid.upper * 2.0, m_grid.points)

    raise OracleError(
        f"holdings argmax stayed on the grid boundary after {_MAX_EXPANSIONS} "
        f"expansions (upper bound {m_grid.upper:.6g}); the objective appears unbounded"
    )


def grid_first_best(
    cfg: ec.EconomyConfig,
    state: int,
    grids: Mapping[str, GridSpec] | None = None,
    points: int = 2001,
) -> tuple[Allocation, float]:
    """First-best allocation for one state by product-grid enumeration.

    Supports at most three active types (the product grid is materialized).
    Default per-type grids span [0, 2 * analytic optimum] so the boundary is
    never binding for a correct solver; explicit grids override that anchor.
    Returns the best feasible allocation and its flow surplus.
    """
    active = [t for t in cfg.agent_types if t.is_active(state)]
    if not active:
        alloc = Allocation(
            activities={t.name: 0.0 for t in cfg.agent_types},
            total=0.0,
            congested=False,
            shadow_marginal=0.0,
        )
        return alloc, 0.0
    if len(active) > 3:
        raise OracleError(f"product grid limited to 3 active types, got {len(active)}")

    if grids is None:
        from .first_best import first_best_allocation

        anchor = first_best_allocation(cfg, state)
        grids = {
            t.name: GridSpec(max(2.0 * anchor.activities[t.name], 1e-6), points)
            for t in active
        }

    axes = [grids[t.name].values() for t in active]
    total_cells = math.prod(len(ax) for ax in axes)
    if total_cells > 2 * 10**8:
        raise OracleError(f"grid of {total_cells} cells is too large; reduce points")

    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    total = sum(t.mass * ax for t, ax in zip(active, mesh))
    surplus = sum(t.mass * _utility_on_grid(t.utility_in(state), ax) for t, ax in zip(active, mesh))
    surplus = surplus - cfg.cost.scale * total ** (1.0 + cfg.cost.curvature) / (1.0 + cfg.cost.curvature)
    surplus = np.where(total <= ec.BLOCKSPACE_CAPACITY + 1e-12, surplus, -np.inf)

    flat = int(_tie_argmax(surplus.ravel()))
    idx = np.unravel_index(flat, surplus.shape)
    for d, ax in enumerate(axes):
        if idx[d] == len(ax) - 1:
            raise OracleError(
                f"first-best argmax on grid boundary for type {active[d].name}; widen the grid"
            )

    acts = {t.name: 0.0 for t in cfg.agent_types}
    for d, t in enumerate(active):
        acts[t.name] = float(axes[d][idx[d]])
    best_total = math.fsum(t.mass * acts[t.name] for t in cfg.agent_types)
    steps = [grids[t.name].upper / (grids[t.name].points - 1) for t in active]
    congested = best_total >= ec.BLOCKSPACE_CAPACITY - max(
        t.mass * s for t, s in zip(active, steps)
    )
    alloc = Allocation(
        activities=acts, total=best_total, congested=bool(congested), shadow_marginal=0.0
    )
    return alloc, float(surplus[idx])
