"""Steady-state token economics: equilibrium solvers, supply policy, welfare."""

from .econ_core import (
    BLOCKSPACE_CAPACITY,
    SCHEMA_VERSION,
    AgentTypeSpec,
    CostFn,
    EconomyConfig,
    ShockKind,
    ShockProcess,
    UtilityFn,
    ZeroUtility,
    config_from_dict,
    config_to_dict,
    load_config,
    require_valid,
    validate_config,
)
from .equilibrium import (
    REGIMES,
    Regime,
    StateOutcome,
    SteadyStateEquilibrium,
    check_foc_finite_difference,
    heterogeneous_roles,
    holdings_objective,
    shock_foc_residual,
    solve_common_shock,
    solve_deterministic,
    solve_friedman,
    solve_heterogeneous,
    solve_iid_shocks,
    solve_regime,
    user_demand,
    validator_supply,
)
from .errors import (
    ConfigError,
    InfeasiblePolicyError,
    OracleError,
    SolverError,
    TokenomicsError,
)
from .first_best import (
    Allocation,
    expected_first_best_surplus,
    first_best_allocation,
    flow_surplus,
)
from .oracle import GridSpec, grid_best_response, grid_first_best
from .policy import (
    SupplyPath,
    SupplyRule,
    SupplyRuleKind,
    friedman_supply_ratio,
    steady_state_burn_residual,
    step_supply,
    supply_path,
    tax_for_return_target,
)
from .welfare import (
    SweepResult,
    WelfareReport,
    evaluate,
    proposition_report,
    sweep_tax,
)

__all__ = [
    "AgentTypeSpec",
    "Allocation",
    "BLOCKSPACE_CAPACITY",
    "ConfigError",
    "CostFn",
    "EconomyConfig",
    "GridSpec",
    "InfeasiblePolicyError",
    "OracleError",
    "REGIMES",
    "Regime",
    "SCHEMA_VERSION",
    "ShockKind",
    "ShockProcess",
    "SolverError",
    "StateOutcome",
    "SteadyStateEquilibrium",
    "SupplyPath",
    "SupplyRule",
    "SupplyRuleKind",
    "SweepResult",
    "TokenomicsError",
    "UtilityFn",
    "WelfareReport",
    "ZeroUtility",
    "check_foc_finite_difference",
    "config_from_dict",
    "config_to_dict",
    "evaluate",
    "expected_first_best_surplus",
    "first_best_allocation",
    "flow_surplus",
    "friedman_supply_ratio",
    "grid_best_response",
    "grid_first_best",
    "heterogeneous_roles",
    "holdings_objective",
    "load_config",
    "proposition_report",
    "require_valid",
    "shock_foc_residual",
    "solve_common_shock",
    "solve_deterministic",
    "solve_friedman",
    "solve_heterogeneous",
    "solve_iid_shocks",
    "solve_regime",
    "steady_state_burn_residual",
    "step_supply",
    "supply_path",
    "sweep_tax",
    "tax_for_return_target",
    "user_demand",
    "validator_supply",
    "validate_config",
]
