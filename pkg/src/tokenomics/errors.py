"""Exception types shared across the package."""

from __future__ import annotations


class TokenomicsError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TokenomicsError):
    """A configuration document or economy description is invalid."""


class SolverError(TokenomicsError):
    """A root find or fixed point failed to converge, with diagnostics."""


class InfeasiblePolicyError(TokenomicsError):
    """The requested policy has no steady state for the given economy."""


class OracleError(TokenomicsError):
    """A brute-force grid oracle could not bracket its optimum."""
