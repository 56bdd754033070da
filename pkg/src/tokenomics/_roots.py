"""Scalar root finding used by the equilibrium and first-best solvers.

Every economic fixed point in this package reduces to a monotone scalar
residual, so plain bisection with geometric bracket expansion is enough
and keeps convergence behaviour fully deterministic.
"""

from __future__ import annotations

from typing import Callable

from .errors import SolverError

#: residual magnitude accepted as "solved"
RESIDUAL_TOL = 1e-10
#: hard cap on bisection steps (well past double precision for any bracket)
MAX_ITER = 200


def expand_bracket(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    grow: float = 2.0,
    max_steps: int = 60,
    lo_floor: float = 1e-300,
) -> tuple[float, float, float, float]:
    """Widen [lo, hi] geometrically until f changes sign across it.

    Expands hi upward and lo downward (keeping lo above lo_floor).
    Returns (lo, hi, f(lo), f(hi)). Raises SolverError when no sign
    change can be found, reporting the final bracket.
    """
    if not (0 < lo <= hi):
        raise ValueError(f"invalid starting bracket [{lo}, {hi}]")
    flo = f(lo)
    fhi = f(hi) if hi != lo else flo
    for _ in range(max_steps):
        if flo == 0.0 or fhi == 0.0 or (flo < 0.0) != (fhi < 0.0):
            return lo, hi, flo, fhi
        if lo > lo_floor:
            lo = max(lo / grow, lo_floor)
            flo = f(lo)
        hi = hi * grow
        fhi = f(hi)
    raise SolverError(
        "could not bracket a root: "
        f"f({lo:.6g}) = {flo:.6g}, f({hi:.6g}) = {fhi:.6g} share a sign"
    )


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    residual_tol: float = RESIDUAL_TOL,
    max_iter: int = MAX_ITER,
) -> float:
    """Bisection on a sign change, run to float resolution.

    The bracket is narrowed until it is a few ulp wide (or max_iter steps),
    then the midpoint is checked against residual_tol; a residual above the
    tolerance raises SolverError with bracket diagnostics.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise SolverError(
            f"no sign change on bracket: f({lo:.6g}) = {flo:.6g}, "
            f"f({hi:.6g}) = {fhi:.6g}"
        )
    mid = 0.5 * (lo + hi)
    fmid = f(mid)
    for _ in range(max_iter):
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        new_mid = 0.5 * (lo + hi)
        # the bracket stops shrinking once it is ~1 ulp wide
        if new_mid == mid or hi - lo <= 1e-15 * (abs(lo) + abs(hi)):
            mid = new_mid
            fmid = f(mid)
            break
        mid = new_mid
        fmid = f(mid)
    if abs(fmid) > residual_tol:
        raise SolverError(
            f"bisection stalled with residual {fmid:.3e} > {residual_tol:.0e} "
            f"on bracket [{lo:.12g}, {hi:.12g}]"
        )
    return mid


def damped_fixed_point(
    g: Callable[[float], float],
    x0: float,
    *,
    damping: float = 0.5,
    tol: float = 1e-14,
    max_iter: int = 400,
) -> float:
    """Iterate x <- x + damping * (g(x) - x) until the update is negligible."""
    x = x0
    for _ in range(max_iter):
        gx = g(x)
        if abs(gx - x) <= tol * (1.0 + abs(x)):
            return gx
        x = x + damping * (gx - x)
    raise SolverError(
        f"fixed point not converged after {max_iter} iterations "
        f"(last iterate {x:.12g}, update {gx - x:.3e})"
    )
