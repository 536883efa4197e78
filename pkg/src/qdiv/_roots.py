"""Shared 1-D root bracketing and bisection.

Every scalar search in the package (information-spectrum divergence,
Neyman-Pearson multiplier, induced-divergence threshold) is a monotone
problem and goes through this contract: geometric bracket expansion by
doubling, then bisection to an absolute tolerance of 1e-11 on the unknown,
with a hard cap of 200 iterations.
"""

from __future__ import annotations

from typing import Callable

BISECT_TOL = 1e-11
BISECT_MAX_ITER = 200


class BracketError(RuntimeError):
    """The expansion phase could not bracket a sign change."""


def bisect_decreasing(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = BISECT_TOL,
    max_iter: int = BISECT_MAX_ITER,
    value_tol: float = 1e-10,
) -> float:
    """Largest x with f(x) >= 0 for nonincreasing f; needs f(lo)>=0>f(hi).

    Bisects until the bracket width reaches ``tol`` and the midpoint residual
    is at or below ``value_tol`` (or the iteration cap is hit), then returns
    the certified lower endpoint.
    """
    if not lo < hi:
        raise BracketError(f"invalid bracket [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = f(mid)
        if val >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol and abs(val) <= value_tol:
            break
    return lo


def expand_down(
    f: Callable[[float], float],
    start: float,
    step: float = 1.0,
    limit: float = -200.0,
) -> float:
    """Walk left by doubling steps until f >= 0; for nonincreasing f."""
    x = start
    while f(x) < 0.0:
        if x <= limit:
            raise BracketError(f"no point with f >= 0 above {limit}")
        x -= step
        step *= 2.0
    return x


def expand_up(
    f: Callable[[float], float],
    start: float,
    step: float = 1.0,
    limit: float = 200.0,
) -> float | None:
    """Walk right by doubling steps until f < 0; None if still >= 0 at limit."""
    x = start
    while f(x) >= 0.0:
        if x >= limit:
            return None
        x = min(limit, x + step)
        step *= 2.0
    return x
