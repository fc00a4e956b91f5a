"""Search primitives shared by the stopping rules and complexity solvers.

Everything here assumes monotone structure: a condition that once satisfied
stays satisfied as time grows, a risk sequence scanned for its first strict
increase, or a continuous function with a single sign change.  The continuous
searches bisect in log space because the quantities of interest live on
brackets spanning many orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_REL_TOL = 1e-6
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class Crossing:
    """Location of a monotone threshold crossing.

    ``status`` records whether the crossing fell strictly inside the bracket
    (``"interior"``), at or below its low end (``"lower"``), or was never
    reached so the high end was returned (``"upper"``).
    """

    t: float
    status: str

    @property
    def hit_boundary(self) -> bool:
        return self.status != "interior"


def _check_bracket(lo: float, hi: float) -> None:
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo <= 0 or hi <= lo:
        raise ValueError(f"bracket must satisfy 0 < lo < hi, got ({lo!r}, {hi!r})")


def first_true_continuous(
    cond: Callable[[float], bool],
    lo: float,
    hi: float,
    rel_tol: float = DEFAULT_REL_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Crossing:
    """Smallest point in ``[lo, hi]`` where a monotone condition holds.

    The returned point always satisfies the condition (except in the ``upper``
    case, where the condition holds nowhere in the bracket) and exceeds the
    true crossing by at most a factor ``1 + rel_tol``.
    """
    _check_bracket(lo, hi)
    if not cond(hi):
        return Crossing(t=hi, status="upper")
    if cond(lo):
        return Crossing(t=lo, status="lower")
    a, b = lo, hi  # invariant: cond(a) is False, cond(b) is True
    for _ in range(max_iter):
        if b / a - 1.0 <= rel_tol:
            break
        mid = math.sqrt(a * b)
        if cond(mid):
            b = mid
        else:
            a = mid
    return Crossing(t=b, status="interior")


def first_increase(
    risks: Callable[[np.ndarray], np.ndarray],
    t_cap: int,
    block: int = 64,
    max_block: int = 8192,
) -> Crossing:
    """Smallest integer ``t >= 0`` with ``risk(t + 1) > risk(t)``.

    ``risks`` must accept an integer array and return the matching risk
    values.  Scanning proceeds in geometrically growing blocks (capped so a
    long flat stretch never allocates huge batches) so that early stops cost
    little.  If the sequence never increases up to ``t_cap`` the cap is
    returned with ``status="upper"``.
    """
    if t_cap < 0:
        raise ValueError("t_cap must be nonnegative")
    start = 0
    while start < t_cap:
        stop = min(start + block, t_cap)
        ts = np.arange(start, stop + 1)
        vals = np.asarray(risks(ts), dtype=float)
        rising = np.diff(vals) > 0
        if np.any(rising):
            return Crossing(t=float(ts[int(np.argmax(rising))]), status="interior")
        start = stop
        block = min(block * 2, max_block)
    return Crossing(t=float(t_cap), status="upper")


def first_true_integer(
    cond: Callable[[int], bool], t_start: int, t_cap: int
) -> Crossing:
    """Smallest integer in ``[t_start, t_cap]`` where a monotone condition
    holds, found by doubling followed by binary search."""
    if t_cap < t_start:
        raise ValueError("t_cap must be at least t_start")
    if cond(t_start):
        return Crossing(t=float(t_start), status="interior")
    lo = t_start  # cond(lo) is False
    step = 1
    while True:
        hi = min(lo + step, t_cap)
        if cond(hi):
            break
        if hi == t_cap:
            return Crossing(t=float(t_cap), status="upper")
        lo = hi
        step *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cond(mid):
            hi = mid
        else:
            lo = mid
    return Crossing(t=float(hi), status="interior")


def bisect_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = 1e-10,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Root of a continuous function with a sign change on ``[lo, hi]``."""
    if not hi > lo:
        raise ValueError(f"bracket must satisfy lo < hi, got ({lo!r}, {hi!r})")
    f_lo = fn(lo)
    f_hi = fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise RuntimeError(
            "no sign change on the bracket; cannot locate a crossing"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * max(abs(lo), abs(hi), 1e-300):
            return mid
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
