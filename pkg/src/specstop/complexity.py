"""Localized complexity of a kernel class and the radii it fixes.

The central object is an empirical complexity function built from the spectrum
of the normalized kernel matrix.  Balancing it against a polynomial in the
localization radius yields a critical radius; the index where the spectrum
falls below that radius squared acts as an effective dimension, and a couple
of spectrum ratios quantify how well a truncation at that dimension captures
the class.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._solve import bisect_root
from .kernels import EigenSystem

DEFAULT_FIXED_POINT_CONST = 2.0
_EPS_BRACKET_LO = 1e-12
_ROOT_REL_TOL = 1e-10


def _check_positive(label: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{label} must be finite and positive, got {value!r}")


def _check_alpha(alpha: float) -> None:
    if not np.isfinite(alpha) or not 0.0 <= alpha <= 1.0:
        raise ValueError(f"smoothing exponent must lie in [0, 1], got {alpha!r}")


# ---------------------------------------------------------------------------
# complexity function
# ---------------------------------------------------------------------------


def kernel_complexity(
    eig: EigenSystem, radius: float, eps: float, alpha: float
) -> float:
    """Localized complexity of the radius-``radius`` ball at scale ``eps``.

    Computed from the positive spectrum as
    ``radius * sqrt((1/n) * sum_i mu_i**alpha * min(mu_i, eps**2))``.
    """
    _check_positive("radius", radius)
    _check_positive("eps", eps)
    _check_alpha(alpha)
    mu = eig.eigenvalues[: eig.rank]
    total = float(np.sum(mu**alpha * np.minimum(mu, eps**2)))
    return radius * math.sqrt(total / eig.n)


# ---------------------------------------------------------------------------
# critical radius
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalRadiusResult:
    """Solution of the complexity balance, with the achieved residual.

    ``residual`` is the difference between the two sides of the balance at the
    returned radius; it should sit near zero and is reported so callers can
    audit solver quality.
    """

    epsilon: float
    residual: float
    alpha: float
    radius: float
    sigma: float
    fixed_point_const: float


def critical_radius(
    eig: EigenSystem,
    radius: float,
    sigma: float,
    alpha: float,
    fixed_point_const: float = DEFAULT_FIXED_POINT_CONST,
) -> CriticalRadiusResult:
    """Smallest ``eps`` where the normalized complexity drops below the
    localization polynomial ``(const * radius / sigma) * eps**(1 + alpha)``.

    The left side divided by ``eps`` is non-increasing while the right side
    strictly grows, so the two cross at most once; the crossing is found by
    bisection on ``[1e-12, max(1, sqrt(mu_max))]``.  Raises ``RuntimeError``
    when the crossing does not fall inside that bracket.
    """
    _check_positive("radius", radius)
    _check_positive("sigma", sigma)
    _check_alpha(alpha)
    _check_positive("fixed_point_const", fixed_point_const)
    if eig.rank == 0:
        raise RuntimeError(
            "the kernel matrix has no positive eigenvalues; the complexity "
            "balance is degenerate"
        )

    def gap(eps: float) -> float:
        lhs = sigma * kernel_complexity(eig, radius, eps, alpha) / (eps * radius)
        return lhs - fixed_point_const * radius * eps ** (1.0 + alpha)

    hi = max(1.0, math.sqrt(float(eig.eigenvalues[0])))
    try:
        eps_hat = bisect_root(gap, _EPS_BRACKET_LO, hi, rel_tol=_ROOT_REL_TOL)
    except RuntimeError as err:
        raise RuntimeError(
            "no crossing of the complexity balance inside "
            f"[{_EPS_BRACKET_LO:g}, {hi:g}]"
        ) from err
    return CriticalRadiusResult(
        epsilon=float(eps_hat),
        residual=float(gap(eps_hat)),
        alpha=float(alpha),
        radius=float(radius),
        sigma=float(sigma),
        fixed_point_const=float(fixed_point_const),
    )


# ---------------------------------------------------------------------------
# effective dimension and spectrum audits
# ---------------------------------------------------------------------------


def statistical_dimension(eig: EigenSystem, epsilon: float) -> int:
    """Index (1-based) of the first eigenvalue at or below ``epsilon**2``.

    Falls back to the rank when the whole positive spectrum sits above the
    threshold; a zero-rank system has dimension 0.
    """
    _check_positive("epsilon", epsilon)
    r = eig.rank
    if r == 0:
        return 0
    below = np.nonzero(eig.eigenvalues[:r] <= epsilon**2)[0]
    if below.size == 0:
        return r
    return int(below[0]) + 1


@dataclass(frozen=True)
class AssumptionAudit:
    """Diagnostics for truncating the spectrum at the effective dimension.

    ``tail_mass_const`` compares the eigenvalue mass past the dimension with
    ``dimension * epsilon**2``; ``tail_weight_const`` compares tail and head
    under the weights ``mu**(2 * alpha)``.  Small values mean the truncation
    loses little.  ``top_exceeds_one`` flags a spectrum inconsistent with a
    kernel bounded by one on the diagonal.
    """

    dimension: int
    tail_mass_const: float
    tail_weight_const: float
    top_eigenvalue: float
    top_exceeds_one: bool


def assumption_audit(
    eig: EigenSystem, epsilon: float, alpha: float
) -> AssumptionAudit:
    """Quantify how sharply the spectrum splits at the effective dimension."""
    _check_alpha(alpha)
    r = eig.rank
    if r == 0:
        raise RuntimeError("cannot audit an all-zero spectrum")
    d = statistical_dimension(eig, epsilon)
    tail_mass = float(np.sum(eig.eigenvalues[d:]) / (d * epsilon**2))
    weights = eig.eigenvalues[:r] ** (2.0 * alpha)
    tail_weight = float(np.sum(weights[d:]) / np.sum(weights[:d]))
    top = float(eig.eigenvalues[0])
    if top > 1.0:
        warnings.warn(
            "largest eigenvalue of the normalized kernel matrix exceeds 1; "
            "the bounded-kernel assumption behind the guarantees is violated",
            UserWarning,
            stacklevel=2,
        )
    return AssumptionAudit(
        dimension=d,
        tail_mass_const=tail_mass,
        tail_weight_const=tail_weight,
        top_eigenvalue=top,
        top_exceeds_one=top > 1.0,
    )
