"""Data-driven estimates of the noise level, the spectral decay rate, and a
matching default for the risk-smoothing exponent.

Two noise estimators are provided.  The spectral-tail route averages squared
rotated observations in the null space of the kernel matrix; it needs a rank
deficit but is otherwise assumption free.  The smoothed-risk route divides a
heavily iterated weighted risk by its pure-noise expectation and works at full
rank, at the price of a (typically small) upward bias from whatever signal
survives the iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .filters import FilterSpec, residual_factor
from .kernels import RANK_TOL, EigenSystem, RotatedSample

# default evaluation time for the smoothed-risk ratio, in units of 1/eta
SMOOTHED_SIGMA_T_FACTOR = 1e4
# leading eigenvalues used by the least squares decay fit
DECAY_FIT_MAX_POINTS = 20
# below this, the smoothed-ratio denominator counts as fully degenerate
_DENOM_FLOOR = 1e-300


@dataclass(frozen=True)
class NoiseEstimate:
    """Estimated noise variance plus the route that produced it.

    ``t_used`` records the evaluation time for the smoothed route and is
    ``None`` for the tail route.
    """

    sigma2_hat: float
    method: str
    t_used: float | None = None


# ---------------------------------------------------------------------------
# noise level
# ---------------------------------------------------------------------------


def estimate_sigma_finite_rank(rot: RotatedSample, eig: EigenSystem) -> NoiseEstimate:
    """Average the squared rotated observations beyond the rank.

    Those coordinates carry no signal when the regression function lies in
    the space spanned by the kernel, so their mean square estimates the noise
    variance directly.  Requires ``rank < n``.
    """
    r, n = eig.rank, eig.n
    if r >= n:
        raise RuntimeError(
            "the kernel matrix has full rank; there is no spectral tail to "
            "average over"
        )
    tail = rot.z[r:]
    return NoiseEstimate(sigma2_hat=float(np.mean(tail**2)), method="FiniteRankTail")


def estimate_sigma_smoothed(
    rot: RotatedSample,
    eig: EigenSystem,
    spec: FilterSpec,
    t: float | None = None,
) -> NoiseEstimate:
    """Divide the eigenvalue-weighted residual risk at a late time by its
    expectation under pure noise.

    The weights are the eigenvalues themselves (smoothing exponent 1).  Any
    residual signal inflates the numerator, so on average the ratio sits at
    or slightly above the true noise variance.  Defaults to the evaluation
    time ``1e4 / eta``.
    """
    if eig.rank == 0:
        raise RuntimeError(
            "cannot calibrate a noise level from an all-zero kernel matrix"
        )
    if t is None:
        t = SMOOTHED_SIGMA_T_FACTOR / spec.eta
    r = eig.rank
    mu = eig.eigenvalues[:r]
    w = mu * residual_factor(spec, mu, float(t)) ** 2
    denom = float(np.sum(w) / eig.n)
    if denom <= _DENOM_FLOOR:
        raise FloatingPointError(
            "every eigendirection is fully shrunk at the requested time; "
            "the noise ratio degenerates to 0/0"
        )
    num = float(np.sum(w * rot.z[:r] ** 2) / eig.n)
    return NoiseEstimate(
        sigma2_hat=num / denom, method="SmoothedResidual", t_used=float(t)
    )


# ---------------------------------------------------------------------------
# spectral decay
# ---------------------------------------------------------------------------


def estimate_beta(eig: EigenSystem, method: str = "ratio") -> float:
    """Polynomial decay exponent of the spectrum.

    ``"ratio"`` reads the exponent off the first two eigenvalues, which is
    exact for a clean power law.  ``"fit"`` runs least squares on the leading
    log-log spectrum (up to 20 points) and tolerates local jitter better.
    """
    r = eig.rank
    if r < 2 or eig.eigenvalues[1] <= RANK_TOL * eig.eigenvalues[0]:
        raise RuntimeError(
            "need at least two well-separated positive eigenvalues to "
            "measure spectral decay"
        )
    mu = eig.eigenvalues[:r]
    if method == "ratio":
        return float(np.log2(mu[0] / mu[1]))
    if method == "fit":
        k = min(DECAY_FIT_MAX_POINTS, r)
        idx = np.arange(1, k + 1, dtype=float)
        slope = np.polyfit(np.log(idx), np.log(mu[:k]), 1)[0]
        return float(-slope)
    raise ValueError(f"unknown decay estimation method {method!r}")


def default_alpha(beta: float) -> float:
    """Smoothing exponent ``1 / (beta + 1)`` matched to the decay rate.

    Decay at or below 1 leaves the trade-off behind this choice ill posed;
    the fallback is 0.5, with a warning.
    """
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"decay exponent must be finite and nonnegative, got {beta!r}")
    if beta <= 1.0:
        warnings.warn(
            "spectral decay exponent is at or below 1; falling back to a "
            "smoothing exponent of 0.5",
            UserWarning,
            stacklevel=2,
        )
        return 0.5
    return float(min(1.0, max(0.0, 1.0 / (1.0 + beta))))
