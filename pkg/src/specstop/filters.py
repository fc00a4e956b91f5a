"""Spectral shrinkage of kernel regression along a continuous iteration time.

Both estimator families used here act coordinatewise in the eigenbasis of the
normalized kernel matrix: at time ``t`` the i-th rotated observation is
multiplied by a shrinkage factor in ``[0, 1]`` that grows from 0 toward 1 as
``t`` increases.  Gradient descent with constant step size ``eta`` yields
``1 - (1 - eta * mu)**t``; ridge regularization with penalty ``1 / (eta * t)``
yields ``eta * mu * t / (1 + eta * mu * t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import EigenSystem, KernelKind, RotatedSample, kernel_cross

_FAMILIES = ("gd", "krr")
_FAMILY_ALIASES = {
    "gd": "gd",
    "gradient_descent": "gd",
    "gradientdescent": "gd",
    "krr": "krr",
    "kernel_ridge": "krr",
    "kernelridge": "krr",
    "ridge": "krr",
}

# default step size keeps eta * mu_max == 1/1.2 < 1 for gradient descent
ETA_SAFETY = 1.2
# default search horizon, expressed in units of 1/eta
T_MAX_FACTOR = 1e6


def _canonical_family(family: str) -> str:
    try:
        return _FAMILY_ALIASES[str(family).strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown filter family {family!r}; expected one of {_FAMILIES}"
        ) from None


# ---------------------------------------------------------------------------
# filter configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FilterSpec:
    """A fully resolved filter: family plus concrete step size and horizon."""

    family: str
    eta: float
    t_max: float

    def __post_init__(self):
        object.__setattr__(self, "family", _canonical_family(self.family))
        for label, value in (("eta", self.eta), ("t_max", self.t_max)):
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{label} must be finite and positive, got {value!r}")


@dataclass(frozen=True)
class FilterPolicy:
    """Filter settings where step size and horizon may be left to defaults.

    ``eta=None`` resolves to ``1 / (1.2 * mu_max)`` for gradient descent and to
    ``1.0`` for ridge; ``t_max=None`` resolves to ``1e6 / eta``.  Resolution
    happens against a concrete eigenvalue decomposition so that rules which
    refit on data subsets pick a step size valid for the refitted matrix.
    """

    family: str
    eta: float | None = None
    t_max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", _canonical_family(self.family))

    def resolve(self, eig: EigenSystem) -> FilterSpec:
        eta = self.eta
        if eta is None:
            if self.family == "gd":
                top = float(eig.eigenvalues[0]) if eig.rank > 0 else 0.0
                if top <= 0:
                    raise RuntimeError(
                        "cannot derive a gradient descent step size from an "
                        "all-zero kernel matrix"
                    )
                eta = 1.0 / (ETA_SAFETY * top)
            else:
                eta = 1.0
        t_max = self.t_max if self.t_max is not None else T_MAX_FACTOR / eta
        return FilterSpec(self.family, eta=eta, t_max=t_max)


# ---------------------------------------------------------------------------
# shrinkage factors
# ---------------------------------------------------------------------------


def _checked_mu_t(spec: FilterSpec, mu, t):
    mu_arr = np.asarray(mu, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(mu_arr)) or np.any(mu_arr < 0):
        raise ValueError("eigenvalues must be finite and nonnegative")
    if not np.all(np.isfinite(t_arr)) or np.any(t_arr < 0):
        raise ValueError("iteration time must be finite and nonnegative")
    if spec.family == "gd" and mu_arr.size and spec.eta * np.max(mu_arr) >= 1.0:
        raise ValueError(
            "gradient descent step size too large: eta * mu_max must be < 1"
        )
    return mu_arr, t_arr


def shrinkage_gamma(spec: FilterSpec, mu, t):
    """Shrinkage factor(s) at iteration time ``t`` for eigenvalue(s) ``mu``.

    Broadcasts over ``mu`` and ``t``; scalars in, scalar out.  Gradient descent
    requires ``eta * max(mu) < 1`` so that the residual polynomial contracts.
    """
    mu_arr, t_arr = _checked_mu_t(spec, mu, t)
    if spec.family == "gd":
        # 1 - (1 - eta*mu)^t, written to stay exact for tiny eta*mu*t
        gam = -np.expm1(t_arr * np.log1p(-spec.eta * mu_arr))
    else:
        w = np.minimum(spec.eta * mu_arr * t_arr, 1e300)
        gam = w / (1.0 + w)
    if gam.ndim == 0:
        return float(gam)
    return gam


def residual_factor(spec: FilterSpec, mu, t):
    """``1 - shrinkage_gamma`` computed without cancellation near zero.

    Squared residual factors drive every bias-type quantity, and at large
    times they can sit far below the precision of ``1 - gamma``.
    """
    mu_arr, t_arr = _checked_mu_t(spec, mu, t)
    if spec.family == "gd":
        res = np.exp(t_arr * np.log1p(-spec.eta * mu_arr))
    else:
        w = np.minimum(spec.eta * mu_arr * t_arr, 1e300)
        res = 1.0 / (1.0 + w)
    if res.ndim == 0:
        return float(res)
    return res


# ---------------------------------------------------------------------------
# fitting, prediction
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FittedValues:
    """Estimate at one iteration time, in both coordinate systems.

    ``coeffs`` lives in the eigenbasis, ``fitted`` holds the values at the
    design points, and ``dual`` holds weights w so that the fitted function is
    x -> (1/n) * sum_j w_j * K(x, x_j).
    """

    coeffs: np.ndarray
    fitted: np.ndarray
    dual: np.ndarray


def fit_at_time(
    spec: FilterSpec, eig: EigenSystem, rot: RotatedSample, t: float
) -> FittedValues:
    """Evaluate the filtered estimator at iteration time ``t``."""
    gam = shrinkage_gamma(spec, eig.eigenvalues, float(t))
    coeffs = gam * rot.z
    fitted = eig.eigenvectors @ coeffs
    # dual weights gamma/mu, with the zero-eigenvalue convention g(0) = 0
    g_vals = np.divide(
        gam, eig.eigenvalues, out=np.zeros_like(gam), where=eig.eigenvalues > 0
    )
    dual = eig.eigenvectors @ (g_vals * rot.z)
    return FittedValues(coeffs=coeffs, fitted=fitted, dual=dual)


def predict(
    spec: FilterSpec,
    eig: EigenSystem,
    rot: RotatedSample,
    xs_train: np.ndarray,
    kind: KernelKind,
    t: float,
    x_new,
):
    """Evaluate the time-``t`` estimator at new input location(s)."""
    dual = fit_at_time(spec, eig, rot, t).dual
    x_arr = np.atleast_1d(np.asarray(x_new, dtype=float))
    kmat = kernel_cross(kind, x_arr, np.asarray(xs_train, dtype=float))
    preds = kmat @ dual / eig.n
    if np.ndim(x_new) == 0:
        return float(preds[0])
    return preds


# ---------------------------------------------------------------------------
# risks observable from data
# ---------------------------------------------------------------------------


def empirical_risk_full(
    rot: RotatedSample, eig: EigenSystem, spec: FilterSpec, t: float
) -> float:
    """Mean squared residual of the fit, summed over every eigendirection."""
    res = residual_factor(spec, eig.eigenvalues, float(t))
    return float(np.sum(res**2 * rot.z**2) / eig.n)


def smoothed_reduced_risk(
    rot: RotatedSample, eig: EigenSystem, spec: FilterSpec, t: float, alpha: float
) -> float:
    """Residual risk restricted to the positive spectrum, with eigenvalue
    weights ``mu**alpha``.

    ``alpha = 0`` simply drops the null-space directions; larger ``alpha``
    discounts directions with small eigenvalues, which damps the stochastic
    fluctuation of the quantity around its mean.
    """
    _check_alpha(alpha)
    r = eig.rank
    mu = eig.eigenvalues[:r]
    res = residual_factor(spec, mu, float(t))
    return float(np.sum(mu**alpha * res**2 * rot.z[:r] ** 2) / eig.n)


def _check_alpha(alpha: float) -> None:
    if not np.isfinite(alpha) or not 0.0 <= alpha <= 1.0:
        raise ValueError(f"smoothing exponent must lie in [0, 1], got {alpha!r}")


# ---------------------------------------------------------------------------
# decompositions that need the unknown truth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleDecomposition:
    """Bias/variance split of the in-sample error at one iteration time.

    ``bias2`` and ``variance`` sum over all eigendirections; the ``_alpha``
    variants weight the positive spectrum by ``mu**alpha`` and drop the rest.
    ``stoch_variance`` is the realized (not expected) variance term and is
    present only when the realized noise vector was supplied.
    """

    t: float
    alpha: float
    bias2: float
    variance: float
    bias2_alpha: float
    variance_alpha: float
    stoch_variance: float | None
    risk: float


def _require_oracle(rot: RotatedSample) -> None:
    if rot.g_star is None or rot.sigma2 is None:
        raise RuntimeError(
            "this quantity needs the rotated truth and the noise level; "
            "construct the rotated sample with f_star and sigma2"
        )


def oracle_decomposition(
    rot: RotatedSample,
    eig: EigenSystem,
    spec: FilterSpec,
    t: float,
    alpha: float,
    noise: np.ndarray | None = None,
) -> OracleDecomposition:
    """Split the expected in-sample error at time ``t`` into bias and variance."""
    _check_alpha(alpha)
    _require_oracle(rot)
    gam = shrinkage_gamma(spec, eig.eigenvalues, float(t))
    resid = residual_factor(spec, eig.eigenvalues, float(t))
    n = eig.n
    bias2 = float(np.sum(resid**2 * rot.g_star**2) / n)
    variance = float(rot.sigma2 * np.sum(gam**2) / n)
    r = eig.rank
    w = eig.eigenvalues[:r] ** alpha
    bias2_alpha = float(np.sum(w * resid[:r] ** 2 * rot.g_star[:r] ** 2) / n)
    variance_alpha = float(rot.sigma2 * np.sum(w * gam[:r] ** 2) / n)
    stoch = None
    if noise is not None:
        noise_arr = np.asarray(noise, dtype=float)
        if noise_arr.shape != (n,):
            raise ValueError(f"noise vector must have length {n}")
        stoch = float(np.sum(gam**2 * noise_arr**2) / n)
    return OracleDecomposition(
        t=float(t),
        alpha=float(alpha),
        bias2=bias2,
        variance=variance,
        bias2_alpha=bias2_alpha,
        variance_alpha=variance_alpha,
        stoch_variance=stoch,
        risk=bias2 + variance,
    )


def expected_empirical_risk_full(
    rot: RotatedSample, eig: EigenSystem, spec: FilterSpec, t: float
) -> float:
    """Noise-averaged value of ``empirical_risk_full`` at time ``t``."""
    _require_oracle(rot)
    resid2 = residual_factor(spec, eig.eigenvalues, float(t)) ** 2
    return float(
        np.sum(resid2 * rot.g_star**2) / eig.n
        + rot.sigma2 * np.sum(resid2) / eig.n
    )


def expected_smoothed_risk(
    rot: RotatedSample, eig: EigenSystem, spec: FilterSpec, t: float, alpha: float
) -> float:
    """Noise-averaged value of ``smoothed_reduced_risk`` at time ``t``."""
    _check_alpha(alpha)
    _require_oracle(rot)
    r = eig.rank
    mu = eig.eigenvalues[:r]
    resid2 = residual_factor(spec, mu, float(t)) ** 2
    w = mu**alpha
    return float(
        np.sum(w * resid2 * rot.g_star[:r] ** 2) / eig.n
        + rot.sigma2 * np.sum(w * resid2) / eig.n
    )
