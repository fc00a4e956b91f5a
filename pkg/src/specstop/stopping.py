"""Early stopping rules for spectrally filtered kernel regression.

All rules answer the same question, when to freeze the iteration, from
different information sets: the observed residual risk against a noise
threshold, its noise average, the exact bias/variance balance, the minimizer
of the expected error, a spectrum-only complexity balance, or refits on data
splits scored out of sample.  Continuous-time rules bisect on
``[1e-6 / eta, t_max]``; split-based rules and the oracle scan integer times
for the first strict risk increase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._solve import Crossing, first_increase, first_true_continuous, first_true_integer
from .complexity import kernel_complexity
from .filters import (
    FilterPolicy,
    FilterSpec,
    _check_alpha,
    _require_oracle,
    expected_smoothed_risk,
    oracle_decomposition,
    shrinkage_gamma,
    smoothed_reduced_risk,
)
from .kernels import (
    DesignSample,
    EigenSystem,
    KernelKind,
    RotatedSample,
    build_gram,
    eigensystem,
    kernel_cross,
    rotate,
)

RULE_NAMES = (
    "MDP",
    "SmoothedMDP",
    "TheoreticalMDP",
    "Balancing",
    "Oracle",
    "RWY",
    "HoldOut",
    "VFold",
)

# lower end of the continuous search bracket, in units of 1/eta
T_MIN_FACTOR = 1e-6
DEFAULT_N_FOLDS = 4


@dataclass(frozen=True)
class StoppingOutcome:
    """Where a rule stopped and why.

    ``threshold`` is the level that triggered the stop (rule dependent: the
    noise threshold for discrepancy rules, the variance term at the crossing
    for balancing, the achieved risk for scan-based rules).  ``seed`` records
    the split seed for rules that resample the data, ``None`` otherwise.
    ``hit_boundary`` marks a stop pinned to an end of the search range, which
    usually signals a misconfigured horizon or noise level.
    """

    rule: str
    t_stop: float
    alpha: float | None
    threshold: float | None
    hit_boundary: bool
    seed: int | None


def _check_sigma2(sigma2: float) -> None:
    if not np.isfinite(sigma2) or sigma2 < 0:
        raise ValueError(
            f"noise variance must be finite and nonnegative, got {sigma2!r}"
        )


def _search_bracket(spec: FilterSpec) -> tuple[float, float]:
    return T_MIN_FACTOR / spec.eta, spec.t_max


# ---------------------------------------------------------------------------
# discrepancy rules
# ---------------------------------------------------------------------------


def _noise_threshold(eig: EigenSystem, sigma2: float, alpha: float) -> float:
    return float(sigma2 * np.sum(eig.eigenvalues[: eig.rank] ** alpha) / eig.n)


def mdp_stop(
    rot: RotatedSample,
    eig: EigenSystem,
    spec: FilterSpec,
    sigma2: float,
    alpha: float = 0.0,
) -> StoppingOutcome:
    """Stop when the observed weighted residual risk drops to the level an
    exactly fitted signal would leave behind, namely
    ``sigma2 * sum_i mu_i**alpha / n`` over the positive spectrum."""
    _check_sigma2(sigma2)
    _check_alpha(alpha)
    kappa = _noise_threshold(eig, sigma2, alpha)
    lo, hi = _search_bracket(spec)
    cross = first_true_continuous(
        lambda t: smoothed_reduced_risk(rot, eig, spec, t, alpha) <= kappa, lo, hi
    )
    return StoppingOutcome(
        rule="MDP" if alpha == 0.0 else "SmoothedMDP",
        t_stop=cross.t,
        alpha=alpha,
        threshold=kappa,
        hit_boundary=cross.hit_boundary,
        seed=None,
    )


def theoretical_mdp_stop(
    rot: RotatedSample, eig: EigenSystem, spec: FilterSpec, alpha: float = 0.0
) -> StoppingOutcome:
    """Noise-averaged counterpart of ``mdp_stop``: the same threshold applied
    to the expected weighted residual risk.  Needs the rotated truth."""
    _check_alpha(alpha)
    _require_oracle(rot)
    kappa = _noise_threshold(eig, rot.sigma2, alpha)
    lo, hi = _search_bracket(spec)
    cross = first_true_continuous(
        lambda t: expected_smoothed_risk(rot, eig, spec, t, alpha) <= kappa, lo, hi
    )
    return StoppingOutcome(
        rule="TheoreticalMDP",
        t_stop=cross.t,
        alpha=alpha,
        threshold=kappa,
        hit_boundary=cross.hit_boundary,
        seed=None,
    )


# ---------------------------------------------------------------------------
# balancing and oracle rules
# ---------------------------------------------------------------------------


def balancing_stop(
    rot: RotatedSample, eig: EigenSystem, spec: FilterSpec, alpha: float = 0.0
) -> StoppingOutcome:
    """Stop at the first time the weighted squared bias falls below the
    weighted variance; the risk there is within a factor two of the best."""
    _check_alpha(alpha)
    _require_oracle(rot)
    lo, hi = _search_bracket(spec)

    def crossed(t: float) -> bool:
        dec = oracle_decomposition(rot, eig, spec, t, alpha)
        return dec.bias2_alpha <= dec.variance_alpha

    cross = first_true_continuous(crossed, lo, hi)
    at_stop = oracle_decomposition(rot, eig, spec, cross.t, alpha)
    return StoppingOutcome(
        rule="Balancing",
        t_stop=cross.t,
        alpha=alpha,
        threshold=at_stop.variance_alpha,
        hit_boundary=cross.hit_boundary,
        seed=None,
    )


def oracle_stop(
    rot: RotatedSample,
    eig: EigenSystem,
    spec: FilterSpec,
    use_realized: bool = False,
) -> StoppingOutcome:
    """First integer time where the in-sample error curve turns upward.

    By default the expected error (bias squared plus variance) is scanned;
    ``use_realized=True`` scans the error of the actual draw instead.
    """
    _require_oracle(rot)
    t_cap = int(math.floor(spec.t_max))

    def risks(ts: np.ndarray) -> np.ndarray:
        gam = shrinkage_gamma(spec, eig.eigenvalues[None, :], ts[:, None].astype(float))
        if use_realized:
            errs = np.sum((gam * rot.z[None, :] - rot.g_star[None, :]) ** 2, axis=1)
            return errs / eig.n
        bias2 = np.sum((1.0 - gam) ** 2 * rot.g_star[None, :] ** 2, axis=1)
        var = rot.sigma2 * np.sum(gam**2, axis=1)
        return (bias2 + var) / eig.n

    cross = first_increase(risks, t_cap)
    return StoppingOutcome(
        rule="Oracle",
        t_stop=cross.t,
        alpha=None,
        threshold=float(risks(np.array([int(cross.t)]))[0]),
        hit_boundary=cross.hit_boundary,
        seed=None,
    )


# ---------------------------------------------------------------------------
# complexity-balance rule
# ---------------------------------------------------------------------------


def rwy_stop(eig: EigenSystem, spec: FilterSpec, sigma2: float) -> StoppingOutcome:
    """Spectrum-only rule: run until the localized complexity at scale
    ``1 / sqrt(eta t)`` first exceeds ``1 / (2 e sigma eta t)``, then step
    back by one.  Uses no observations at all."""
    _check_sigma2(sigma2)
    if sigma2 == 0.0:
        raise ValueError("this rule needs a strictly positive noise variance")
    sigma = math.sqrt(sigma2)
    t_cap = int(math.floor(spec.t_max))

    def crossed(t: int) -> bool:
        eps = 1.0 / math.sqrt(spec.eta * t)
        level = 1.0 / (2.0 * math.e * sigma * spec.eta * t)
        return kernel_complexity(eig, 1.0, eps, 0.0) > level

    cross = first_true_integer(crossed, 1, t_cap)
    if cross.status == "upper":
        return StoppingOutcome(
            rule="RWY",
            t_stop=float(t_cap),
            alpha=None,
            threshold=None,
            hit_boundary=True,
            seed=None,
        )
    t_first = int(cross.t)
    t_stop = float(t_first - 1)
    return StoppingOutcome(
        rule="RWY",
        t_stop=t_stop,
        alpha=None,
        threshold=1.0 / (2.0 * math.e * sigma * spec.eta * t_first),
        hit_boundary=t_stop == 0.0,
        seed=None,
    )


# ---------------------------------------------------------------------------
# sample splitting rules
# ---------------------------------------------------------------------------


class _SplitFit:
    """One refit on a training subset, with fast test-risk evaluation."""

    def __init__(
        self,
        sample: DesignSample,
        kind: KernelKind,
        policy,
        train_idx: np.ndarray,
        test_idx: np.ndarray,
    ):
        xs_tr = sample.xs[train_idx]
        ys_tr = sample.ys[train_idx]
        eig = eigensystem(build_gram(kind, xs_tr))
        rot = rotate(eig, ys_tr)
        if isinstance(policy, FilterSpec):
            self.spec = policy
        else:
            self.spec = policy.resolve(eig)
        r = eig.rank
        self.mu = eig.eigenvalues[:r]
        self.z = rot.z[:r]
        # (1/m) K(test, train) U restricted to the positive spectrum, so a
        # test prediction is just this matrix times the filtered coefficients
        self.proj = (
            kernel_cross(kind, sample.xs[test_idx], xs_tr)
            @ eig.eigenvectors[:, :r]
            / train_idx.size
        )
        self.ys_test = sample.ys[test_idx]

    def sq_errors(self, ts: np.ndarray) -> np.ndarray:
        """Total squared test error at each integer time in ``ts``."""
        gam = shrinkage_gamma(self.spec, self.mu[None, :], ts[:, None].astype(float))
        coeffs = np.divide(gam, self.mu[None, :]) * self.z[None, :]
        preds = coeffs @ self.proj.T
        return np.sum((preds - self.ys_test[None, :]) ** 2, axis=1)


def _split_permutation(n: int, split_seed: int) -> np.ndarray:
    return np.random.default_rng(split_seed).permutation(n)


def holdout_stop(
    sample: DesignSample,
    kind: KernelKind,
    policy,
    split_seed: int,
) -> StoppingOutcome:
    """Refit on a random half of the data and stop at the first integer time
    where the risk on the held-out half increases.

    The training half takes the extra point when the sample size is odd.
    ``policy`` may be a ``FilterPolicy`` (step size re-derived on the training
    half) or a concrete ``FilterSpec``.
    """
    n = sample.n
    perm = _split_permutation(n, split_seed)
    n_train = n - n // 2
    fit = _SplitFit(
        sample, kind, policy, np.sort(perm[:n_train]), np.sort(perm[n_train:])
    )
    n_test = n - n_train

    def risks(ts: np.ndarray) -> np.ndarray:
        return fit.sq_errors(ts) / n_test

    cross = first_increase(risks, int(math.floor(fit.spec.t_max)))
    return StoppingOutcome(
        rule="HoldOut",
        t_stop=cross.t,
        alpha=None,
        threshold=float(risks(np.array([int(cross.t)]))[0]),
        hit_boundary=cross.hit_boundary,
        seed=split_seed,
    )


def vfold_stop(
    sample: DesignSample,
    kind: KernelKind,
    policy,
    split_seed: int,
    n_folds: int = DEFAULT_N_FOLDS,
) -> StoppingOutcome:
    """Cross-validated variant of ``holdout_stop``: every fold serves as the
    held-out block once, and the pooled out-of-fold squared errors (scaled by
    ``V / ((V - 1) n)``) are scanned for their first increase."""
    if n_folds < 2:
        raise ValueError("need at least two folds")
    n = sample.n
    if n_folds > n:
        raise ValueError("more folds than observations")
    perm = _split_permutation(n, split_seed)
    blocks = [np.sort(b) for b in np.array_split(perm, n_folds)]
    fits = []
    for j in range(n_folds):
        train = np.sort(
            np.concatenate([blocks[k] for k in range(n_folds) if k != j])
        )
        fits.append(_SplitFit(sample, kind, policy, train, blocks[j]))
    scale = n_folds / ((n_folds - 1) * n)

    def risks(ts: np.ndarray) -> np.ndarray:
        total = np.zeros(ts.size)
        for fit in fits:
            total += fit.sq_errors(ts)
        return scale * total

    t_cap = int(math.floor(min(fit.spec.t_max for fit in fits)))
    cross = first_increase(risks, t_cap)
    return StoppingOutcome(
        rule="VFold",
        t_stop=cross.t,
        alpha=None,
        threshold=float(risks(np.array([int(cross.t)]))[0]),
        hit_boundary=cross.hit_boundary,
        seed=split_seed,
    )


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

_CANONICAL = {name.lower(): name for name in RULE_NAMES}


def _need(rule: str, **required):
    missing = [label for label, value in required.items() if value is None]
    if missing:
        raise ValueError(f"rule {rule} needs {', '.join(missing)}")


def run_stopping_rule(
    rule: str,
    *,
    eig: EigenSystem | None = None,
    rot: RotatedSample | None = None,
    spec: FilterSpec | None = None,
    sigma2: float | None = None,
    alpha: float = 0.0,
    sample: DesignSample | None = None,
    kind: KernelKind | None = None,
    policy: FilterPolicy | FilterSpec | None = None,
    split_seed: int | None = None,
    use_realized: bool = False,
    n_folds: int = DEFAULT_N_FOLDS,
) -> StoppingOutcome:
    """Route a rule name to its implementation, checking required inputs."""
    try:
        name = _CANONICAL[str(rule).strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown stopping rule {rule!r}; expected one of {RULE_NAMES}"
        ) from None
    if name == "MDP":
        _need(name, rot=rot, eig=eig, spec=spec, sigma2=sigma2)
        return mdp_stop(rot, eig, spec, sigma2, alpha=0.0)
    if name == "SmoothedMDP":
        _need(name, rot=rot, eig=eig, spec=spec, sigma2=sigma2)
        out = mdp_stop(rot, eig, spec, sigma2, alpha=alpha)
        return replace(out, rule="SmoothedMDP")
    if name == "TheoreticalMDP":
        _need(name, rot=rot, eig=eig, spec=spec)
        return theoretical_mdp_stop(rot, eig, spec, alpha=alpha)
    if name == "Balancing":
        _need(name, rot=rot, eig=eig, spec=spec)
        return balancing_stop(rot, eig, spec, alpha=alpha)
    if name == "Oracle":
        _need(name, rot=rot, eig=eig, spec=spec)
        return oracle_stop(rot, eig, spec, use_realized=use_realized)
    if name == "RWY":
        _need(name, eig=eig, spec=spec, sigma2=sigma2)
        return rwy_stop(eig, spec, sigma2)
    if name == "HoldOut":
        _need(name, sample=sample, kind=kind, policy=policy, split_seed=split_seed)
        return holdout_stop(sample, kind, policy, split_seed)
    _need(name, sample=sample, kind=kind, policy=policy, split_seed=split_seed)
    return vfold_stop(sample, kind, policy, split_seed, n_folds=n_folds)
