"""Synthetic benchmarks for the stopping rules.

Provides the reference regression functions, seeded dataset generation, a
per-trial evaluator that runs every configured rule on the same draw, and a
multi-trial experiment runner with mean/standard-error aggregation.  The
whole pipeline is a pure function of the configuration: per-trial seeds are
derived from the master seed by a counter-mixing chain, so re-running a
config reproduces every record bit for bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .estimators import (
    default_alpha,
    estimate_beta,
    estimate_sigma_finite_rank,
    estimate_sigma_smoothed,
)
from .filters import (
    FilterPolicy,
    empirical_risk_full,
    oracle_decomposition,
    shrinkage_gamma,
    smoothed_reduced_risk,
)
from .kernels import (
    DesignSample,
    EigenSystem,
    KernelKind,
    build_gram,
    eigensystem,
    gaussian,
    laplace,
    polynomial,
    rotate,
    sobolev_min,
)
from .stopping import RULE_NAMES, run_stopping_rule

TARGET_NAMES = ("piecewise_linear", "heavisine", "sinus")

_DESIGNS = ("equidistant", "uniform")
_SIGMA_POLICIES = ("known", "tail", "smoothed")
DEFAULT_NOISE_SIGMA = 0.15

# rules that accept a smoothing exponent
_ALPHA_RULES = frozenset({"SmoothedMDP", "TheoreticalMDP", "Balancing"})
# rules whose threshold consumes the configured noise policy
_NEEDS_SIGMA = frozenset({"MDP", "SmoothedMDP", "RWY"})
# benchmark rules that read the true noise level and target internally
_ORACLE_SIDE = frozenset({"Oracle", "TheoreticalMDP", "Balancing"})

_CANONICAL_RULE = {name.lower(): name for name in RULE_NAMES}


# ---------------------------------------------------------------------------
# regression functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegressionFunction:
    """A scalar regression function on [0, 1], evaluated vectorized."""

    name: str
    values: Callable[[np.ndarray], np.ndarray]

    def __call__(self, xs) -> np.ndarray:
        return np.asarray(self.values(np.asarray(xs, dtype=float)), dtype=float)


def _piecewise_linear(xs: np.ndarray) -> np.ndarray:
    return np.abs(xs - 0.5) - 0.5


def _heavisine(xs: np.ndarray) -> np.ndarray:
    # np.sign(0) == 0, which is the convention used at the two jumps
    return 0.093 * (
        4.0 * np.sin(4.0 * np.pi * xs) - np.sign(xs - 0.3) - np.sign(0.72 - xs)
    )


def _sinus(xs: np.ndarray) -> np.ndarray:
    return 0.9 * np.sin(8.0 * np.pi * xs) * xs**2


_TARGETS = {
    "piecewise_linear": _piecewise_linear,
    "heavisine": _heavisine,
    "sinus": _sinus,
}


def target_function(name: str) -> RegressionFunction:
    """Look up one of the built-in benchmark regression functions."""
    try:
        return RegressionFunction(name, _TARGETS[name])
    except KeyError:
        raise ValueError(
            f"unknown regression function {name!r}; expected one of {TARGET_NAMES}"
        ) from None


def tabulated_target(
    grid: np.ndarray, values: np.ndarray, name: str = "custom"
) -> RegressionFunction:
    """Piecewise-linear interpolant through tabulated (x, f(x)) pairs."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
        raise ValueError("need matching 1-D tables with at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("tabulation grid must be strictly increasing")
    if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
        raise ValueError("tabulated values must be finite")
    return RegressionFunction(name, lambda xs: np.interp(xs, grid, values))


# ---------------------------------------------------------------------------
# deterministic seed derivation
# ---------------------------------------------------------------------------

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF
# stream index reserved for the data-split seed inside a trial
_SPLIT_STREAM = 1_000_003

SEED_SCHEME = (
    "splitmix64 counter chain: trial_seed = "
    "splitmix64(splitmix64(master_seed + C*(cell+1)) + C*(trial+1)) with "
    "C = 0x9E3779B97F4A7C15, cell indexing n_grid and trial the repetition; "
    "data-split seeds use stream 1000003 of the same chain"
)
NOISE_GENERATOR = (
    "numpy.random.default_rng(trial_seed) (PCG64); uniform designs via "
    "Generator.uniform, Gaussian noise via Generator.standard_normal (ziggurat)"
)


def splitmix64(x: int) -> int:
    """One output of the splitmix64 mixer for counter ``x``."""
    z = (int(x) + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(seed: int, stream: int) -> int:
    """Child seed for a numbered stream below ``seed``."""
    return splitmix64((int(seed) + _GOLDEN * (int(stream) + 1)) & _MASK)


def trial_seed(master_seed: int, cell: int, trial: int) -> int:
    """Seed for one (sample-size cell, trial index) pair."""
    return derive_seed(derive_seed(master_seed, cell), trial)


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuleSetting:
    """One stopping rule in an experiment, with its smoothing policy."""

    name: str
    alpha: float | None = None
    auto_alpha: bool = False


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Full description of a benchmark run.

    ``sigma`` is the generation noise level; ``sigma_policy`` says what the
    data-driven rules are told about it ("known" hands them the truth, "tail"
    and "smoothed" make them estimate it from each draw).  Benchmark rules
    that scan exact risks always receive the truth.
    """

    kernel: KernelKind
    policy: FilterPolicy
    target: RegressionFunction
    design: str
    sigma: float
    sigma_policy: str
    n_grid: tuple[int, ...]
    n_trials: int
    rules: tuple[RuleSetting, ...]
    master_seed: int

    def __post_init__(self):
        if self.design not in _DESIGNS:
            raise ValueError(f"design must be one of {_DESIGNS}, got {self.design!r}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"noise level must be positive, got {self.sigma!r}")
        if self.sigma_policy not in _SIGMA_POLICIES:
            raise ValueError(
                f"noise policy must be one of {_SIGMA_POLICIES}, "
                f"got {self.sigma_policy!r}"
            )
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be nonempty and strictly ascending")
        if grid[0] < 2:
            raise ValueError("sample sizes must be at least 2")
        object.__setattr__(self, "n_grid", grid)
        if int(self.n_trials) < 1:
            raise ValueError("need at least one trial")
        object.__setattr__(self, "n_trials", int(self.n_trials))
        rules = tuple(self.rules)
        if not rules:
            raise ValueError("need at least one stopping rule")
        names = [r.name for r in rules]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate stopping rules in config: {names}")
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "master_seed", int(self.master_seed))


def kernel_from_mapping(section: Mapping) -> KernelKind:
    """Kernel factory dispatch on a {kind, degree/bandwidth} mapping."""
    kind = str(section.get("kind", "")).lower()
    if kind == "sobolev_min":
        return sobolev_min()
    if kind == "polynomial":
        if "degree" not in section:
            raise ValueError("polynomial kernel needs a degree")
        return polynomial(int(section["degree"]))
    if kind in ("gaussian", "laplace"):
        if "bandwidth" not in section:
            raise ValueError(f"{kind} kernel needs a bandwidth")
        factory = gaussian if kind == "gaussian" else laplace
        return factory(float(section["bandwidth"]))
    raise ValueError(f"unknown kernel kind {section.get('kind')!r}")


def _parse_filter(section: Mapping) -> FilterPolicy:
    family = str(section.get("family", "gd"))
    eta = section.get("eta", "auto")
    t_max = section.get("t_max", "auto")
    return FilterPolicy(
        family=family,
        eta=None if eta == "auto" else float(eta),
        t_max=None if t_max == "auto" else float(t_max),
    )


def _parse_sigma(mapping: Mapping) -> tuple[float, str]:
    raw = str(mapping["sigma"])
    if raw.startswith("known:"):
        return float(raw[len("known:") :]), "known"
    if raw.startswith("estimate:"):
        method = raw[len("estimate:") :]
        if method not in ("tail", "smoothed"):
            raise ValueError(f"unknown noise estimation method {method!r}")
        return float(mapping.get("noise_sigma", DEFAULT_NOISE_SIGMA)), method
    raise ValueError(
        f"noise entry must look like 'known:<value>' or 'estimate:<method>', "
        f"got {raw!r}"
    )


def _parse_rule(entry: Mapping) -> RuleSetting:
    raw_name = str(entry.get("name", ""))
    try:
        name = _CANONICAL_RULE[raw_name.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown stopping rule {raw_name!r}; expected one of {RULE_NAMES}"
        ) from None
    alpha = entry.get("alpha", None)
    if name not in _ALPHA_RULES:
        if alpha is not None:
            raise ValueError(f"rule {name} does not take a smoothing exponent")
        return RuleSetting(name)
    if alpha == "auto" or (alpha is None and name == "SmoothedMDP"):
        return RuleSetting(name, None, True)
    if alpha is None:
        return RuleSetting(name, 0.0)
    val = float(alpha)
    if not (np.isfinite(val) and 0.0 <= val <= 1.0):
        raise ValueError(f"smoothing exponent must lie in [0, 1], got {alpha!r}")
    return RuleSetting(name, val)


def config_from_mapping(mapping: Mapping) -> ExperimentConfig:
    """Build a validated configuration from a parsed TOML/JSON mapping."""
    try:
        kernel = kernel_from_mapping(mapping["kernel"])
        sigma, sigma_policy = _parse_sigma(mapping)
        target = target_function(str(mapping["target"]))
        rule_entries: Sequence[Mapping] = mapping["rules"]
        rules = tuple(_parse_rule(entry) for entry in rule_entries)
        return ExperimentConfig(
            kernel=kernel,
            policy=_parse_filter(mapping.get("filter", {})),
            target=target,
            design=str(mapping.get("design", "equidistant")).lower(),
            sigma=sigma,
            sigma_policy=sigma_policy,
            n_grid=tuple(int(n) for n in mapping["n_grid"]),
            n_trials=int(mapping["n_trials"]),
            rules=rules,
            master_seed=int(mapping["master_seed"]),
        )
    except KeyError as exc:
        raise ValueError(f"configuration is missing the {exc.args[0]!r} entry") from None


# ---------------------------------------------------------------------------
# data generation
# ---------------------------------------------------------------------------


def generate_dataset(
    config: ExperimentConfig, n: int, seed: int
) -> tuple[DesignSample, np.ndarray]:
    """One seeded draw of the regression model at sample size ``n``."""
    n = int(n)
    if n < 2:
        raise ValueError("need at least two observations")
    rng = np.random.default_rng(int(seed) & _MASK)
    if config.design == "uniform":
        xs = np.sort(rng.uniform(0.0, 1.0, size=n))
    else:
        xs = np.arange(1, n + 1, dtype=float) / n
    f_star = config.target(xs)
    ys = f_star + config.sigma * rng.standard_normal(n)
    return DesignSample(xs=xs, ys=ys), f_star


# ---------------------------------------------------------------------------
# single trials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one rule on one draw; ``failed`` records stay in the report
    with the reason in ``message`` and the numeric fields empty."""

    rule: str
    n: int
    trial: int
    seed: int
    alpha: float | None
    t_stop: float | None
    error: float | None
    threshold: float | None
    hit_boundary: bool | None
    sigma2_used: float | None
    failed: bool
    message: str | None


def _failed_record(
    setting: RuleSetting, n: int, trial: int, seed: int, message: str
) -> TrialRecord:
    return TrialRecord(
        rule=setting.name,
        n=n,
        trial=trial,
        seed=seed,
        alpha=None,
        t_stop=None,
        error=None,
        threshold=None,
        hit_boundary=None,
        sigma2_used=None,
        failed=True,
        message=message,
    )


def _policy_sigma2(
    config: ExperimentConfig,
    rot,
    eig: EigenSystem,
    spec,
) -> tuple[float | None, str | None]:
    if config.sigma_policy == "known":
        return config.sigma**2, None
    try:
        if config.sigma_policy == "tail":
            return estimate_sigma_finite_rank(rot, eig).sigma2_hat, None
        return estimate_sigma_smoothed(rot, eig, spec).sigma2_hat, None
    except (RuntimeError, FloatingPointError) as exc:
        return None, str(exc)


def run_trial(
    config: ExperimentConfig,
    n: int,
    seed: int,
    *,
    trial_index: int = 0,
    eig_cache: dict | None = None,
) -> list[TrialRecord]:
    """Evaluate every configured rule on one draw.

    The eigensystem is built once and shared by all rules; errors are the
    squared empirical distances to the truth, computed in eigencoordinates.
    Rule-level failures are recorded, not raised.
    """
    sample, f_star = generate_dataset(config, n, seed)
    if eig_cache is not None and n in eig_cache:
        eig = eig_cache[n]
    else:
        eig = eigensystem(build_gram(config.kernel, sample.xs))
        if eig_cache is not None and config.design == "equidistant":
            eig_cache[n] = eig
    rot = rotate(eig, sample.ys, f_star=f_star, sigma2=config.sigma**2)
    spec = config.policy.resolve(eig)
    split_seed = derive_seed(seed, _SPLIT_STREAM)

    bench_sigma2, sigma_failure = _policy_sigma2(config, rot, eig, spec)
    auto_alpha_value: float | None = None
    alpha_failure: str | None = None
    if any(s.auto_alpha for s in config.rules):
        try:
            auto_alpha_value = default_alpha(estimate_beta(eig, method="fit"))
        except (RuntimeError, ValueError) as exc:
            alpha_failure = str(exc)

    records: list[TrialRecord] = []
    for setting in config.rules:
        name = setting.name
        if name == "MDP":
            alpha = 0.0
        elif name in _ALPHA_RULES:
            alpha = auto_alpha_value if setting.auto_alpha else setting.alpha
        else:
            alpha = None
        if name in _NEEDS_SIGMA and bench_sigma2 is None:
            records.append(
                _failed_record(setting, n, trial_index, seed, sigma_failure)
            )
            continue
        if setting.auto_alpha and auto_alpha_value is None:
            records.append(
                _failed_record(setting, n, trial_index, seed, alpha_failure)
            )
            continue
        try:
            out = run_stopping_rule(
                name,
                eig=eig,
                rot=rot,
                spec=spec,
                sigma2=bench_sigma2 if name in _NEEDS_SIGMA else None,
                alpha=alpha if alpha is not None else 0.0,
                sample=sample,
                kind=config.kernel,
                policy=config.policy,
                split_seed=split_seed,
            )
        except (ValueError, RuntimeError, FloatingPointError) as exc:
            records.append(_failed_record(setting, n, trial_index, seed, str(exc)))
            continue
        gam = shrinkage_gamma(spec, eig.eigenvalues, float(out.t_stop))
        error = float(np.mean((gam * rot.z - rot.g_star) ** 2))
        if name in _NEEDS_SIGMA:
            sigma2_used = bench_sigma2
        elif name in _ORACLE_SIDE:
            sigma2_used = config.sigma**2
        else:
            sigma2_used = None
        records.append(
            TrialRecord(
                rule=name,
                n=n,
                trial=trial_index,
                seed=seed,
                alpha=out.alpha,
                t_stop=float(out.t_stop),
                error=error,
                threshold=None if out.threshold is None else float(out.threshold),
                hit_boundary=bool(out.hit_boundary),
                sigma2_used=sigma2_used,
                failed=False,
                message=None,
            )
        )
    return records


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RuleSummary:
    """Aggregated behaviour of one rule at one sample size."""

    rule: str
    n: int
    mean_error: float | None
    se_error: float | None
    mean_t_stop: float | None
    se_t_stop: float | None
    n_ok: int
    n_failed: int
    boundary_rate: float | None
    relative_mean_error: float | None


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    """Everything a run produced: config echo, raw records, aggregates."""

    config: dict
    seed_scheme: str
    noise_generator: str
    records: tuple[TrialRecord, ...]
    summaries: tuple[RuleSummary, ...]

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "seed_scheme": self.seed_scheme,
            "noise_generator": self.noise_generator,
            "summaries": [asdict(s) for s in self.summaries],
            "records": [asdict(r) for r in self.records],
        }


def _mean_se(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, None
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))


def echo_config(config: ExperimentConfig) -> dict:
    """Plain-type rendering of a configuration, suitable for JSON."""
    kernel: dict = {"kind": config.kernel.name}
    if config.kernel.degree is not None:
        kernel["degree"] = config.kernel.degree
    if config.kernel.bandwidth is not None:
        kernel["bandwidth"] = config.kernel.bandwidth
    rules = []
    for setting in config.rules:
        entry: dict = {"name": setting.name}
        if setting.auto_alpha:
            entry["alpha"] = "auto"
        elif setting.alpha is not None:
            entry["alpha"] = setting.alpha
        rules.append(entry)
    policy = config.policy
    return {
        "kernel": kernel,
        "filter": {
            "family": policy.family,
            "eta": "auto" if policy.eta is None else policy.eta,
            "t_max": "auto" if policy.t_max is None else policy.t_max,
        },
        "target": config.target.name,
        "design": config.design,
        "sigma": config.sigma,
        "sigma_policy": config.sigma_policy,
        "n_grid": list(config.n_grid),
        "n_trials": config.n_trials,
        "rules": rules,
        "master_seed": config.master_seed,
    }


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the full trial grid and aggregate per (rule, sample size).

    Trials are paired: every rule sees the same draws.  Records are sorted by
    (rule, n, trial) so aggregation does not depend on execution order.
    """
    eig_cache: dict | None = {} if config.design == "equidistant" else None
    records: list[TrialRecord] = []
    for cell, n in enumerate(config.n_grid):
        for trial in range(config.n_trials):
            seed = trial_seed(config.master_seed, cell, trial)
            records.extend(
                run_trial(config, n, seed, trial_index=trial, eig_cache=eig_cache)
            )
    records.sort(key=lambda r: (r.rule, r.n, r.trial))

    summaries: list[RuleSummary] = []
    for n in config.n_grid:
        oracle_mean: float | None = None
        stats = {}
        for setting in config.rules:
            ok = [
                r
                for r in records
                if r.n == n and r.rule == setting.name and not r.failed
            ]
            failed = sum(
                1 for r in records if r.n == n and r.rule == setting.name and r.failed
            )
            mean_error, se_error = _mean_se([r.error for r in ok])
            mean_t, se_t = _mean_se([r.t_stop for r in ok])
            boundary = (
                sum(1 for r in ok if r.hit_boundary) / len(ok) if ok else None
            )
            stats[setting.name] = (
                mean_error,
                se_error,
                mean_t,
                se_t,
                len(ok),
                failed,
                boundary,
            )
            if setting.name == "Oracle":
                oracle_mean = mean_error
        for setting in config.rules:
            mean_error, se_error, mean_t, se_t, n_ok, n_failed, boundary = stats[
                setting.name
            ]
            relative = None
            if oracle_mean is not None and oracle_mean > 0 and mean_error is not None:
                relative = mean_error / oracle_mean
            summaries.append(
                RuleSummary(
                    rule=setting.name,
                    n=n,
                    mean_error=mean_error,
                    se_error=se_error,
                    mean_t_stop=mean_t,
                    se_t_stop=se_t,
                    n_ok=n_ok,
                    n_failed=n_failed,
                    boundary_rate=boundary,
                    relative_mean_error=relative,
                )
            )
    return ExperimentReport(
        config=echo_config(config),
        seed_scheme=SEED_SCHEME,
        noise_generator=NOISE_GENERATOR,
        records=tuple(records),
        summaries=tuple(summaries),
    )


# ---------------------------------------------------------------------------
# curve export
# ---------------------------------------------------------------------------


def emit_curves(rot, eig: EigenSystem, spec, t_grid) -> list[dict]:
    """Tabulate the error decomposition and the observable risks on a time
    grid: columns t, bias2, variance, risk, empirical_risk, reduced_risk."""
    ts = np.asarray(t_grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise ValueError("need a nonempty 1-D time grid")
    if not np.all(np.isfinite(ts)) or np.any(ts < 0):
        raise ValueError("grid times must be finite and nonnegative")
    rows = []
    for t in ts:
        dec = oracle_decomposition(rot, eig, spec, float(t), 0.0)
        rows.append(
            {
                "t": float(t),
                "bias2": dec.bias2,
                "variance": dec.variance,
                "risk": dec.risk,
                "empirical_risk": empirical_risk_full(rot, eig, spec, float(t)),
                "reduced_risk": smoothed_reduced_risk(rot, eig, spec, float(t), 0.0),
            }
        )
    return rows
