"""Tests for the synthetic benchmark harness: target functions, seeding,
dataset generation, per-trial rule evaluation, and experiment aggregation."""

import numpy as np
import pytest

from specstop.filters import fit_at_time
from specstop.kernels import build_gram, eigensystem, rotate
from specstop.simulate import (
    ExperimentConfig,
    RuleSetting,
    config_from_mapping,
    derive_seed,
    emit_curves,
    generate_dataset,
    run_experiment,
    run_trial,
    splitmix64,
    tabulated_target,
    target_function,
    trial_seed,
)


def _base_mapping(**overrides):
    mapping = {
        "kernel": {"kind": "polynomial", "degree": 3},
        "filter": {"family": "gd", "eta": "auto"},
        "target": "piecewise_linear",
        "design": "equidistant",
        "sigma": "known:0.15",
        "n_grid": [40],
        "n_trials": 3,
        "rules": [{"name": "Oracle"}, {"name": "MDP"}],
        "master_seed": 20260822,
    }
    mapping.update(overrides)
    return mapping


# ---------------------------------------------------------------------------
# target functions
# ---------------------------------------------------------------------------


def test_piecewise_linear_hand_values():
    f = target_function("piecewise_linear")
    xs = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(f(xs), [0.0, -0.25, -0.5, -0.25, 0.0], atol=1e-15)


def test_heavisine_matches_inline_formula():
    f = target_function("heavisine")
    xs = np.linspace(0.0, 1.0, 97)
    want = 0.093 * (
        4.0 * np.sin(4.0 * np.pi * xs) - np.sign(xs - 0.3) - np.sign(0.72 - xs)
    )
    assert np.allclose(f(xs), want, atol=1e-15)
    # the sign convention at the jump points: sign(0) contributes nothing
    at_jump = float(f(np.array([0.3]))[0])
    assert np.isclose(at_jump, 0.093 * (4.0 * np.sin(1.2 * np.pi) - 1.0), atol=1e-15)


def test_sinus_hand_values():
    f = target_function("sinus")
    assert np.isclose(float(f(np.array([0.25]))[0]), 0.0, atol=1e-15)
    assert np.isclose(
        float(f(np.array([1.0 / 16.0]))[0]), 0.9 / 256.0, atol=1e-15
    )


def test_target_norms_match_reported_level():
    # both benchmark targets sit near 0.28 in the empirical norm at n=200
    n = 200
    xs = np.arange(1, n + 1) / n
    for name in ("piecewise_linear", "sinus"):
        f = target_function(name)
        norm = float(np.sqrt(np.mean(f(xs) ** 2)))
        assert abs(norm - 0.28) <= 0.02, (name, norm)


def test_tabulated_target_interpolates():
    grid = np.array([0.0, 0.5, 1.0])
    vals = np.array([1.0, 3.0, 2.0])
    f = tabulated_target(grid, vals)
    assert f.name == "custom"
    assert np.allclose(f(np.array([0.25, 0.5, 0.75])), [2.0, 3.0, 2.5])
    # clamped at the ends like plain linear interpolation
    assert np.allclose(f(np.array([0.0, 1.0])), [1.0, 2.0])


def test_target_function_unknown_name():
    with pytest.raises(ValueError):
        target_function("doppler")


# ---------------------------------------------------------------------------
# seed derivation
# ---------------------------------------------------------------------------


def test_splitmix_reference_values():
    # first two outputs of the reference stream seeded at zero
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_trial_seeds_distinct_across_grid():
    seeds = {
        trial_seed(123, cell, trial)
        for cell in range(6)
        for trial in range(200)
    }
    assert len(seeds) == 6 * 200
    for s in seeds:
        assert 0 <= s < 2**64


def test_trial_seed_deterministic_and_master_sensitive():
    assert trial_seed(7, 2, 5) == trial_seed(7, 2, 5)
    assert trial_seed(7, 2, 5) != trial_seed(8, 2, 5)
    assert derive_seed(7, 1) != derive_seed(7, 2)


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------


def test_config_from_mapping_fields():
    cfg = config_from_mapping(_base_mapping())
    assert cfg.kernel.name == "polynomial" and cfg.kernel.degree == 3
    assert cfg.policy.family == "gd" and cfg.policy.eta is None
    assert cfg.target.name == "piecewise_linear"
    assert cfg.design == "equidistant"
    assert cfg.sigma == 0.15 and cfg.sigma_policy == "known"
    assert cfg.n_grid == (40,) and cfg.n_trials == 3
    assert [r.name for r in cfg.rules] == ["Oracle", "MDP"]
    assert cfg.master_seed == 20260822


def test_config_estimated_noise_policy():
    cfg = config_from_mapping(_base_mapping(sigma="estimate:tail"))
    assert cfg.sigma_policy == "tail"
    assert cfg.sigma == 0.15  # default generation level
    cfg2 = config_from_mapping(
        _base_mapping(sigma="estimate:smoothed", noise_sigma=0.3)
    )
    assert cfg2.sigma_policy == "smoothed" and cfg2.sigma == 0.3


def test_config_alpha_parsing():
    mapping = _base_mapping(
        rules=[
            {"name": "SmoothedMDP", "alpha": 0.33},
            {"name": "TheoreticalMDP"},
            {"name": "smoothedmdp", "alpha": "auto"},
        ]
    )
    with pytest.raises(ValueError):
        # two rules resolving to the same name would collide in the report
        config_from_mapping(mapping)
    mapping["rules"] = mapping["rules"][:2]
    cfg = config_from_mapping(mapping)
    assert cfg.rules[0].alpha == 0.33 and not cfg.rules[0].auto_alpha
    assert cfg.rules[1].alpha == 0.0


def test_config_rejects_bad_inputs():
    for bad in [
        _base_mapping(sigma="known:0"),
        _base_mapping(sigma="guess:0.1"),
        _base_mapping(n_grid=[]),
        _base_mapping(n_grid=[80, 40]),
        _base_mapping(n_trials=0),
        _base_mapping(design="lattice"),
        _base_mapping(rules=[{"name": "Wald"}]),
        _base_mapping(rules=[{"name": "Oracle", "alpha": 0.3}]),
        _base_mapping(rules=[{"name": "SmoothedMDP", "alpha": 1.5}]),
        _base_mapping(kernel={"kind": "polynomial"}),
    ]:
        with pytest.raises(ValueError):
            config_from_mapping(bad)


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------


def test_dataset_noise_free_limit():
    cfg = config_from_mapping(_base_mapping(sigma="known:1e-12"))
    sample, f_star = generate_dataset(cfg, 50, 99)
    assert np.allclose(sample.ys, f_star, atol=1e-10)
    assert np.allclose(sample.xs, np.arange(1, 51) / 50.0)


def test_dataset_target_norm_at_200():
    cfg = config_from_mapping(_base_mapping())
    _, f_star = generate_dataset(cfg, 200, 1)
    assert abs(np.sqrt(np.mean(f_star**2)) - 0.28) <= 0.02


def test_dataset_seed_determinism():
    cfg = config_from_mapping(_base_mapping(design="uniform"))
    a, fa = generate_dataset(cfg, 30, 424242)
    b, fb = generate_dataset(cfg, 30, 424242)
    c, _ = generate_dataset(cfg, 30, 424243)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
    assert np.array_equal(fa, fb)
    assert not np.array_equal(a.ys, c.ys)


def test_dataset_uniform_design_sorted():
    cfg = config_from_mapping(_base_mapping(design="uniform"))
    sample, _ = generate_dataset(cfg, 64, 5)
    assert np.all(np.diff(sample.xs) >= 0)
    assert sample.xs.min() >= 0.0 and sample.xs.max() <= 1.0


def test_dataset_needs_two_points():
    cfg = config_from_mapping(_base_mapping())
    with pytest.raises(ValueError):
        generate_dataset(cfg, 1, 0)


# ---------------------------------------------------------------------------
# single trials
# ---------------------------------------------------------------------------


def test_run_trial_records_every_rule():
    mapping = _base_mapping(
        kernel={"kind": "sobolev_min"},
        n_grid=[32],
        rules=[
            {"name": "Oracle"},
            {"name": "MDP"},
            {"name": "TheoreticalMDP"},
            {"name": "VFold"},
        ],
    )
    cfg = config_from_mapping(mapping)
    records = run_trial(cfg, 32, trial_seed(cfg.master_seed, 0, 0))
    assert [r.rule for r in records] == ["Oracle", "MDP", "TheoreticalMDP", "VFold"]
    for rec in records:
        assert not rec.failed and rec.message is None
        assert rec.t_stop > 0 and rec.error >= 0
        assert rec.n == 32


def test_run_trial_error_matches_direct_norm():
    cfg = config_from_mapping(_base_mapping(kernel={"kind": "sobolev_min"}))
    seed = trial_seed(cfg.master_seed, 0, 1)
    records = run_trial(cfg, 40, seed)
    sample, f_star = generate_dataset(cfg, 40, seed)
    eig = eigensystem(build_gram(cfg.kernel, sample.xs))
    rot = rotate(eig, sample.ys, f_star=f_star, sigma2=cfg.sigma**2)
    spec = cfg.policy.resolve(eig)
    for rec in records:
        fitted = fit_at_time(spec, eig, rot, rec.t_stop).fitted
        direct = float(np.mean((fitted - f_star) ** 2))
        assert np.isclose(rec.error, direct, rtol=1e-10, atol=1e-14)


def test_run_trial_oracle_is_integer_argmin():
    from specstop.filters import oracle_decomposition

    cfg = config_from_mapping(
        _base_mapping(kernel={"kind": "sobolev_min"}, rules=[{"name": "Oracle"}])
    )
    seed = trial_seed(cfg.master_seed, 0, 2)
    (rec,) = run_trial(cfg, 30, seed)
    sample, f_star = generate_dataset(cfg, 30, seed)
    eig = eigensystem(build_gram(cfg.kernel, sample.xs))
    rot = rotate(eig, sample.ys, f_star=f_star, sigma2=cfg.sigma**2)
    spec = cfg.policy.resolve(eig)
    grid = np.arange(0, 4000)
    errs = [oracle_decomposition(rot, eig, spec, t, 0.0).risk for t in grid]
    assert rec.t_stop == float(np.argmin(errs))


def test_run_trial_repeat_is_bitwise_identical():
    cfg = config_from_mapping(
        _base_mapping(design="uniform", rules=[{"name": "MDP"}, {"name": "HoldOut"}])
    )
    seed = trial_seed(cfg.master_seed, 0, 3)
    a = run_trial(cfg, 36, seed)
    b = run_trial(cfg, 36, seed)
    assert a == b


def test_run_trial_rule_failure_recorded_not_fatal():
    # the min-kernel matrix has full numerical rank, so the tail noise
    # estimator cannot run; rules that need it fail, the others do not
    mapping = _base_mapping(
        kernel={"kind": "sobolev_min"},
        sigma="estimate:tail",
        rules=[{"name": "Oracle"}, {"name": "RWY"}],
    )
    cfg = config_from_mapping(mapping)
    records = run_trial(cfg, 24, trial_seed(cfg.master_seed, 0, 0))
    by_rule = {r.rule: r for r in records}
    assert not by_rule["Oracle"].failed
    assert by_rule["RWY"].failed
    assert by_rule["RWY"].t_stop is None and by_rule["RWY"].error is None
    assert "rank" in by_rule["RWY"].message


def test_run_trial_auto_alpha_resolution():
    from specstop.estimators import default_alpha, estimate_beta

    mapping = _base_mapping(
        kernel={"kind": "sobolev_min"},
        rules=[{"name": "SmoothedMDP", "alpha": "auto"}],
    )
    cfg = config_from_mapping(mapping)
    seed = trial_seed(cfg.master_seed, 0, 4)
    (rec,) = run_trial(cfg, 48, seed)
    xs = np.arange(1, 49) / 48.0
    eig = eigensystem(build_gram(cfg.kernel, xs))
    want = default_alpha(estimate_beta(eig, method="fit"))
    assert rec.alpha == want
    assert 0.0 < rec.alpha < 1.0


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def test_experiment_shape_and_determinism():
    mapping = _base_mapping(n_grid=[24, 40], n_trials=3)
    cfg = config_from_mapping(mapping)
    report = run_experiment(cfg)
    assert len(report.records) == 3 * 2 * 2
    keys = [(r.rule, r.n, r.trial) for r in report.records]
    assert keys == sorted(keys)
    for rec in report.records:
        cell = cfg.n_grid.index(rec.n)
        assert rec.seed == trial_seed(cfg.master_seed, cell, rec.trial)
    again = run_experiment(cfg)
    assert report.as_dict() == again.as_dict()
    assert "splitmix" in report.seed_scheme


def test_experiment_single_trial_matches_run_trial():
    cfg = config_from_mapping(_base_mapping(n_trials=1))
    report = run_experiment(cfg)
    direct = run_trial(cfg, 40, trial_seed(cfg.master_seed, 0, 0))
    assert sorted(report.records, key=lambda r: r.rule) == sorted(
        direct, key=lambda r: r.rule
    )


def test_experiment_summary_statistics():
    cfg = config_from_mapping(_base_mapping(n_trials=8))
    report = run_experiment(cfg)
    by_rule = {s.rule: s for s in report.summaries}
    assert set(by_rule) == {"Oracle", "MDP"}
    for s in report.summaries:
        assert s.n == 40 and s.n_ok == 8 and s.n_failed == 0
        assert s.mean_error > 0 and s.se_error > 0
        assert s.mean_t_stop > 0
        assert 0.0 <= s.boundary_rate <= 1.0
    errs = [r.error for r in report.records if r.rule == "MDP"]
    assert np.isclose(by_rule["MDP"].mean_error, np.mean(errs), rtol=1e-12)
    assert np.isclose(
        by_rule["MDP"].se_error,
        np.std(errs, ddof=1) / np.sqrt(len(errs)),
        rtol=1e-12,
    )
    # oracle-relative column present, oracle itself pinned at one
    assert np.isclose(by_rule["Oracle"].relative_mean_error, 1.0)
    assert by_rule["MDP"].relative_mean_error == pytest.approx(
        by_rule["MDP"].mean_error / by_rule["Oracle"].mean_error
    )


def test_experiment_errors_fall_with_sample_size():
    mapping = _base_mapping(n_grid=[40, 160], n_trials=30)
    cfg = config_from_mapping(mapping)
    report = run_experiment(cfg)
    for rule in ("Oracle", "MDP"):
        small = next(s for s in report.summaries if s.rule == rule and s.n == 40)
        big = next(s for s in report.summaries if s.rule == rule and s.n == 160)
        spread = 2.0 * np.hypot(small.se_error, big.se_error)
        assert big.mean_error <= small.mean_error + spread


def test_experiment_se_shrinks_with_more_trials():
    base = _base_mapping(rules=[{"name": "Oracle"}], n_trials=200)
    se_small = run_experiment(config_from_mapping(base)).summaries[0].se_error
    base["n_trials"] = 400
    se_big = run_experiment(config_from_mapping(base)).summaries[0].se_error
    ratio = se_big / se_small
    assert 0.8 / np.sqrt(2.0) <= ratio <= 1.2 / np.sqrt(2.0)


def test_smoothing_cuts_stopping_time_spread():
    # plain discrepancy stopping scatters widely across trials; eigenvalue
    # weighting concentrates it
    mapping = _base_mapping(
        kernel={"kind": "sobolev_min"},
        n_grid=[200],
        n_trials=120,
        rules=[{"name": "MDP"}, {"name": "SmoothedMDP", "alpha": 0.33}],
        master_seed=3202,
    )
    report = run_experiment(config_from_mapping(mapping))
    taus = [r.t_stop for r in report.records if r.rule == "MDP"]
    taus_alpha = [r.t_stop for r in report.records if r.rule == "SmoothedMDP"]
    assert np.var(taus, ddof=1) > np.var(taus_alpha, ddof=1)


def test_heavisine_tracks_oracle_better_than_smooth_target():
    # random-design study at n=200: the discrepancy rule hugs the oracle time
    # far more tightly for the heavisine target than for the smooth one
    times = {}
    for name in ("piecewise_linear", "heavisine"):
        mapping = _base_mapping(
            kernel={"kind": "sobolev_min"},
            target=name,
            design="uniform",
            n_grid=[200],
            n_trials=200,
            rules=[{"name": "MDP"}, {"name": "Oracle"}],
            master_seed=77,
        )
        report = run_experiment(config_from_mapping(mapping))
        tau = np.array([r.t_stop for r in report.records if r.rule == "MDP"])
        t_or = np.array([r.t_stop for r in report.records if r.rule == "Oracle"])
        times[name] = np.mean(np.abs(tau - t_or)) / np.mean(t_or)
    assert times["heavisine"] < times["piecewise_linear"]


# ---------------------------------------------------------------------------
# curve export
# ---------------------------------------------------------------------------


def test_curves_columns_and_identities():
    cfg = config_from_mapping(_base_mapping(kernel={"kind": "sobolev_min"}))
    sample, f_star = generate_dataset(cfg, 40, 11)
    eig = eigensystem(build_gram(cfg.kernel, sample.xs))
    rot = rotate(eig, sample.ys, f_star=f_star, sigma2=cfg.sigma**2)
    spec = cfg.policy.resolve(eig)
    t_grid = np.concatenate([np.geomspace(1e-2, 1e6 / spec.eta, 60), [1e6 / spec.eta]])
    rows = emit_curves(rot, eig, spec, t_grid)
    assert list(rows[0]) == [
        "t",
        "bias2",
        "variance",
        "risk",
        "empirical_risk",
        "reduced_risk",
    ]
    ts = [row["t"] for row in rows]
    assert ts == [float(t) for t in t_grid]
    for row in rows:
        assert row["risk"] == row["bias2"] + row["variance"]
        assert row["reduced_risk"] <= row["empirical_risk"] + 1e-15
    emp = [row["empirical_risk"] for row in rows]
    assert all(b <= a + 1e-12 for a, b in zip(emp, emp[1:]))
    var = [row["variance"] for row in rows]
    assert all(b >= a - 1e-12 for a, b in zip(var, var[1:]))
    assert abs(var[-1] - eig.rank * cfg.sigma**2 / eig.n) <= 1e-6


def test_curves_need_oracle_fields():
    cfg = config_from_mapping(_base_mapping(kernel={"kind": "sobolev_min"}))
    sample, _ = generate_dataset(cfg, 30, 12)
    eig = eigensystem(build_gram(cfg.kernel, sample.xs))
    rot = rotate(eig, sample.ys)
    spec = cfg.policy.resolve(eig)
    with pytest.raises(RuntimeError):
        emit_curves(rot, eig, spec, np.array([1.0, 2.0]))
