import math
import pathlib

import numpy as np
import pytest

from qpdnls.bounds import DecayProfile
from qpdnls.config import PicardSettings, ProblemConfig, RandomInitial, load_config
from qpdnls.errors import ConfigError
from qpdnls.experiments import (MASS_DRIFT_LIMIT, asymptotic_sweep, cauchy_ratio_experiment, check_sweep_parameters,
                                existence_times, fitted_slope, resolution_indicator, run_solve, sobolev_constant,
                                sweep_row_config, uniqueness_probe)
from qpdnls.data import initial_state
from qpdnls.lattice import FrequencyVector, TruncationBox

def random_config(**kwargs) -> ProblemConfig:
    values = dict(omega=FrequencyVector((1.0,)), box=TruncationBox(6, 1), t_end=4 / 139968, steps=8,
                  random=RandomInitial(1.0, 1.0, seed=42, radius=2), decay=DecayProfile(1.0, 1.0), overflow="clip")
    values.update(kwargs)
    return ProblemConfig(**values)

def modes_config(**kwargs) -> ProblemConfig:
    values = dict(omega=FrequencyVector((1.0,)), box=TruncationBox(9, 1), t_end=1e-3, steps=16,
                  modes=(((-1,), 0.1 + 0j), ((0,), 0.05j), ((1,), -0.1 + 0j)), quadrature="simpson", overflow="clip")
    values.update(kwargs)
    return ProblemConfig(**values)

def test_solve_certifies_decay_up_to_t2():
    result = run_solve(random_config())
    assert result.constants.C == pytest.approx(18.0)
    assert result.summary["decay_certificate_asserted"]
    assert result.certificate.passed
    assert result.certificate.rate == 0.5
    assert result.summary["pass"]
    assert result.summary["drift"]["M"] <= MASS_DRIFT_LIMIT

def test_solve_with_picard_scheme():
    result = run_solve(random_config(scheme="picard"))
    assert result.summary["picard_converged"]
    assert result.summary["pass"]

def test_solve_is_deterministic():
    first, second = run_solve(random_config()), run_solve(random_config())
    assert first.trajectory.points == second.trajectory.points
    assert first.trajectory.amplitudes.equal(second.trajectory.amplitudes)

def test_cauchy_ratios_below_t3():
    config = random_config()
    t3 = existence_times(config, initial_state(config)).t3
    report = cauchy_ratio_experiment(config.replace(t_end=t3 / 2), K=6)
    assert report.bound_asserted
    assert len(report.rows) == 6
    assert report.bound_ratio == pytest.approx(0.5)
    assert report.passed and report.converging
    assert all(row.weighted_diff <= row.bound for row in report.rows)

def test_cauchy_linear_flow_is_fixed():
    report = cauchy_ratio_experiment(modes_config(epsilon=0.0), K=3)
    assert all(row.weighted_diff == 0 for row in report.rows)
    assert all(row.measured_ratio is None for row in report.rows)

def test_cauchy_beyond_t3_is_not_asserted():
    report = cauchy_ratio_experiment(modes_config(t_end=0.05), K=4)
    assert not report.bound_asserted
    assert report.passed
    ratios = [row.measured_ratio for row in report.rows if row.measured_ratio is not None]
    assert ratios and all(r < 1 for r in ratios)

def test_sweep_parameter_checks():
    check_sweep_parameters(1.0, 0.1, 1 / 32)
    with pytest.raises(ConfigError):
        check_sweep_parameters(1.0, 0.1, 1 / 16)
    with pytest.raises(ConfigError):
        check_sweep_parameters(1.0, 1.5, 1 / 32)
    assert sobolev_constant(1.0, 1 / 32) == pytest.approx(3 / (0.25 - 0.125) * 12 ** 6)

def test_fitted_slope():
    eps = [1e-2, 1e-3, 1e-4]
    assert fitted_slope(eps, [7 * e ** 0.1 for e in eps]) == pytest.approx(0.1)
    assert math.isnan(fitted_slope(eps[:1], [1.0]))

def test_small_sweep():
    config = modes_config(box=TruncationBox(2, 1), t_end=1.0, steps=100, decay=DecayProfile(1.0, 1.0),
                          modes=(((-1,), 0.01 + 0j), ((0,), 0.005j), ((1,), -0.01 + 0j)))
    report = asymptotic_sweep(config, eta=0.1, varrho=1 / 32, eps_list=[1e-2, 1e-1])
    assert [row.epsilon for row in report.rows] == [1e-1, 1e-2]
    for row in report.rows:
        assert row.t * row.epsilon == pytest.approx(row.epsilon ** 0.1)
        assert row.steps % 64 == 0
        assert row.regime == "supported"
        assert row.reliable
        assert row.mass_drift <= MASS_DRIFT_LIMIT
        assert row.sobolev_ok
    assert report.rows[1].sup_proxy < report.rows[0].sup_proxy
    assert report.thresholds["slope_min"] == pytest.approx(0.05)
    summary = report.summary()
    assert {"slope", "pass", "eta", "varrho"} <= set(summary)

def test_sweep_rows_without_decay_certificate_are_unreliable():
    # C = 1.5 * 1e-4 * 12 = 1.8e-3 sits below the data itself
    config = modes_config(box=TruncationBox(2, 1), t_end=1.0, steps=100, decay=DecayProfile(1e-8, 1.0),
                          modes=(((-1,), 0.01 + 0j), ((0,), 0.005j), ((1,), -0.01 + 0j)))
    report = asymptotic_sweep(config, eta=0.1, varrho=1 / 32, eps_list=[1e-2, 1e-1])
    assert all(not row.decay_certified and not row.reliable for row in report.rows)
    assert not report.passed
    assert math.isnan(report.slope_sup)

def test_sweep_example_config_is_resolved_at_every_row():
    path = pathlib.Path(__file__).resolve().parents[1] / "template" / "examples" / "asymptotics.json"
    config = load_config(str(path))
    assert config.box.radius == 8 and config.nu == 1
    assert config.experiments.eps == (1e-2, 1e-3, 1e-4)
    assert config.experiments.varrho == pytest.approx(existence_times(config, initial_state(config)).kappa / 32)
    for epsilon in config.experiments.eps:
        row_config = sweep_row_config(config, epsilon, config.experiments.eta)
        assert row_config.steps % 64 == 0 and row_config.dt <= config.dt
        assert resolution_indicator(row_config) <= config.experiments.resolution_limit

def test_sweep_rejects_bad_varrho():
    with pytest.raises(ConfigError):
        asymptotic_sweep(modes_config(decay=DecayProfile(1.0, 1.0)), eta=0.1, varrho=0.1, eps_list=[1e-2])

def test_uniqueness_same_producer_is_zero():
    report = uniqueness_probe(random_config(), ["rk4", "rk4"])
    assert report.max_weighted_diff == 0.0
    assert report.passed
    assert report.horizon == min(report.t4, 4 / 139968)

def test_uniqueness_box_doubling_is_exact():
    config = modes_config(overflow="error", picard=PicardSettings(iterations=2))
    report = uniqueness_probe(config, ["picard_iterate", "picard_double_box"])
    assert report.max_weighted_diff == 0.0
    assert report.as_dict()["pass"] is True

def test_uniqueness_picard_vs_rk4():
    report = uniqueness_probe(modes_config(), ["picard", "rk4"])
    assert report.passed
    assert report.max_weighted_diff <= 1e-9
    assert len(report.diff_profile) == 17
    assert np.all(np.isfinite(report.diff_profile))

def test_uniqueness_needs_two_producers():
    with pytest.raises(ConfigError):
        uniqueness_probe(modes_config(), ["rk4"])
