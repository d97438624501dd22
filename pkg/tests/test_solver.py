import math

import pytest
import torch

from qpdnls.config import ProblemConfig
from qpdnls.data import initial_state, plane_wave, plane_wave_solution
from qpdnls.errors import ConfigError, SupportOverflowError
from qpdnls.lattice import FrequencyVector, TruncationBox
from qpdnls.solver import conserved_quantities, integrate, linear_solution, picard_iterate, picard_limit, rhs, tail_mass
from qpdnls.solver.monitors import relative_drift
from qpdnls.solver.quadrature import cumulative_simpson, cumulative_trapezoid
from qpdnls.solver.state import FourierState, weighted_difference

def make_config(modes, omega=(1.0,), radius=6, t_end=0.1, steps=64, **kwargs) -> ProblemConfig:
    return ProblemConfig(omega=FrequencyVector(omega), box=TruncationBox(radius, len(omega)), t_end=t_end, steps=steps,
                         modes=tuple(sorted((tuple(n), complex(a)) for n, a in modes.items())), **kwargs)

def test_quadrature_rules():
    t = torch.linspace(0.0, 1.0, 12, dtype=torch.float64)
    h = float(t[1] - t[0])
    torch.testing.assert_close(cumulative_trapezoid(2 * t, h), t ** 2)
    z = torch.stack([t.to(torch.complex128), 2j * t], dim=-1)
    torch.testing.assert_close(cumulative_trapezoid(z, h)[-1], torch.tensor([0.5, 1j], dtype=torch.complex128))
    assert cumulative_trapezoid(t[:1], h).tolist() == [0.0]
    # exact for quadratics at every node, odd ones included
    f = 3 * t ** 2 - 2 * t + 1
    torch.testing.assert_close(cumulative_simpson(f, h), t ** 3 - t ** 2 + t)
    assert cumulative_simpson(f, h)[0] == 0

def test_linear_solution():
    box = TruncationBox(3, 1)
    state = FourierState.from_dict({(1,): 0.5 + 0.5j, (-2,): 0.25}, box)
    omega = FrequencyVector((1.0,))
    assert linear_solution(state, 0.0, omega).amplitude((1,)) == 0.5 + 0.5j
    rotated = linear_solution(state, math.pi, omega)
    assert abs(rotated.amplitude((1,)) + (0.5 + 0.5j)) < 1e-15
    torch.testing.assert_close(rotated.amplitudes.abs(), state.amplitudes.abs())

def test_rhs_examples():
    config = make_config({(0,): 0.7})
    assert all(value == 0 for value in rhs(initial_state(config), config).values())

    a = 0.3 + 0.2j
    config = make_config({(2,): a}, omega=(1.5,))
    values = rhs(initial_state(config), config)
    w = 3.0
    assert list(values) == [(2,)]
    assert abs(values[(2,)] - (-1j * w ** 2 * a + 1j * w * abs(a) ** 2 * a)) < 1e-14

    config = make_config({(2,): a}, omega=(1.5,), sign="gdnls_plus")
    assert abs(rhs(initial_state(config), config)[(2,)] - (-1j * w ** 2 * a - 1j * w * abs(a) ** 2 * a)) < 1e-14

    config = make_config({(0,): 0.2, (1,): 0.5j}, epsilon=0.0)
    values = rhs(initial_state(config), config)
    assert values[(1,)] == pytest.approx(-1j * 0.5j)
    assert values[(2,)] == 0 and values[(0,)] == 0

def test_picard_iterate_zero_is_linear():
    config = make_config({(1,): 0.4, (-1,): 0.1j})
    iterates = picard_iterate(initial_state(config), config, 0)
    assert len(iterates) == 1
    trajectory = iterates[0]
    frequencies = torch.tensor([-1.0, 1.0], dtype=torch.float64)
    expected = trajectory.amplitudes[0] * torch.exp(-1j * torch.outer(trajectory.times, frequencies ** 2))
    torch.testing.assert_close(trajectory.amplitudes, expected)

def test_picard_plane_wave_taylor_order():
    a, n0, t_end = 0.5, (1,), 0.4
    config = make_config({n0: a}, t_end=t_end, steps=256, quadrature="simpson")
    lam = 1.0 * abs(a) ** 2
    exact = complex(plane_wave_solution(n0, a, config.omega, config.coupling, t_end))
    iterates = picard_iterate(initial_state(config), config, 4)
    for k, trajectory in enumerate(iterates):
        assert trajectory.points == (n0,)
        error = abs(trajectory.final.amplitude(n0) - exact)
        assert error <= 4 * abs(a) * (lam * t_end) ** (k + 1)

def test_strict_support_overflow_names_iterate():
    config = make_config({(1,): 0.1, (-1,): 0.1}, radius=5, overflow="error")
    with pytest.raises(SupportOverflowError) as info:
        picard_iterate(initial_state(config), config, 3)
    assert info.value.iterate == 2
    assert info.value.radius == 5

def test_box_doubling_is_exact():
    config = make_config({(0,): 0.3, (1,): 0.2 - 0.1j}, radius=9, t_end=0.05, steps=32, overflow="error")
    doubled = config.replace(box=config.box.doubled())
    first = picard_iterate(initial_state(config), config, 2)[-1]
    second = picard_iterate(initial_state(doubled), doubled, 2)[-1]
    assert first.points == second.points
    assert torch.equal(first.amplitudes, second.amplitudes)

def test_integrate_linear_regime():
    config = make_config({(1,): 0.4, (-2,): 0.3j}, epsilon=0.0, t_end=1.0, steps=50)
    trajectory = integrate(initial_state(config), config)
    expected = linear_solution(initial_state(config), 1.0, config.omega)
    for n in expected.points:
        assert abs(trajectory.final.amplitude(n) - expected.amplitude(n)) < 1e-14

def test_integrate_plane_wave():
    a, n0 = 0.5 - 0.25j, (1,)
    config = make_config({n0: a}, radius=3, t_end=1.0, steps=1000)
    trajectory = integrate(plane_wave(n0, a, config.box), config)
    exact = plane_wave_solution(n0, a, config.omega, config.coupling, trajectory.times)
    column = trajectory.points.index(n0)
    error = (trajectory.amplitudes[:, column] - exact).abs().max() / abs(a)
    assert error < 1e-8
    assert relative_drift(trajectory.monitors[:, 0]) <= 1e-8

def test_integrate_fourth_order():
    # rotation rate <n0>|a|^2 = 1
    a, n0 = 1.0, (1,)
    errors = []
    for steps in (20, 40):
        config = make_config({n0: a}, radius=2, t_end=1.0, steps=steps)
        final = integrate(plane_wave(n0, a, config.box), config, monitors=False).final
        exact = complex(plane_wave_solution(n0, a, config.omega, config.coupling, 1.0))
        errors.append(abs(final.amplitude(n0) - exact))
    assert errors[0] / errors[1] == pytest.approx(16.0, abs=2.0)

def test_integrate_record_every():
    config = make_config({(1,): 0.1}, steps=10, record_every=5)
    trajectory = integrate(initial_state(config), config)
    torch.testing.assert_close(trajectory.times, torch.tensor([0.0, 0.05, 0.1], dtype=torch.float64))
    with pytest.raises(ConfigError):
        integrate(initial_state(config), config.replace(record_every=3))

def test_picard_limit_matches_integrator():
    modes = {(-1,): 0.2, (0,): 0.1 + 0.1j, (1,): -0.15j}
    config = make_config(modes, radius=6, t_end=0.01, steps=32, quadrature="simpson", overflow="clip")
    initial = initial_state(config)
    limit = picard_limit(initial, config, tol=1e-13, max_iter=40, rate=0.25)
    assert limit.converged
    trajectory = integrate(initial, config)
    value, _, _ = weighted_difference(limit.trajectory.points, limit.trajectory.amplitudes, trajectory.points,
                                      trajectory.amplitudes, trajectory.times, 0.25, 1)
    assert value <= 1e-8

def test_mass_drift_generic_data():
    config = make_config({(-1,): 0.3, (0,): 0.2j, (2,): 0.1}, radius=6, t_end=0.5, steps=200)
    trajectory = integrate(initial_state(config), config)
    assert relative_drift(trajectory.monitors[:, 0]) <= 1e-6

def test_conserved_quantities_single_mode():
    a, omega = 0.6 + 0.3j, FrequencyVector((2.0,))
    state = plane_wave((1,), a, TruncationBox(2, 1))
    monitors = conserved_quantities(state, omega)
    assert monitors.M == pytest.approx(abs(a) ** 2)
    assert monitors.H == pytest.approx(2.0 * abs(a) ** 2 + 0.5 * abs(a) ** 4)
    # Im(-i <n0> |a|^4) = -<n0> |a|^4
    assert monitors.E == pytest.approx(4.0 * abs(a) ** 2 - 3.0 * abs(a) ** 4 + 0.5 * abs(a) ** 6)

def test_tail_mass():
    state = FourierState.from_dict({(0,): 1.0, (3,): 0.25, (-4,): -0.5j}, TruncationBox(4, 1))
    assert tail_mass(state) == pytest.approx(0.5)
    assert tail_mass(state, margin=2) == pytest.approx(0.75)
    assert tail_mass(state, margin=0) == 0.0

def test_monitors_for_higher_power_track_mass_only(capsys):
    config = make_config({(-1,): 0.3, (1,): 0.2j}, radius=4, t_end=0.2, steps=40, p=2)
    trajectory = integrate(initial_state(config), config)
    assert relative_drift(trajectory.monitors[:, 0]) <= 1e-8
    assert torch.isnan(trajectory.monitors[:, 1:]).all()
    assert "only M is monitored" in capsys.readouterr().out
    single = conserved_quantities(initial_state(config), config.omega, p=2)
    assert single.M == pytest.approx(0.13) and math.isnan(single.H) and math.isnan(single.E)
