"""
Classic fourth-order Runge-Kutta in the interaction picture a(t, n) = e^(i<n>^2 t) c(t, n).
The linear rotation is integrated exactly, so the step size is limited by the nonlinearity only.
"""
import torch

from qpdnls.errors import ConfigError
from qpdnls.solver.equation import FourierEquation
from qpdnls.solver.monitors import trajectory_monitors
from qpdnls.solver.state import CDTYPE, FourierState, Trajectory, embed
from qpdnls.utils import warn

RK4_WEIGHTS = (1 / 6, 1 / 3, 1 / 3, 1 / 6)
RK4_NODES = (0.5, 0.5, 1.0)
STEP_SANITY_LIMIT = 0.5

def step_size_indicator(initial: FourierState, equation: FourierEquation, dt: float) -> float:
    """|epsilon| max|<n>| (l1 mass)^(2p) dt."""
    config = equation.config
    return abs(config.epsilon) * equation.max_frequency() * initial.l1_mass() ** (2 * config.p) * dt

def rk4_step(equation: FourierEquation, t: float, a: torch.Tensor, dt: float) -> torch.Tensor:
    k1 = equation.interaction_rhs(t, a)
    k2 = equation.interaction_rhs(t + RK4_NODES[0] * dt, a + RK4_NODES[0] * dt * k1)
    k3 = equation.interaction_rhs(t + RK4_NODES[1] * dt, a + RK4_NODES[1] * dt * k2)
    k4 = equation.interaction_rhs(t + RK4_NODES[2] * dt, a + RK4_NODES[2] * dt * k3)
    return a + dt * (RK4_WEIGHTS[0] * k1 + RK4_WEIGHTS[1] * k2 + RK4_WEIGHTS[2] * k3 + RK4_WEIGHTS[3] * k4)

def integrate(initial: FourierState, config, monitors: bool = True) -> Trajectory:
    """
    Integrate on the uniform mesh of `config` over every mode of the box, keeping every
    `record_every`-th snapshot. Monitors (M, H, E) are attached per snapshot when `monitors`.
    """
    if config.steps % config.record_every != 0:
        raise ConfigError(f"steps ({config.steps}) must be a multiple of record_every ({config.record_every})")
    equation = FourierEquation(config)
    dt = config.dt
    indicator = step_size_indicator(initial, equation, dt)
    if indicator >= STEP_SANITY_LIMIT:
        warn(f"step size sanity check: |eps| max<n> mass^{2 * config.p} dt = {indicator:.3e} >= {STEP_SANITY_LIMIT}")

    a = embed(initial.amplitudes, initial.points, equation.points).clone()
    records = [a.clone()]
    times = [0.0]
    for i in range(config.steps):
        t = i * dt
        a = rk4_step(equation, t, a, dt)
        if (i + 1) % config.record_every == 0:
            records.append(a.clone())
            times.append((i + 1) * dt)

    times = torch.tensor(times, dtype=torch.float64)
    interaction = torch.stack(records)
    amplitudes = interaction * torch.exp(-1j * torch.outer(times, equation.dispersion)).to(CDTYPE)
    trajectory = Trajectory(times, config.box, equation.points, amplitudes, config)
    if monitors:
        if config.p != 1:
            warn(f"H and E are cubic-nonlinearity integrals; with p={config.p} only M is monitored")
        trajectory.monitors = trajectory_monitors(trajectory, config.omega, config.coupling, config.p)
    return trajectory
