"""
Mass, momentum and energy as spatial (Bohr) means of the quasi-periodic field u = sum c(n) e^(i<n>x):

    M = sum |c|^2
    H = sum <n>|c|^2 + g/2 sum_{n1-n2+n3-n4=0} c1 conj(c2) c3 conj(c4)
    E = sum <n>^2|c|^2 + 3g/2 Im mean(|u|^2 u conj(u_x)) + g^2/2 mean(|u|^6)

with g = s * epsilon (g = 1 for the unscaled dNLS). H and E are the cubic (p = 1) integrals;
for p >= 2 only M is computed and the H, E columns hold NaN.
"""
from typing import NamedTuple

import torch

from qpdnls.lattice import pairing_tensor
from qpdnls.solver.convolution import AlternatingConvolution
from qpdnls.solver.state import FourierState, Trajectory, embed, l1_tensor, points_tensor

class Monitors(NamedTuple):
    M: float
    H: float
    E: float

def _monitor_table(points, amplitudes: torch.Tensor, nu: int, omega, coupling: float, p: int = 1) -> torch.Tensor:
    """amplitudes (T, N) -> (T, 3) columns M, H, E."""
    if len(points) == 0:
        return torch.zeros(amplitudes.shape[0], 3, dtype=torch.float64)
    density = amplitudes.abs() ** 2
    mass = density.sum(dim=-1)
    if p != 1:
        undefined = torch.full_like(mass, float("nan"))
        return torch.stack([mass, undefined, undefined], dim=-1)
    frequencies = pairing_tensor(points_tensor(points, nu), omega)
    momentum = (frequencies * density).sum(dim=-1)
    kinetic = (frequencies ** 2 * density).sum(dim=-1)

    plan = AlternatingConvolution(points, nu, p=1)
    cubic = plan(amplitudes)
    on_out = embed(amplitudes, points, plan.out_points)
    out_frequencies = pairing_tensor(points_tensor(plan.out_points, nu), omega)
    quartic = (cubic * on_out.conj()).sum(dim=-1).real
    derivative = (cubic * (-1j * out_frequencies) * on_out.conj()).sum(dim=-1).imag
    sextic = (cubic.abs() ** 2).sum(dim=-1)

    H = momentum + coupling / 2 * quartic
    E = kinetic + 1.5 * coupling * derivative + 0.5 * coupling ** 2 * sextic
    return torch.stack([mass, H, E], dim=-1)

def conserved_quantities(state: FourierState, omega, coupling: float = 1.0, p: int = 1) -> Monitors:
    row = _monitor_table(state.points, state.amplitudes.reshape(1, -1), state.box.nu, omega, coupling, p)[0]
    return Monitors(*(float(x) for x in row))

def trajectory_monitors(trajectory: Trajectory, omega, coupling: float = 1.0, p: int = 1) -> torch.Tensor:
    return _monitor_table(trajectory.points, trajectory.amplitudes, trajectory.box.nu, omega, coupling, p)

def relative_drift(series: torch.Tensor) -> float:
    """max_t |X(t) - X(0)| / |X(0)| (absolute drift when X(0) = 0)."""
    reference = float(series[0].abs())
    drift = float((series - series[0]).abs().max())
    return drift / reference if reference > 0 else drift

def tail_mass(state: FourierState, margin: int = 1) -> float:
    """sum of |c(n)| over |n|_1 > R - margin, a proxy for the box truncation error."""
    if len(state) == 0:
        return 0.0
    outer = l1_tensor(state.coords()) > state.box.radius - margin
    return float(state.amplitudes.abs()[outer].sum())
