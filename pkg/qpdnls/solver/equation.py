"""
The Fourier-coefficient system

    d/dt c(t, n) = -i <n>^2 c(t, n) + g i <n> conv(c)(n),    g = s * epsilon,

restricted to a finite set of modes (Galerkin truncation to the box).
"""
from typing import Dict, Optional, Sequence

import torch

from qpdnls.lattice import LatticePoint, pairing_tensor
from qpdnls.solver.convolution import AlternatingConvolution
from qpdnls.solver.state import CDTYPE, FourierState, embed, merge_points, points_tensor

class FourierEquation:
    def __init__(self, config, points: Optional[Sequence[LatticePoint]] = None) -> None:
        self.config = config
        self.points = tuple(points) if points is not None else config.box.points
        self.coupling = config.coupling
        self.frequencies = pairing_tensor(points_tensor(self.points, config.nu), config.omega)
        self.dispersion = self.frequencies ** 2
        self.plan = AlternatingConvolution(self.points, config.nu, config.p, target_points=self.points)

    def nonlinear(self, amplitudes: torch.Tensor) -> torch.Tensor:
        return self.coupling * 1j * self.frequencies * self.plan(amplitudes)

    def rhs(self, amplitudes: torch.Tensor) -> torch.Tensor:
        return -1j * self.dispersion * amplitudes + self.nonlinear(amplitudes)

    def phase(self, t: float) -> torch.Tensor:
        """e^(i <n>^2 t)."""
        return torch.exp(1j * self.dispersion * t).to(CDTYPE)

    def interaction_rhs(self, t: float, a: torch.Tensor) -> torch.Tensor:
        """Right side for a(t, n) = e^(i<n>^2 t) c(t, n); the linear rotation drops out exactly."""
        rotation = self.phase(t)
        return rotation * self.nonlinear(a * rotation.conj())

    def max_frequency(self) -> float:
        return float(self.frequencies.abs().max()) if len(self.points) else 0.0

    def max_phase_rate(self) -> float:
        """Bound on |<n>^2 - <m_1>^2 + <m_2>^2 - ...| over the interaction terms."""
        return (self.config.p * 2 + 2) * float(self.dispersion.max()) if len(self.points) else 0.0

def rhs(state: FourierState, config) -> Dict[LatticePoint, complex]:
    """Time derivative at every mode of the state's support and every mode the nonlinearity reaches in the box."""
    reach = AlternatingConvolution(state.points, config.nu, config.p, out_box=config.box).out_points
    points = merge_points(state.points, reach)
    equation = FourierEquation(config, points)
    values = equation.rhs(embed(state.amplitudes, state.points, points))
    return {n: complex(v) for n, v in zip(points, values.tolist())}
