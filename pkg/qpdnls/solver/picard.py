"""
Picard iteration of the Duhamel map on a shared uniform time mesh:

    c_0(t, n) = e^(-i<n>^2 t) c(n)
    c_k(t, n) = c_0(t, n) + g i <n> e^(-i<n>^2 t) int_0^t e^(i<n>^2 s) conv(c_(k-1))(s, n) ds

With overflow="error" the supports are exact (no lattice truncation) and the box is only a guard;
with overflow="clip" the sums are Galerkin-truncated to the box.
"""
import itertools
from typing import Iterator, List, NamedTuple, Optional

import torch

from qpdnls.errors import SupportOverflowError
from qpdnls.lattice import l1_norm, pairing_tensor
from qpdnls.solver.convolution import AlternatingConvolution
from qpdnls.solver.quadrature import cumulative_integral
from qpdnls.solver.state import CDTYPE, FourierState, Trajectory, embed, merge_points, points_tensor, weighted_difference
from qpdnls.utils import warn

def linear_solution(initial: FourierState, t: float, omega) -> FourierState:
    """e^(-i<n>^2 t) c(n), a pure phase rotation per mode."""
    frequencies = pairing_tensor(initial.coords(), omega)
    rotated = initial.amplitudes * torch.exp(-1j * frequencies ** 2 * t).to(CDTYPE)
    return FourierState(initial.time + t, initial.box, initial.points, rotated)

def linear_trajectory(initial: FourierState, omega, times: torch.Tensor) -> torch.Tensor:
    frequencies = pairing_tensor(initial.coords(), omega)
    return initial.amplitudes.reshape(1, -1) * torch.exp(-1j * torch.outer(times, frequencies ** 2)).to(CDTYPE)

def iter_picard(initial: FourierState, config, clip: Optional[bool] = None) -> Iterator[Trajectory]:
    """Yields iterate 0, 1, 2, ... lazily; each carries its Duhamel part in `duhamel`."""
    clip = config.overflow == "clip" if clip is None else clip
    times = config.mesh()
    base_points = initial.points
    linear = linear_trajectory(initial, config.omega, times)
    previous = Trajectory(times, config.box, base_points, linear, config, duhamel=torch.zeros_like(linear))
    yield previous

    for k in itertools.count(1):
        plan = AlternatingConvolution(previous.points, config.nu, config.p, out_box=config.box if clip else None)
        if not clip:
            for n in plan.out_points:
                if l1_norm(n) > config.box.radius:
                    raise SupportOverflowError(k, n, config.box.radius)
        conv = plan(previous.amplitudes)
        frequencies = pairing_tensor(points_tensor(plan.out_points, config.nu), config.omega)
        phase = torch.exp(1j * torch.outer(times, frequencies ** 2)).to(CDTYPE)
        integral = cumulative_integral(phase * conv, config.dt, config.quadrature)
        correction = config.coupling * 1j * frequencies * phase.conj() * integral

        points = merge_points(base_points, plan.out_points)
        duhamel = embed(correction, plan.out_points, points)
        amplitudes = embed(linear, base_points, points) + duhamel
        previous = Trajectory(times, config.box, points, amplitudes, config, duhamel=duhamel)
        yield previous

def picard_iterate(initial: FourierState, config, K: int, clip: Optional[bool] = None) -> List[Trajectory]:
    """Iterates 0..K on the configured mesh."""
    assert K >= 0, f"K must be >= 0, got {K}"
    return list(itertools.islice(iter_picard(initial, config, clip), K + 1))

class PicardLimit(NamedTuple):
    trajectory: Trajectory
    iterations: int
    differences: List[float]
    converged: bool

def iterate_difference(current: Trajectory, previous: Trajectory, rate: float) -> float:
    """Weighted sup of c_k - c_(k-1), taken on the Duhamel parts so tiny corrections stay resolved."""
    value, _, _ = weighted_difference(current.points, current.duhamel, previous.points, previous.duhamel,
                                      current.times, rate, current.box.nu)
    return value

def picard_limit(initial: FourierState, config, tol: Optional[float] = None, max_iter: Optional[int] = None,
                 rate: float = 0.0, clip: Optional[bool] = None) -> PicardLimit:
    tol = config.picard.tol if tol is None else tol
    max_iter = config.picard.max_iter if max_iter is None else max_iter
    differences = []
    iterates = iter_picard(initial, config, clip)
    previous = next(iterates)
    for k, current in enumerate(iterates, start=1):
        differences.append(iterate_difference(current, previous, rate))
        previous = current
        if differences[-1] < tol:
            return PicardLimit(current, k, differences, True)
        if k >= max_iter:
            break
    warn(f"Picard iteration did not reach {tol} after {max_iter} iterates (last difference {differences[-1]:.3e})")
    return PicardLimit(previous, max_iter, differences, False)
