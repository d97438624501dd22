import math
from typing import Sequence

import numpy as np
import torch

from qpdnls.bounds import DecayProfile
from qpdnls.errors import ConfigError
from qpdnls.lattice import FrequencyVector, TruncationBox, l1_norm, pairing
from qpdnls.solver.state import CDTYPE, FourierState

def random_state(box: TruncationBox, B: float, kappa: float, seed: int, radius: int = None) -> FourierState:
    """
    c(n) = B^(1/2) e^(-kappa |n|) e^(i theta(n)) r(n) on the l1 ball of `radius`, theta uniform in [0, 2 pi),
    r uniform in [0, 1]; draws follow the lexicographic order of the points.
    """
    DecayProfile(B, kappa)
    radius = box.radius if radius is None else radius
    if not 0 <= radius <= box.radius:
        raise ConfigError(f"random data radius {radius} must lie in [0, {box.radius}]")
    points = TruncationBox(radius, box.nu).points
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2 * math.pi, len(points))
    r = rng.uniform(0.0, 1.0, len(points))
    envelope = np.array([math.sqrt(B) * math.exp(-kappa * l1_norm(n)) for n in points])
    values = envelope * r * np.exp(1j * theta)
    return FourierState(0.0, box, points, torch.from_numpy(values).to(CDTYPE))

def modes_state(modes, box: TruncationBox) -> FourierState:
    return FourierState.from_dict({tuple(n): complex(a) for n, a in modes}, box)

def initial_state(config) -> FourierState:
    if config.modes is not None:
        return modes_state(config.modes, config.box)
    random = config.random
    return random_state(config.box, random.B, random.kappa, random.seed, random.radius)

def plane_wave(n0: Sequence[int], a: complex, box: TruncationBox) -> FourierState:
    return FourierState.from_dict({tuple(n0): complex(a)}, box)

def plane_wave_solution(n0: Sequence[int], a: complex, omega: FrequencyVector, coupling: float, t, p: int = 1):
    """Closed form a e^(-i(<n0>^2 - g <n0> |a|^(2p)) t) of the single-mode solution, g = s * epsilon."""
    w = pairing(n0, omega)
    frequency = w ** 2 - coupling * w * abs(a) ** (2 * p)
    t = torch.as_tensor(t, dtype=torch.float64)
    return complex(a) * torch.exp(-1j * frequency * t)

def fit_decay_profile(state: FourierState, kappa: float = 1.0) -> DecayProfile:
    """Smallest B with |c(n)| <= B^(1/2) e^(-kappa |n|) for the given kappa."""
    if len(state) == 0:
        return DecayProfile(1.0, kappa)
    weights = torch.exp(kappa * state.coords().abs().sum(dim=-1).to(torch.float64))
    root = float((state.amplitudes.abs() * weights).max())
    return DecayProfile(root ** 2 if root > 0 else 1.0, kappa)

def resolve_decay(config, state: FourierState) -> DecayProfile:
    return config.decay if config.decay is not None else fit_decay_profile(state)
