"""
Lattice points n in Z^nu, the frequency pairing <n> = n.omega, l1 truncation boxes and the
combinatorial alternating sum cas(m_1, ..., m_r) = m_1 - m_2 + m_3 - ...

Conventions: |n| is the l1 norm (also on concatenated tuples), |omega| is the l-infinity norm.
"""
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple

import torch

from qpdnls.errors import ConfigError, UsageError
from qpdnls.utils import warn

LatticePoint = Tuple[int, ...]

RESONANCE_TOL = 1e-12
RESONANCE_MAX_DENOMINATOR = 64

@dataclass(frozen=True)
class FrequencyVector:
    omega: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        if len(self.omega) == 0:
            raise ConfigError("omega must have at least one entry")
        if any(w == 0.0 for w in self.omega):
            raise ConfigError(f"omega entries must be nonzero, got {list(self.omega)}")

    @property
    def nu(self) -> int:
        return len(self.omega)

    @property
    def norm(self) -> float:
        return max(abs(w) for w in self.omega)

    def resonances(self) -> List[Tuple[int, int, Fraction]]:
        """Pairs (i, j) whose ratio omega_i / omega_j is within RESONANCE_TOL of a small rational."""
        found = []
        for i, j in itertools.combinations(range(self.nu), 2):
            ratio = self.omega[i] / self.omega[j]
            approx = Fraction(ratio).limit_denominator(RESONANCE_MAX_DENOMINATOR)
            if abs(approx.numerator) <= RESONANCE_MAX_DENOMINATOR and abs(ratio - float(approx)) <= RESONANCE_TOL * max(1.0, abs(ratio)):
                found.append((i, j, approx))
        return found

    def check_resonances(self) -> bool:
        # rational independence is declared by the user, this only catches accidents
        found = self.resonances()
        for i, j, approx in found:
            warn(f"omega[{i}]/omega[{j}] = {self.omega[i] / self.omega[j]!r} is within {RESONANCE_TOL} of {approx}; "
                 f"omega is assumed rationally independent")
        return not found

def _check_dim(n: Sequence[int], nu: int) -> None:
    if len(n) != nu:
        raise ConfigError(f"dimension mismatch: point {list(n)} has length {len(n)}, expected {nu}")

def pairing(n: Sequence[int], omega: FrequencyVector) -> float:
    _check_dim(n, omega.nu)
    return float(sum(float(nj) * wj for nj, wj in zip(n, omega.omega)))

def pairing_tensor(coords: torch.Tensor, omega: FrequencyVector) -> torch.Tensor:
    """<n> for every row of an (N, nu) integer tensor, as float64."""
    if coords.shape[-1] != omega.nu:
        raise ConfigError(f"dimension mismatch: coordinates have {coords.shape[-1]} columns, expected {omega.nu}")
    w = torch.tensor(omega.omega, dtype=torch.float64)
    return (coords.to(torch.float64) * w).sum(dim=-1)

def l1_norm(n) -> int:
    """l1 norm of a point, or of a concatenated tuple of points."""
    if len(n) > 0 and isinstance(n[0], (tuple, list)):
        return sum(l1_norm(m) for m in n)
    return sum(abs(int(x)) for x in n)

def cas(points: Sequence[Sequence[int]]) -> LatticePoint:
    if len(points) == 0:
        raise UsageError("cas needs at least one point")
    nu = len(points[0])
    out = [0] * nu
    for j, m in enumerate(points):
        _check_dim(m, nu)
        sign = 1 if j % 2 == 0 else -1
        for i in range(nu):
            out[i] += sign * int(m[i])
    return tuple(out)

def ball_count(nu: int, radius: int) -> int:
    """Exact number of points of Z^nu with |n|_1 <= radius."""
    return sum(2 ** k * math.comb(nu, k) * math.comb(radius, k) for k in range(min(nu, radius) + 1))

def _ball_points(nu: int, radius: int) -> Iterable[LatticePoint]:
    if nu == 1:
        for x in range(-radius, radius + 1):
            yield (x,)
        return
    for x in range(-radius, radius + 1):
        for rest in _ball_points(nu - 1, radius - abs(x)):
            yield (x,) + rest

@dataclass(frozen=True)
class TruncationBox:
    radius: int
    nu: int

    def __post_init__(self):
        if self.radius < 0:
            raise ConfigError(f"box radius must be >= 0, got {self.radius}")
        if self.nu < 1:
            raise ConfigError(f"nu must be >= 1, got {self.nu}")

    def contains(self, n: Sequence[int]) -> bool:
        return len(n) == self.nu and l1_norm(n) <= self.radius

    def __contains__(self, n) -> bool:
        return self.contains(n)

    def __len__(self) -> int:
        return ball_count(self.nu, self.radius)

    @cached_property
    def points(self) -> Tuple[LatticePoint, ...]:
        """Members in lexicographic order."""
        return tuple(_ball_points(self.nu, self.radius))

    def coords(self) -> torch.Tensor:
        return torch.tensor(self.points, dtype=torch.int64).reshape(-1, self.nu)

    def doubled(self) -> "TruncationBox":
        return TruncationBox(2 * self.radius, self.nu)

def format_point(n: Sequence[int]) -> str:
    return "[" + ",".join(str(int(x)) for x in n) + "]"

def parse_point(text: str) -> LatticePoint:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise UsageError(f"lattice point must look like [1,-2], got {text!r}")
    body = text[1:-1].strip()
    if not body:
        raise UsageError("lattice point needs at least one coordinate")
    try:
        return tuple(int(x) for x in body.split(","))
    except ValueError as e:
        raise UsageError(f"bad lattice point {text!r}: {e}") from e
