from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import torch

from qpdnls.errors import ConfigError, UsageError
from qpdnls.lattice import LatticePoint, TruncationBox

CDTYPE = torch.complex128

def points_tensor(points: Sequence[LatticePoint], nu: int) -> torch.Tensor:
    return torch.tensor(list(points), dtype=torch.int64).reshape(-1, nu)

def l1_tensor(coords: torch.Tensor) -> torch.Tensor:
    return coords.abs().sum(dim=-1)

def merge_points(*point_lists: Sequence[LatticePoint]) -> Tuple[LatticePoint, ...]:
    """Sorted union in lexicographic order."""
    merged = set()
    for points in point_lists:
        merged.update(points)
    return tuple(sorted(merged))

def embed(amplitudes: torch.Tensor, points: Sequence[LatticePoint], target: Sequence[LatticePoint]) -> torch.Tensor:
    """Scatter amplitudes (..., N) given on `points` into the ordering of `target` (a superset), zero elsewhere."""
    if tuple(points) == tuple(target):
        return amplitudes
    position = {n: i for i, n in enumerate(target)}
    index = torch.tensor([position[n] for n in points], dtype=torch.int64)
    out = torch.zeros(amplitudes.shape[:-1] + (len(target),), dtype=amplitudes.dtype)
    out[..., index] = amplitudes
    return out

@dataclass
class FourierState:
    """
    Amplitudes c(t, n) on a finite set of lattice points inside a truncation box.

    `points` is the structural support in lexicographic order; a point outside it has amplitude exactly 0.
    """
    time: float
    box: TruncationBox
    points: Tuple[LatticePoint, ...]
    amplitudes: torch.Tensor

    def __post_init__(self):
        self.points = tuple(tuple(int(x) for x in n) for n in self.points)
        self.amplitudes = torch.as_tensor(self.amplitudes).to(CDTYPE).reshape(-1)
        assert self.amplitudes.shape[0] == len(self.points), f"{len(self.points)} points but {self.amplitudes.shape[0]} amplitudes"
        if list(self.points) != sorted(set(self.points)):
            raise UsageError("state points must be unique and in lexicographic order")
        for n in self.points:
            if not self.box.contains(n):
                raise ConfigError(f"mode {list(n)} lies outside the box of radius {self.box.radius} (nu={self.box.nu})")

    @classmethod
    def from_dict(cls, amplitudes: Dict[LatticePoint, complex], box: TruncationBox, time: float = 0.0) -> "FourierState":
        points = tuple(sorted(tuple(n) for n in amplitudes))
        values = torch.tensor([complex(amplitudes[n]) for n in points], dtype=CDTYPE)
        return cls(time, box, points, values)

    @classmethod
    def zeros(cls, box: TruncationBox, time: float = 0.0) -> "FourierState":
        return cls(time, box, (), torch.zeros(0, dtype=CDTYPE))

    def as_dict(self) -> Dict[LatticePoint, complex]:
        return {n: complex(a) for n, a in zip(self.points, self.amplitudes.tolist())}

    def amplitude(self, n: Sequence[int]) -> complex:
        n = tuple(n)
        if n not in self.points:
            return 0j
        return complex(self.amplitudes[self.points.index(n)])

    def coords(self) -> torch.Tensor:
        return points_tensor(self.points, self.box.nu)

    def l1_mass(self) -> float:
        return float(self.amplitudes.abs().sum())

    def with_box(self, box: TruncationBox) -> "FourierState":
        return FourierState(self.time, box, self.points, self.amplitudes.clone())

    def __len__(self) -> int:
        return len(self.points)

@dataclass
class Trajectory:
    """Snapshots of a solution on a time mesh; amplitudes has shape (len(times), len(points))."""
    times: torch.Tensor
    box: TruncationBox
    points: Tuple[LatticePoint, ...]
    amplitudes: torch.Tensor
    config: Optional[object] = None
    monitors: Optional[torch.Tensor] = None
    duhamel: Optional[torch.Tensor] = field(default=None, repr=False)

    def __post_init__(self):
        self.times = torch.as_tensor(self.times, dtype=torch.float64).reshape(-1)
        if len(self.times) == 0:
            raise UsageError("a trajectory needs at least one snapshot")
        if len(self.times) > 1 and not bool((self.times[1:] > self.times[:-1]).all()):
            raise UsageError("trajectory times must be strictly increasing")
        assert self.amplitudes.shape == (len(self.times), len(self.points)), \
            f"amplitudes shape {tuple(self.amplitudes.shape)} does not match {len(self.times)} times x {len(self.points)} points"

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> FourierState:
        return FourierState(float(self.times[i]), self.box, self.points, self.amplitudes[i])

    @property
    def final(self) -> FourierState:
        return self.state(len(self) - 1)

    def coords(self) -> torch.Tensor:
        return points_tensor(self.points, self.box.nu)

def weighted_difference(points_a: Sequence[LatticePoint], a: torch.Tensor, points_b: Sequence[LatticePoint],
                        b: torch.Tensor, times: torch.Tensor, rate: float, nu: int):
    """
    sup over the mesh and the modes of e^(rate |n|_1) |a - b|, on the union of both supports.
    Returns (value, worst time, worst mode).
    """
    points = merge_points(points_a, points_b)
    if not points:
        return 0.0, float(times[0]), (0,) * nu
    diff = (embed(a, points_a, points) - embed(b, points_b, points)).abs()
    weighted = diff * torch.exp(rate * l1_tensor(points_tensor(points, nu)).to(torch.float64))
    flat = int(torch.argmax(weighted))
    i, j = divmod(flat, weighted.shape[-1])
    return float(weighted[i, j]), float(times[i]), points[j]
