from typing import Dict, Optional, Sequence

import torch

from qpdnls.errors import EnumerationTooLarge
from qpdnls.lattice import LatticePoint, TruncationBox
from qpdnls.solver.state import CDTYPE, FourierState, l1_tensor, points_tensor

DEFAULT_TUPLE_BUDGET = 5 * 10 ** 7
# batch x tuples elements per chunk when evaluating a plan on a whole trajectory
CHUNK_ELEMENTS = 2 ** 24

def alternating_signs(r: int) -> torch.Tensor:
    return torch.tensor([1 if j % 2 == 0 else -1 for j in range(r)], dtype=torch.int64)

class AlternatingConvolution:
    """
    Precomputed plan for conv(n) = sum over (2p+1)-tuples (m_1, ..., m_r) of input modes with
    m_1 - m_2 + m_3 - ... = n of c(m_1) conj(c(m_2)) c(m_3) ...

    Tuples are enumerated in lexicographic order of input positions and accumulated in that order,
    so results do not depend on thread count. Outputs are restricted to `out_box` when given and to
    `target_points` (in that order) when given; otherwise every reachable mode is kept.

    Args:
        in_points: input support in lexicographic order.
        nu: lattice dimension.
        p: nonlinearity power, 2p+1 factors.
        out_box: optional truncation box for the outputs.
        target_points: optional output ordering; tuples landing elsewhere are dropped.
        budget: maximum number of tuples.
    """
    def __init__(self, in_points: Sequence[LatticePoint], nu: int, p: int = 1, out_box: Optional[TruncationBox] = None,
                 target_points: Optional[Sequence[LatticePoint]] = None, budget: int = DEFAULT_TUPLE_BUDGET) -> None:
        self.in_points = tuple(in_points)
        self.nu = nu
        self.p = p
        self.order = 2 * p + 1
        n_in = len(self.in_points)
        count = n_in ** self.order
        if count > budget:
            raise EnumerationTooLarge(f"{self.order}-tuples over {n_in} modes", count, budget)

        if n_in == 0:
            self.index = torch.zeros((self.order, 0), dtype=torch.int64)
            self.out_index = torch.zeros(0, dtype=torch.int64)
            self.out_points = tuple(target_points) if target_points is not None else ()
            return

        coords = points_tensor(self.in_points, nu)
        grids = torch.meshgrid(*([torch.arange(n_in)] * self.order), indexing="ij")
        index = torch.stack([g.reshape(-1) for g in grids])
        out_coords = (coords[index] * alternating_signs(self.order).reshape(-1, 1, 1)).sum(dim=0)

        keep = None
        if out_box is not None:
            keep = l1_tensor(out_coords) <= out_box.radius
        if keep is not None:
            index, out_coords = index[:, keep], out_coords[keep]

        if target_points is None:
            unique, inverse = torch.unique(out_coords, dim=0, return_inverse=True)
            self.out_points = tuple(tuple(row) for row in unique.tolist())
            self.out_index = inverse.reshape(-1)
        else:
            self.out_points = tuple(target_points)
            position = {n: i for i, n in enumerate(self.out_points)}
            unique, inverse = torch.unique(out_coords, dim=0, return_inverse=True)
            mapped = torch.tensor([position.get(tuple(row), -1) for row in unique.tolist()], dtype=torch.int64)
            slot = mapped[inverse.reshape(-1)]
            landed = slot >= 0
            index, self.out_index = index[:, landed], slot[landed]
        self.index = index

    @property
    def num_tuples(self) -> int:
        return self.index.shape[1]

    def _apply(self, amplitudes: torch.Tensor) -> torch.Tensor:
        product = amplitudes[..., self.index[0]]
        for j in range(1, self.order):
            factor = amplitudes[..., self.index[j]]
            product = product * (factor.conj() if j % 2 == 1 else factor)
        out = torch.zeros(amplitudes.shape[:-1] + (len(self.out_points),), dtype=CDTYPE)
        return out.index_add_(out.dim() - 1, self.out_index, product)

    def __call__(self, amplitudes: torch.Tensor) -> torch.Tensor:
        """amplitudes: (..., len(in_points)) complex; returns (..., len(out_points))."""
        amplitudes = amplitudes.to(CDTYPE)
        if amplitudes.dim() < 2 or self.num_tuples == 0:
            return self._apply(amplitudes)
        rows = max(1, CHUNK_ELEMENTS // max(1, self.num_tuples))
        if amplitudes.shape[0] <= rows:
            return self._apply(amplitudes)
        return torch.cat([self._apply(chunk) for chunk in torch.split(amplitudes, rows, dim=0)], dim=0)

def alternating_convolution(state: FourierState, p: int = 1, clip: bool = True,
                            out_box: Optional[TruncationBox] = None) -> Dict[LatticePoint, complex]:
    """Constrained alternating sum of the state, clipped to `out_box` (the state's box by default) when `clip`."""
    box = (out_box or state.box) if clip else None
    plan = AlternatingConvolution(state.points, state.box.nu, p, out_box=box)
    values = plan(state.amplitudes)
    return {n: complex(v) for n, v in zip(plan.out_points, values.tolist())}
