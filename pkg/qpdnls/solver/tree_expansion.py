"""
Branch-by-branch evaluation of a Picard iterate.

For a branch tree gamma the term Phi_gamma(s, n) is
    Leaf0:  e^(-i<n>^2 s) c(n)
    Node:   g i<n> e^(-i<n>^2 s) int_0^s e^(i<n>^2 r) sum_{m1-m2+m3=n} Phi_1(r,m1) conj(Phi_2(r,m2)) Phi_3(r,m3) dr
and Leaf1 is evaluated as Node(0, 0, 0). Summing Phi_gamma over Gamma^(k) gives the k-th iterate.
The nested integrals use cumulative Simpson on a grid over [0, t] refined until two levels agree.
"""
import cmath
import math
from typing import Sequence, Tuple

import torch

from qpdnls.combinatorics import BranchTree, check_tree, format_tree, is_node, leaf_count
from qpdnls.errors import EnumerationTooLarge, QuadratureError, UsageError
from qpdnls.lattice import pairing, pairing_tensor
from qpdnls.solver.quadrature import cumulative_simpson
from qpdnls.solver.state import CDTYPE, FourierState, points_tensor

DEFAULT_LEAF_BUDGET = 10 ** 6

def _branch_profile(gamma: BranchTree, grid: torch.Tensor, initial: FourierState, config) -> Tuple[tuple, torch.Tensor]:
    """(points, values) with values[i, j] = Phi_gamma(grid[i], points[j])."""
    if not is_node(gamma):
        if gamma == 1:
            return _branch_profile((0, 0, 0), grid, initial, config)
        frequencies = pairing_tensor(initial.coords(), config.omega)
        return initial.points, initial.amplitudes.reshape(1, -1) * torch.exp(-1j * torch.outer(grid, frequencies ** 2)).to(CDTYPE)

    profiles = [_branch_profile(child, grid, initial, config) for child in gamma]
    (p1, v1), (p2, v2), (p3, v3) = profiles
    nu = config.nu
    if not (p1 and p2 and p3):
        return (), torch.zeros(len(grid), 0, dtype=CDTYPE)
    c1, c2, c3 = (points_tensor(p, nu) for p in (p1, p2, p3))
    i1, i2, i3 = (g.reshape(-1) for g in torch.meshgrid(torch.arange(len(p1)), torch.arange(len(p2)),
                                                        torch.arange(len(p3)), indexing="ij"))
    out_coords = c1[i1] - c2[i2] + c3[i3]
    unique, inverse = torch.unique(out_coords, dim=0, return_inverse=True)
    products = v1[:, i1] * v2[:, i2].conj() * v3[:, i3]
    summed = torch.zeros(len(grid), len(unique), dtype=CDTYPE).index_add_(1, inverse.reshape(-1), products)

    frequencies = pairing_tensor(unique, config.omega)
    phase = torch.exp(1j * torch.outer(grid, frequencies ** 2)).to(CDTYPE)
    h = float(grid[1] - grid[0])
    values = config.coupling * 1j * frequencies * phase.conj() * cumulative_simpson(phase * summed, h)
    return tuple(tuple(row) for row in unique.tolist()), values

def _evaluate(gamma: BranchTree, n: tuple, t: float, steps: int, initial: FourierState, config) -> complex:
    grid = torch.linspace(0.0, t, steps + 1, dtype=torch.float64)
    points, values = _branch_profile(gamma, grid, initial, config)
    if n not in points:
        return 0j
    return complex(values[-1, points.index(n)])

def tree_term(k: int, gamma: BranchTree, n: Sequence[int], t: float, initial: FourierState, config,
              quad_steps: int = 64, tol: float = 1e-9, max_refine: int = 8, budget: int = DEFAULT_LEAF_BUDGET) -> complex:
    """Phi_gamma(t, n) for gamma in Gamma^(k)."""
    check_tree(gamma, k)
    if config.p != 1:
        raise UsageError(f"the branch expansion covers the cubic nonlinearity only, got p={config.p}")
    n = tuple(n)
    leaves = len(initial.points) ** leaf_count(gamma)
    if leaves > budget:
        raise EnumerationTooLarge(f"lattice tuples of branch {format_tree(gamma)}", leaves, budget)
    if gamma == 0:
        return initial.amplitude(n) * cmath.exp(-1j * pairing(n, config.omega) ** 2 * t)
    if t == 0:
        return 0j

    steps = quad_steps
    value = _evaluate(gamma, n, t, steps, initial, config)
    change = math.inf
    for _ in range(max_refine):
        steps *= 2
        refined = _evaluate(gamma, n, t, steps, initial, config)
        change = abs(refined - value)
        if change <= tol:
            return refined
        value = refined
    raise QuadratureError(f"branch {format_tree(gamma)} at n={list(n)}, t={t}: nested quadrature did not reach "
                          f"{tol} with {steps} intervals (last change {change:.3e})")
