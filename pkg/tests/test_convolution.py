import itertools

import numpy as np
import pytest
import torch

from qpdnls.lattice import TruncationBox, cas
from qpdnls.solver.convolution import AlternatingConvolution, alternating_convolution
from qpdnls.solver.state import FourierState

def brute_force(state: FourierState, p: int) -> dict:
    values = state.as_dict()
    out = {}
    for tuple_ in itertools.product(state.points, repeat=2 * p + 1):
        term = 1 + 0j
        for j, m in enumerate(tuple_):
            term *= values[m].conjugate() if j % 2 == 1 else values[m]
        n = cas(tuple_)
        out[n] = out.get(n, 0j) + term
    return out

def random_state(seed: int, nu: int, size: int, radius: int = 3) -> FourierState:
    rng = np.random.default_rng(seed)
    box = TruncationBox(radius * 5, nu)
    candidates = TruncationBox(radius, nu).points
    picked = sorted(candidates[i] for i in rng.choice(len(candidates), size=size, replace=False))
    values = rng.normal(size=size) + 1j * rng.normal(size=size)
    return FourierState.from_dict(dict(zip(picked, values)), box)

@pytest.mark.parametrize("p", [1, 2])
@pytest.mark.parametrize("seed,nu,size", [(0, 1, 3), (1, 1, 5), (2, 2, 4), (3, 2, 5), (4, 3, 5)])
def test_matches_exhaustive_enumeration(p, seed, nu, size):
    state = random_state(seed, nu, size)
    expected = brute_force(state, p)
    result = alternating_convolution(state, p, clip=False)
    assert set(result) == set(expected)
    for n, value in expected.items():
        assert abs(result[n] - value) <= 1e-12 * max(1.0, abs(value))

def test_single_mode():
    box = TruncationBox(4, 2)
    a = 0.3 - 0.4j
    result = alternating_convolution(FourierState.from_dict({(1, -1): a}, box), p=1)
    assert list(result) == [(1, -1)]
    assert abs(result[(1, -1)] - abs(a) ** 2 * a) < 1e-15

def test_zero_state():
    assert alternating_convolution(FourierState.zeros(TruncationBox(3, 1))) == {}

def test_two_modes():
    a, b = 0.5 + 0.1j, -0.2 + 0.7j
    state = FourierState.from_dict({(0,): a, (1,): b}, TruncationBox(4, 1))
    result = alternating_convolution(state)
    assert sorted(result) == [(-1,), (0,), (1,), (2,)]
    # only (1, 0, 1) lands on 2
    assert abs(result[(2,)] - b * a.conjugate() * b) < 1e-14
    expected = brute_force(state, 1)
    for n in result:
        assert abs(result[n] - expected[n]) < 1e-14

def test_clipping_and_targets():
    state = FourierState.from_dict({(-2,): 1.0, (2,): 0.5j}, TruncationBox(6, 1))
    full = alternating_convolution(state, clip=False)
    assert max(abs(n[0]) for n in full) == 6
    clipped = alternating_convolution(state, out_box=TruncationBox(2, 1))
    assert set(clipped) == {n for n in full if abs(n[0]) <= 2}
    plan = AlternatingConvolution(state.points, 1, target_points=((2,), (-6,), (5,)))
    values = plan(state.amplitudes)
    assert plan.out_points == ((2,), (-6,), (5,))
    assert complex(values[0]) == pytest.approx(full[(2,)])
    assert complex(values[1]) == pytest.approx(full[(-6,)])
    assert complex(values[2]) == 0

def test_batched_matches_rowwise():
    state = random_state(7, 2, 5)
    plan = AlternatingConvolution(state.points, 2, p=1)
    batch = torch.stack([state.amplitudes, 2 * state.amplitudes, state.amplitudes.conj()])
    out = plan(batch)
    for i in range(3):
        torch.testing.assert_close(out[i], plan(batch[i]))
