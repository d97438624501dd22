import cmath

import numpy as np
import pytest

from qpdnls.combinatorics import enumerate_branches
from qpdnls.config import ProblemConfig
from qpdnls.data import initial_state
from qpdnls.errors import EnumerationTooLarge, QuadratureError, UsageError
from qpdnls.lattice import FrequencyVector, TruncationBox
from qpdnls.solver import picard_iterate, tree_term

@pytest.fixture(scope="module")
def two_mode_problem():
    config = ProblemConfig(omega=FrequencyVector((1.0,)), box=TruncationBox(9, 1), t_end=0.2, steps=400,
                           modes=(((0,), 0.3 + 0j), ((1,), 0.2 - 0.1j)), quadrature="simpson", overflow="error")
    initial = initial_state(config)
    return config, initial, picard_iterate(initial, config, 2)

@pytest.mark.parametrize("k", [1, 2])
def test_branch_sum_matches_picard_iterate(two_mode_problem, k):
    config, initial, iterates = two_mode_problem
    trajectory = iterates[k]
    rng = np.random.default_rng(k)
    branches = enumerate_branches(k)
    for _ in range(20):
        i = int(rng.integers(1, len(trajectory.times)))
        j = int(rng.integers(0, len(trajectory.points)))
        t, n = float(trajectory.times[i]), trajectory.points[j]
        total = sum(tree_term(k, gamma, n, t, initial, config) for gamma in branches)
        assert abs(total - complex(trajectory.amplitudes[i, j])) <= 1e-7, (t, n)

def test_leaf0_is_the_linear_flow(two_mode_problem):
    config, initial, _ = two_mode_problem
    t = 0.123
    assert tree_term(2, 0, (1,), t, initial, config) == initial.amplitude((1,)) * cmath.exp(-1j * t)
    assert tree_term(1, 0, (3,), t, initial, config) == 0
    assert tree_term(1, 1, (1,), 0.0, initial, config) == 0

def test_reach_of_a_single_node(two_mode_problem):
    config, initial, _ = two_mode_problem
    # a depth-1 node only reaches m1 - m2 + m3 with m_j in {0, 1}
    assert tree_term(1, 1, (3,), 0.1, initial, config) == 0
    assert tree_term(1, 1, (2,), 0.1, initial, config) != 0

def test_errors(two_mode_problem):
    config, initial, _ = two_mode_problem
    with pytest.raises(UsageError):
        tree_term(1, (0, 0, 0), (0,), 0.1, initial, config)
    with pytest.raises(UsageError):
        tree_term(1, 1, (0,), 0.1, initial, config.replace(p=2))
    with pytest.raises(EnumerationTooLarge):
        tree_term(2, (1, 1, 1), (0,), 0.1, initial, config, budget=10)
    with pytest.raises(QuadratureError):
        tree_term(2, (1, 0, 1), (1,), 0.1, initial, config, tol=0.0, max_refine=1)
