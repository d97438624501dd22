"""
Explicit constants of the existence argument, decay certificates for solver output and
brute-force checks of the weighted lattice-sum and scalar inequalities the argument relies on.
"""
import itertools
import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from qpdnls.checks import LemmaCheck
from qpdnls.combinatorics import enumerate_A, factorial_product
from qpdnls.errors import ConfigError, EnumerationTooLarge, UsageError
from qpdnls.lattice import LatticePoint, TruncationBox

C_PRIME_READING = "C' = (1/3) * C^2 * (24/kappa)^nu * e^(1/2), C taken twice as written"

@dataclass(frozen=True)
class DecayProfile:
    """|c(n)| <= B^(1/2) e^(-kappa |n|)."""
    B: float
    kappa: float

    def __post_init__(self):
        if not self.B > 0:
            raise ConfigError(f"decay profile needs B > 0, got {self.B}")
        if not 0 < self.kappa <= 1:
            raise ConfigError(f"decay profile needs 0 < kappa <= 1, got {self.kappa}")

@dataclass(frozen=True)
class ExistenceTimes:
    B: float
    kappa: float
    nu: int
    omega_norm: float
    C: float
    t1: float
    t2: float
    t3: float
    t4: float
    C_prime: float
    C_dprime: float
    C_dprime_time: float

    def cauchy_ratio(self, t: float) -> float:
        """12 e C^2 (24/kappa)^(2nu+1) |omega| t, the contraction factor between Picard iterates."""
        return 12 * math.e * self.C ** 2 * (24 / self.kappa) ** (2 * self.nu + 1) * self.omega_norm * t

    def c_dprime(self, t: float) -> float:
        ratio = self.cauchy_ratio(t)
        if ratio >= 1:
            return math.inf
        return self.C_prime / (1 - ratio)

    def cauchy_bound(self, k: int, t: float) -> float:
        return self.C_prime * self.cauchy_ratio(t) ** k

    def as_dict(self) -> dict:
        out = asdict(self)
        out["C_prime_reading"] = C_PRIME_READING
        return out

def compute_constants(profile: DecayProfile, nu: int, omega_norm: float) -> ExistenceTimes:
    if nu < 1:
        raise ConfigError(f"nu must be >= 1, got {nu}")
    if not omega_norm > 0:
        raise ConfigError(f"|omega| must be > 0, got {omega_norm}")
    B, kappa = profile.B, profile.kappa
    C = 1.5 * math.sqrt(B) * (12 / kappa) ** nu
    t2 = 4 * kappa ** (2 * nu + 1) / (81 * 12 ** (2 * nu + 1) * B * omega_norm)
    t3 = 1 / (12 * math.e * C ** 2 * (24 / kappa) ** (2 * nu + 1) * omega_norm)
    t1 = min(t2, t3)
    rho = kappa / 2
    t4 = min(t1, 1 / (36 * C ** 2 * math.e * (12 / rho) ** (2 * nu + 1) * omega_norm))
    C_prime = C ** 2 * (24 / kappa) ** nu * math.exp(0.5) / 3
    reference = t1 / 2
    times = ExistenceTimes(B, kappa, nu, omega_norm, C, t1, t2, t3, t4, C_prime, 0.0, reference)
    return ExistenceTimes(**{**asdict(times), "C_dprime": times.c_dprime(reference)})

@dataclass
class DecayCertificate:
    rate: float
    fitted_constant: float
    threshold_constant: float
    passed: bool
    worst_mode: LatticePoint
    worst_time: float
    time_window: Tuple[float, float]

    def as_dict(self) -> dict:
        return {"rate": self.rate, "fitted_constant": self.fitted_constant, "threshold_constant": self.threshold_constant,
                "pass": self.passed, "worst_mode": list(self.worst_mode), "worst_time": self.worst_time,
                "time_window": list(self.time_window)}

def check_decay(trajectory, rate: float, threshold: float) -> DecayCertificate:
    """Fit max over the sampled (t, n) of |c(t, n)| e^(rate |n|_1) and compare with `threshold`."""
    if trajectory is None or len(trajectory) == 0:
        raise UsageError("check_decay needs a nonempty trajectory")
    if not rate > 0:
        raise UsageError(f"decay rate must be > 0, got {rate}")
    times = trajectory.times
    window = (float(times[0]), float(times[-1]))
    if len(trajectory.points) == 0:
        return DecayCertificate(rate, 0.0, threshold, 0.0 <= threshold, (0,) * trajectory.box.nu, window[0], window)
    weights = torch.exp(rate * trajectory.coords().abs().sum(dim=-1).to(torch.float64))
    weighted = trajectory.amplitudes.abs() * weights
    flat = int(torch.argmax(weighted))
    i, j = divmod(flat, weighted.shape[1])
    fitted = float(weighted[i, j])
    return DecayCertificate(rate, fitted, threshold, fitted <= threshold, trajectory.points[j], float(times[i]), window)

@dataclass
class LatticeSumReport:
    sums: List[float]
    bound: float
    passed: bool
    monotone: bool
    constrained: bool

    @property
    def total(self) -> float:
        return self.sums[-1]

def lattice_sum_bound(nu: int, r: int, alpha: Sequence[int], kappa: float, n: Optional[Sequence[int]] = None) -> float:
    """(12/kappa)^(|alpha|+nu r) prod alpha_j! e^(-kappa |n|/2) when constrained to cas = n, else (6/kappa)^(...) prod alpha_j!."""
    exponent = sum(alpha) + nu * r
    if n is None:
        return (6 / kappa) ** exponent * factorial_product(alpha)
    return math.exp(-kappa * sum(abs(x) for x in n) / 2) * (12 / kappa) ** exponent * factorial_product(alpha)

def _factor_terms(norms: torch.Tensor, alpha_j: int, kappa: float) -> torch.Tensor:
    return norms.to(torch.float64) ** alpha_j * torch.exp(-kappa * norms.to(torch.float64))

def lattice_sum_check(nu: int, r: int, alpha: Sequence[int], kappa: float, n: Optional[Sequence[int]] = None,
                      radius: int = 12, constrained: bool = True, budget: int = 10 ** 7) -> LatticeSumReport:
    """
    Truncated weighted sum over tuples (m_1..m_r) with every |m_j|_1 <= radius of prod |m_j|^alpha_j e^(-kappa |m_j|),
    restricted to cas(m) = n when `constrained`. `sums[R]` is the truncation at radius R.
    """
    if len(alpha) != r:
        raise UsageError(f"alpha must have length r={r}, got {len(alpha)}")
    if not 0 < kappa <= 1:
        raise ConfigError(f"kappa must lie in (0, 1], got {kappa}")
    ball = TruncationBox(radius, nu).coords()
    norms = ball.abs().sum(dim=-1)

    if not constrained:
        per_radius = torch.zeros(radius + 1, dtype=torch.float64)
        sums = torch.ones(radius + 1, dtype=torch.float64)
        for a in alpha:
            per_radius.zero_()
            per_radius.index_add_(0, norms, _factor_terms(norms, a, kappa))
            sums = sums * torch.cumsum(per_radius, dim=0)
        bound = lattice_sum_bound(nu, r, alpha, kappa)
    else:
        if n is None or len(n) != nu:
            raise UsageError(f"constrained lattice sum needs a target point of dimension {nu}")
        count = len(ball) ** (r - 1)
        if count > budget:
            raise EnumerationTooLarge(f"lattice tuples (nu={nu}, r={r}, radius={radius})", count, budget)
        target = torch.tensor(list(n), dtype=torch.int64)
        if r == 1:
            factors = [target.reshape(1, nu)]
        else:
            grids = torch.meshgrid(*([torch.arange(len(ball))] * (r - 1)), indexing="ij")
            index = [g.reshape(-1) for g in grids]
            factors = [ball[idx] for idx in index]
            partial = sum(f if j % 2 == 0 else -f for j, f in enumerate(factors))
            last_sign = 1 if (r - 1) % 2 == 0 else -1
            factors.append(last_sign * (target - partial))
        factor_norms = [f.abs().sum(dim=-1) for f in factors]
        largest = torch.stack(factor_norms).amax(dim=0)
        keep = largest <= radius
        terms = torch.ones(int(keep.sum()), dtype=torch.float64)
        for a, fn in zip(alpha, factor_norms):
            terms = terms * _factor_terms(fn[keep], a, kappa)
        per_radius = torch.zeros(radius + 1, dtype=torch.float64).index_add_(0, largest[keep], terms)
        sums = torch.cumsum(per_radius, dim=0)
        bound = lattice_sum_bound(nu, r, alpha, kappa, n)

    values = sums.tolist()
    monotone = all(b >= a for a, b in zip(values, values[1:]))
    return LatticeSumReport(values, bound, all(v <= bound for v in values) and monotone, monotone, constrained)

def scalar_bound_checks(max_m: int = 8, max_n: int = 20) -> List[LemmaCheck]:
    checks = []
    K_grid = [round(0.1 * i, 10) for i in range(1, 11)]
    y = np.logspace(-3, 4, 2001)
    for m in range(1, max_m + 1):
        for K in K_grid:
            samples = np.append(y, m / K)
            log_values = m * np.log(samples) - K * samples
            log_bound = math.lgamma(m + 1) - m * math.log(K)
            worst = float(log_values.max())
            checks.append(LemmaCheck("power_exponential", f"m={m} K={K}", f"<={math.exp(log_bound)!r}",
                                     repr(math.exp(worst)), worst <= log_bound + 1e-12))
    for K in K_grid:
        M = math.ceil(50 / K)
        total = float(np.exp(-K * np.abs(np.arange(-M, M + 1))).sum())
        checks.append(LemmaCheck("geometric_sum", f"K={K}", f"<={3 / K!r}", repr(total), total <= 3 / K))
    for n in range(0, max_n + 1):
        lower = (n / math.e) ** n if n > 0 else 1.0
        checks.append(LemmaCheck("stirling_lower", f"n={n}", f">={lower!r}", str(math.factorial(n)),
                                 math.factorial(n) >= lower))
    return checks

def constants_checks() -> List[LemmaCheck]:
    checks = []
    unit = compute_constants(DecayProfile(1.0, 1.0), 1, 1.0)
    checks.append(LemmaCheck("decay_constant", "B=1 kappa=1 nu=1 |omega|=1", "18.0", repr(unit.C),
                             abs(unit.C - 18.0) <= 1e-15 * 18.0))
    t2 = 4 / 139968
    checks.append(LemmaCheck("existence_time_t2", "B=1 kappa=1 nu=1 |omega|=1", repr(t2), repr(unit.t2),
                             abs(unit.t2 - t2) <= 1e-15 * t2))
    t3 = 1 / (12 * math.e * 324 * 13824)
    checks.append(LemmaCheck("existence_time_t3", "B=1 kappa=1 nu=1 |omega|=1", repr(t3), repr(unit.t3),
                             abs(unit.t3 - t3) <= 1e-15 * t3))

    kappas, Bs, omegas = [0.25, 0.5, 0.75, 1.0], [0.5, 1.0, 2.0], [0.5, 1.0, 2.0]
    for nu in (1, 2):
        grid = {(k, B, w): compute_constants(DecayProfile(B, k), nu, w) for k, B, w in itertools.product(kappas, Bs, omegas)}
        for (k, B, w), c in grid.items():
            instance = f"nu={nu} kappa={k} B={B} |omega|={w}"
            checks.append(LemmaCheck("existence_order", instance, "t4<=t1=min(t2,t3)", f"t1={c.t1!r} t4={c.t4!r}",
                                     c.t1 == min(c.t2, c.t3) and c.t4 <= c.t1))
        for B, w in itertools.product(Bs, omegas):
            series = [grid[(k, B, w)].t2 for k in kappas]
            checks.append(LemmaCheck("t2_increasing_in_kappa", f"nu={nu} B={B} |omega|={w}", "strictly increasing",
                                     repr(series), all(b > a for a, b in zip(series, series[1:]))))
        for k, w in itertools.product(kappas, omegas):
            series = [grid[(k, B, w)].t2 for B in Bs]
            checks.append(LemmaCheck("t2_decreasing_in_B", f"nu={nu} kappa={k} |omega|={w}", "strictly decreasing",
                                     repr(series), all(b < a for a, b in zip(series, series[1:]))))
        for k, B in itertools.product(kappas, Bs):
            series = [grid[(k, B, w)].t2 for w in omegas]
            checks.append(LemmaCheck("t2_decreasing_in_omega", f"nu={nu} kappa={k} B={B}", "strictly decreasing",
                                     repr(series), all(b < a for a, b in zip(series, series[1:]))))
    return checks

def lattice_checks(radius: int = 12, kappa: float = 1.0, max_r: int = 3, max_weight: int = 2,
                   budget: int = 10 ** 7) -> List[LemmaCheck]:
    checks = []
    for nu in (1, 2):
        targets = [(0,) * nu, (1,) + (0,) * (nu - 1)]
        for r in range(1, max_r + 1):
            alphas = [a for w in range(max_weight + 1) for a in enumerate_A(r, w).members]
            for alpha in alphas:
                for n in targets:
                    report = lattice_sum_check(nu, r, alpha, kappa, n, radius, budget=budget)
                    checks.append(LemmaCheck("lattice_sum_constrained", f"nu={nu} r={r} alpha={list(alpha)} n={list(n)} radius={radius}",
                                             f"<={report.bound!r}", repr(report.total), report.passed))
                report = lattice_sum_check(nu, r, alpha, kappa, radius=radius, constrained=False)
                checks.append(LemmaCheck("lattice_sum_unconstrained", f"nu={nu} r={r} alpha={list(alpha)} radius={radius}",
                                         f"<={report.bound!r}", repr(report.total), report.passed))
    return checks

def verify_bounds(radius: int = 12, budget: int = 10 ** 7) -> List[LemmaCheck]:
    return constants_checks() + lattice_checks(radius=radius, budget=budget) + scalar_bound_checks()
