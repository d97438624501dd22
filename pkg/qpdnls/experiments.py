"""
Experiment drivers: solve with decay certification, Cauchy ratios of the Picard sequence,
the weak-nonlinearity sweep t = |eps|^(-1+eta) and the uniqueness probe.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from qpdnls.bounds import DecayCertificate, ExistenceTimes, check_decay, compute_constants
from qpdnls.config import ProblemConfig
from qpdnls.data import initial_state, resolve_decay
from qpdnls.errors import ConfigError
from qpdnls.lattice import LatticePoint
from qpdnls.solver.equation import FourierEquation
from qpdnls.solver.integrator import integrate
from qpdnls.solver.monitors import relative_drift, tail_mass
from qpdnls.solver.picard import iter_picard, linear_solution, picard_iterate, picard_limit
from qpdnls.solver.state import FourierState, Trajectory, embed, l1_tensor, points_tensor, weighted_difference
from qpdnls.utils import print, warn

MASS_DRIFT_LIMIT = 1e-6
UNIQUENESS_TOLERANCE = 1e-9
MONOTONE_SLACK = 1.05
SWEEP_SNAPSHOTS = 64
# multiples of machine epsilon below which an iterate difference is roundoff
RESOLUTION_ULPS = 64

def existence_times(config: ProblemConfig, initial: FourierState) -> ExistenceTimes:
    return compute_constants(resolve_decay(config, initial), config.nu, config.omega.norm)

def certify_decay(trajectory: Trajectory, constants: ExistenceTimes) -> DecayCertificate:
    """Rate kappa/2 against the uniform decay constant C."""
    return check_decay(trajectory, constants.kappa / 2, constants.C)

@dataclass
class SolveResult:
    trajectory: Trajectory
    constants: ExistenceTimes
    certificate: DecayCertificate
    summary: dict

def run_solve(config: ProblemConfig, initial: Optional[FourierState] = None) -> SolveResult:
    initial = initial_state(config) if initial is None else initial
    config.omega.check_resonances()
    constants = existence_times(config, initial)
    summary = {"scheme": config.scheme}
    if config.scheme == "rk4_interaction":
        trajectory = integrate(initial, config)
    else:
        limit = picard_limit(initial, config, rate=constants.kappa / 4)
        trajectory = limit.trajectory
        summary.update({"picard_iterations": limit.iterations, "picard_converged": limit.converged,
                        "picard_differences": limit.differences})
    certificate = certify_decay(trajectory, constants)
    summary.update({
        "constants": constants.as_dict(),
        "decay_certificate": certificate.as_dict(),
        "decay_certificate_asserted": config.t_end <= constants.t2,
        "tail_mass": tail_mass(trajectory.final),
    })
    if trajectory.monitors is not None:
        summary["drift"] = {name: relative_drift(trajectory.monitors[:, j]) for j, name in enumerate("MHE")}
    summary["pass"] = certificate.passed or not summary["decay_certificate_asserted"]
    return SolveResult(trajectory, constants, certificate, summary)

@dataclass
class CauchyRow:
    k: int
    weighted_diff: float
    measured_ratio: Optional[float]
    bound: float
    bound_ratio: float
    passed: bool

@dataclass
class CauchyReport:
    rows: List[CauchyRow]
    t: float
    bound_ratio: float
    bound_asserted: bool
    converging: bool
    constants: ExistenceTimes

    @property
    def passed(self) -> bool:
        return self.converging and all(row.passed for row in self.rows)

    def summary(self) -> dict:
        return {"t": self.t, "bound_ratio": self.bound_ratio, "bound_asserted": self.bound_asserted,
                "converging": self.converging, "pass": self.passed, "constants": self.constants.as_dict()}

def _weighted_sup(trajectory: Trajectory, values: torch.Tensor, rate: float) -> float:
    if len(trajectory.points) == 0:
        return 0.0
    weights = torch.exp(rate * l1_tensor(trajectory.coords()).to(torch.float64))
    return float((values.abs() * weights).max())

def cauchy_ratio_experiment(config: ProblemConfig, K: Optional[int] = None,
                            initial: Optional[FourierState] = None) -> CauchyReport:
    """
    Weighted sup differences e^(kappa|n|/4)|c_k - c_(k-1)| of consecutive Picard iterates over the mesh,
    their consecutive ratios and the contraction bound C' (12 e C^2 (24/kappa)^(2nu+1) |omega| t)^k.
    The bound is asserted only when t_end < t3.
    """
    K = config.picard.iterations if K is None else K
    initial = initial_state(config) if initial is None else initial
    constants = existence_times(config, initial)
    rate = constants.kappa / 4
    t = config.t_end
    bound_ratio = constants.cauchy_ratio(t)
    asserted = t < constants.t3

    rows = []
    iterates = iter_picard(initial, config)
    previous = next(iterates)
    previous_diff, previous_floor = None, None
    for k in range(1, K + 1):
        current = next(iterates)
        diff, _, _ = weighted_difference(current.points, current.duhamel, previous.points, previous.duhamel,
                                         current.times, rate, config.nu)
        floor = RESOLUTION_ULPS * torch.finfo(torch.float64).eps * _weighted_sup(current, current.duhamel, rate)
        ratio = None
        if previous_diff is not None and previous_diff > previous_floor and diff > floor:
            ratio = diff / previous_diff
        bound = constants.cauchy_bound(k, t)
        passed = not asserted or (diff <= bound and (ratio is None or ratio <= bound_ratio))
        rows.append(CauchyRow(k, diff, ratio, bound, bound_ratio, passed))
        print(f"[cauchy] k: {k} | weighted_diff: {diff:.3e} | ratio: {'-' if ratio is None else f'{ratio:.3e}'} | "
              f"bound_ratio: {bound_ratio:.3e}")
        previous, previous_diff, previous_floor = current, diff, floor

    resolved = [row.measured_ratio for row in rows if row.measured_ratio is not None]
    converging = not (len(resolved) >= 2 and all(r > 1 for r in resolved[-2:]))
    if not converging:
        warn(f"Picard differences are not contracting at t={t}: last ratios {resolved[-2:]}")
    return CauchyReport(rows, t, bound_ratio, asserted, converging, constants)

@dataclass
class AsymptoticRow:
    epsilon: float
    t: float
    sup_proxy: float
    sobolev: float
    eta: float
    varrho: float
    steps: int
    dt: float
    sobolev_bound: float
    sobolev_ok: bool
    decay_certified: bool
    reliable: bool
    regime: str
    mass_drift: float
    H_drift: float
    E_drift: float
    tail_mass: float

@dataclass
class SweepReport:
    rows: List[AsymptoticRow]
    slope_sup: float
    slope_sobolev: float
    monotone: bool
    passed: bool
    eta: float
    varrho: float
    thresholds: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"slope": self.slope_sup, "slope_sobolev": self.slope_sobolev, "monotone": self.monotone,
                "pass": self.passed, "eta": self.eta, "varrho": self.varrho, **self.thresholds}

def check_sweep_parameters(kappa: float, eta: float, varrho: float) -> None:
    if not 0 < eta < 1:
        raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    window = kappa / 4 - 4 * varrho
    if not 0 < window <= 1:
        raise ConfigError(f"varrho={varrho} violates 0 < kappa/4 - 4 varrho <= 1 (got {window}) for kappa={kappa}")

def sobolev_constant(kappa: float, varrho: float) -> float:
    return 3 / (kappa / 4 - 4 * varrho) * (12 / kappa) ** 6

def sweep_row_config(config: ProblemConfig, epsilon: float, eta: float) -> ProblemConfig:
    """Horizon t = |eps|^(-1+eta) on a mesh no coarser than config.dt, with SWEEP_SNAPSHOTS recorded intervals."""
    t = abs(epsilon) ** (-1 + eta)
    blocks = math.ceil(t / config.dt / SWEEP_SNAPSHOTS)
    return config.replace(epsilon=epsilon, t_end=t, steps=blocks * SWEEP_SNAPSHOTS, record_every=blocks,
                          scheme="rk4_interaction")

def resolution_indicator(config: ProblemConfig) -> float:
    """dt times the largest phase rate of the interaction terms."""
    return config.dt * FourierEquation(config).max_phase_rate()

def _sweep_row(args) -> AsymptoticRow:
    config, initial, epsilon, eta, varrho, constants, resolution_limit = args
    row_config = sweep_row_config(config, epsilon, eta)
    t, steps = row_config.t_end, row_config.steps
    resolution = resolution_indicator(row_config)
    reliable = resolution <= resolution_limit
    if not reliable:
        warn(f"eps={epsilon:.3e}: dt * max phase rate = {resolution:.3e} exceeds {resolution_limit}, row marked unreliable")

    trajectory = integrate(initial, row_config)
    final = trajectory.final
    linear = linear_solution(initial, t, config.omega)
    diff = final.amplitudes - embed(linear.amplitudes, linear.points, final.points)
    norms = l1_tensor(final.coords()).to(torch.float64)
    sup_proxy = float(diff.abs().sum())
    sobolev = float(torch.sqrt((torch.exp(2 * varrho * norms) * diff.abs() ** 2).sum()))
    bound = sobolev_constant(constants.kappa, varrho) * (abs(epsilon) * t) ** 2
    certificate = certify_decay(trajectory, constants)
    if not certificate.passed:
        warn(f"eps={epsilon:.3e}: decay at rate {certificate.rate} not certified along the trajectory, row marked unreliable")
    reliable = reliable and certificate.passed
    regime = "unsupported-regime" if t >= 1 / abs(epsilon) else "supported"
    drifts = [relative_drift(trajectory.monitors[:, j]) for j in range(3)]
    print(f"[asymptotics] eps: {epsilon:.2e} | t: {t:.2f} | steps: {steps} | sup_proxy: {sup_proxy:.4e} | "
          f"sobolev: {sobolev:.4e} | mass_drift: {drifts[0]:.2e}")
    return AsymptoticRow(epsilon, t, sup_proxy, sobolev, eta, varrho, steps, row_config.dt, bound, sobolev ** 2 <= bound,
                         certificate.passed, reliable, regime, drifts[0], drifts[1], drifts[2], tail_mass(final))

def fitted_slope(eps: Sequence[float], values: Sequence[float]) -> float:
    pairs = [(math.log(abs(e)), math.log(v)) for e, v in zip(eps, values) if v > 0]
    if len(pairs) < 2:
        return float("nan")
    x, y = zip(*pairs)
    return float(np.polyfit(np.array(x), np.array(y), 1)[0])

def asymptotic_sweep(config: ProblemConfig, eta: Optional[float] = None, varrho: Optional[float] = None,
                     eps_list: Optional[Sequence[float]] = None, initial: Optional[FourierState] = None,
                     workers: Optional[int] = None) -> SweepReport:
    settings = config.experiments
    initial = initial_state(config) if initial is None else initial
    constants = existence_times(config, initial)
    kappa = constants.kappa
    eta = settings.eta if eta is None else eta
    varrho = (settings.varrho if settings.varrho is not None else kappa / 32) if varrho is None else varrho
    eps_list = list(settings.eps if eps_list is None else eps_list)
    workers = settings.workers if workers is None else workers
    check_sweep_parameters(kappa, eta, varrho)
    if any(e == 0 for e in eps_list):
        raise ConfigError("epsilon values in the sweep must be nonzero")

    # largest |eps| first so the trend check reads along decreasing eps
    eps_list = sorted(eps_list, key=abs, reverse=True)
    jobs = [(config, initial, e, eta, varrho, constants, settings.resolution_limit) for e in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(job) for job in jobs]

    for row in rows:
        if row.regime != "supported":
            warn(f"eps={row.epsilon:.3e}: t={row.t:.3e} is not below 1/|eps|, row flagged {row.regime}")
    asserted = [row for row in rows if row.regime == "supported" and row.reliable]
    slope_sup = fitted_slope([r.epsilon for r in asserted], [r.sup_proxy for r in asserted])
    slope_sobolev = fitted_slope([r.epsilon for r in asserted], [r.sobolev for r in asserted])
    monotone = all(b.sup_proxy <= MONOTONE_SLACK * a.sup_proxy and b.sobolev <= MONOTONE_SLACK * a.sobolev
                   for a, b in zip(asserted, asserted[1:]))
    passed = (len(asserted) >= 2 and slope_sup >= 0.5 * eta and monotone
              and all(r.sobolev_ok and r.mass_drift <= MASS_DRIFT_LIMIT for r in asserted))
    thresholds = {"slope_min": 0.5 * eta, "slope_window": [0.5 * eta, 2 * eta],
                  "slope_in_window": 0.5 * eta <= slope_sup <= 2 * eta, "mass_drift_limit": MASS_DRIFT_LIMIT,
                  "sobolev_constant": sobolev_constant(kappa, varrho), "monotone_slack": MONOTONE_SLACK}
    return SweepReport(rows, slope_sup, slope_sobolev, monotone, passed, eta, varrho, thresholds)

@dataclass
class UniquenessReport:
    max_weighted_diff: float
    rate: float
    t4: float
    horizon: float
    methods: Tuple[str, str]
    worst_time: float
    worst_mode: LatticePoint
    passed: bool
    diff_profile: List[float]

    def as_dict(self) -> dict:
        out = asdict(self)
        out["methods"] = list(self.methods)
        out["worst_mode"] = list(self.worst_mode)
        out["pass"] = out.pop("passed")
        return out

def produce(producer: str, initial: FourierState, config: ProblemConfig, rate: float) -> Trajectory:
    if producer == "picard":
        return picard_limit(initial, config, rate=rate, clip=True).trajectory
    if producer == "rk4":
        return integrate(initial, config.replace(record_every=1), monitors=False)
    if producer == "picard_iterate":
        return picard_iterate(initial, config, config.picard.iterations)[-1]
    if producer == "picard_double_box":
        box = config.box.doubled()
        return picard_iterate(initial.with_box(box), config.replace(box=box), config.picard.iterations, clip=False)[-1]
    raise ConfigError(f"unknown producer {producer!r}")

def uniqueness_probe(config: ProblemConfig, producers: Optional[Sequence[str]] = None,
                     initial: Optional[FourierState] = None) -> UniquenessReport:
    """Max of e^(kappa|n|/4)|c - d| between two producers over the mesh of [0, min(t4, t_end)]."""
    producers = tuple(config.experiments.producers if producers is None else producers)
    if len(producers) != 2:
        raise ConfigError(f"uniqueness needs exactly two producers, got {list(producers)}")
    initial = initial_state(config) if initial is None else initial
    constants = existence_times(config, initial)
    horizon = min(constants.t4, config.t_end)
    probe_config = config.replace(t_end=horizon)
    rate = constants.kappa / 4
    first, second = (produce(name, initial, probe_config, rate) for name in producers)

    value, worst_time, worst_mode = weighted_difference(first.points, first.amplitudes, second.points, second.amplitudes,
                                                        first.times, rate, config.nu)
    points = sorted(set(first.points) | set(second.points))
    weights = torch.exp(rate * l1_tensor(points_tensor(points, config.nu)).to(torch.float64)) if points else None
    profile = ((embed(first.amplitudes, first.points, points) - embed(second.amplitudes, second.points, points)).abs()
               * weights).amax(dim=-1).tolist() if points else [0.0] * len(first.times)
    passed = value <= UNIQUENESS_TOLERANCE
    if not passed:
        warn(f"producers {producers[0]} and {producers[1]} differ by {value:.3e} at t={worst_time}, n={list(worst_mode)}")
    return UniquenessReport(value, rate, constants.t4, horizon, producers, worst_time, worst_mode, passed, profile)
