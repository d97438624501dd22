"""
python run.py verify-combinatorics --max-depth 3 --out out/combinatorics
python run.py bounds --B 1 --kappa 1 --nu 1 --omega-norm 1
python run.py solve --config template/examples/solve.json --out out/solve
"""
import argparse
import sys
from dataclasses import replace
from typing import List, Optional

import torch
import wandb

from qpdnls.bounds import DecayProfile, compute_constants, verify_bounds
from qpdnls.checks import LemmaCheck, all_passed, report
from qpdnls.combinatorics import DEFAULT_BUDGET, DEFAULT_FLAT_BUDGET, verify_combinatorics
from qpdnls.config import ProblemConfig, load_config
from qpdnls.data import initial_state
from qpdnls.errors import ConfigError, QpdnlsError
from qpdnls.experiments import asymptotic_sweep, cauchy_ratio_experiment, existence_times, run_solve, uniqueness_probe
from qpdnls.persistence import ArtifactWriter
from qpdnls.solver.picard import iterate_difference, picard_iterate
from qpdnls.utils import print, set_all_seed

def _count(text: str) -> int:
    value = float(text)
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON problem config (see template/base_config.json)")
    common.add_argument("--out", type=str, default="out", help="output directory, created if absent")
    common.add_argument("--seed", type=int, default=None, help="overrides initial.random.seed")
    common.add_argument("--format", type=str, choices=["csv", "json"], default="csv", help="table format")
    common.add_argument("--threads", type=int, default=None, help="cap on torch intra-op threads")
    common.add_argument("--quiet", action="store_true", help="print only failures and errors")
    common.add_argument("--use_wandb", action="store_true", help="log summaries and table rows to wandb")
    return common

def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="qpdnls", description="Spectral simulation and verification toolkit for the "
                                     "derivative NLS with quasi-periodic initial data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="integrate the Fourier-coefficient system and certify decay",
                       description="Solve with the configured scheme (rk4_interaction, or the Picard limit), write the "
                       "trajectory, the (M, H, E) monitors and a decay certificate at rate kappa/2 against the uniform "
                       "decay constant C = 3/2 B^(1/2) (12/kappa)^nu (asserted when t_end <= t2).")

    p = sub.add_parser("picard", parents=[common], help="Picard iterates of the Duhamel map",
                       description="Write iterates c_0..c_K of c_k = c_0 + Duhamel(c_(k-1)) on the shared time mesh; "
                       "strict supports raise an overflow error naming the iterate that leaves the box.")
    p.add_argument("--iterations", type=int, default=None, help="number of iterates K (default picard.iterations)")

    p = sub.add_parser("verify-combinatorics", parents=[common], help="brute-force checks of the branch-tree calculus",
                       description="For every branch tree of depth <= max-depth: sigma = l + 1/2, index length 2 sigma, "
                       "index weight l, the P_k recursion 3 l prod P; the G^(k) families; M_k <= 3/2 on [0, 4/81]; "
                       "the factorial-sum bound sum prod alpha! < (2N)^L.")
    p.add_argument("--max-depth", type=int, default=3)
    p.add_argument("--budget", type=_count, default=DEFAULT_BUDGET, help="largest enumeration allowed, e.g. 1e6")
    p.add_argument("--flat-budget", type=_count, default=DEFAULT_FLAT_BUDGET,
                   help="index families above this size are summed blockwise")

    p = sub.add_parser("verify-bounds", parents=[common], help="lattice-sum, scalar and constant checks",
                       description="Reproduce C and t2 at unit parameters, monotonicity of the existence times, "
                       "the constrained and unconstrained weighted lattice sums against (12/kappa)^(|alpha|+nu r) "
                       "prod alpha! e^(-kappa|n|/2) and (6/kappa)^(|alpha|+nu r) prod alpha!, and the scalar "
                       "inequalities y^m e^(-Ky) <= m! K^-m, sum e^(-K|m|) <= 3/K, n! >= (n/e)^n.")
    p.add_argument("--radius", type=int, default=12, help="lattice truncation radius")

    p = sub.add_parser("bounds", parents=[common], help="existence times and constants",
                       description="Decay constant C, existence times t1..t4 (t1 = min(t2, t3), t4 for uniqueness "
                       "with rho = kappa/2), the Cauchy constants C' and C'' as JSON.")
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--omega-norm", type=float, default=1.0)

    p = sub.add_parser("asymptotics", parents=[common], help="weak-nonlinearity sweep at t = |eps|^(-1+eta)",
                       description="For each eps integrate to t = |eps|^(-1+eta) and measure the coefficient l1 sum "
                       "and the analytic Sobolev norm of u - u_linear; fit log-log slopes and check the per-row bound "
                       "3 (kappa/4 - 4 varrho)^-1 (12/kappa)^6 (|eps| t)^2.")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--varrho", type=float, default=None)
    p.add_argument("--eps", type=float, nargs="+", default=None)
    p.add_argument("--workers", type=int, default=None, help="parallel eps rows")

    p = sub.add_parser("uniqueness", parents=[common], help="compare two trajectory producers up to t4",
                       description="Weighted difference e^(kappa|n|/4)|c - d| between two producers over [0, min(t4, t_end)].")
    p.add_argument("--producers", type=str, nargs=2, default=None,
                   choices=["picard", "rk4", "picard_iterate", "picard_double_box"])

    p = sub.add_parser("cauchy", parents=[common], help="contraction of consecutive Picard iterates",
                       description="Weighted differences of consecutive Picard iterates against "
                       "C' (12 e C^2 (24/kappa)^(2nu+1) |omega| t)^k, asserted for t_end < t3.")
    p.add_argument("--iterations", type=int, default=None)
    return parser

def _load(args) -> ProblemConfig:
    if args.config is None:
        raise ConfigError(f"'{args.command}' needs --config")
    config = load_config(args.config)
    if args.seed is not None and config.random is not None:
        config = config.replace(random=replace(config.random, seed=args.seed))
    if args.use_wandb:
        config = config.replace(logging=replace(config.logging, use_wandb=True))
    return config

def cmd_verify_combinatorics(args, writer: ArtifactWriter) -> List[LemmaCheck]:
    checks = verify_combinatorics(args.max_depth, args.budget, args.flat_budget)
    writer.save_checks(checks)
    return checks

def cmd_verify_bounds(args, writer: ArtifactWriter) -> List[LemmaCheck]:
    checks = verify_bounds(args.radius)
    writer.save_checks(checks)
    return checks

def cmd_bounds(args, writer: ArtifactWriter) -> List[LemmaCheck]:
    constants = compute_constants(DecayProfile(args.B, args.kappa), args.nu, args.omega_norm)
    payload = {**constants.as_dict(), "input": {"B": args.B, "kappa": args.kappa, "nu": args.nu, "omega_norm": args.omega_norm}}
    writer.save_json("bounds.json", payload)
    print(f"C: {constants.C!r} | t1: {constants.t1!r} | t2: {constants.t2!r} | t3: {constants.t3!r} | t4: {constants.t4!r}",
          is_print_rank=writer.verbose)
    return []

def cmd_solve(args, writer: ArtifactWriter, config: ProblemConfig) -> List[LemmaCheck]:
    result = run_solve(config)
    writer.save_trajectory(result.trajectory)
    writer.save_monitors(result.trajectory)
    writer.save_json("summary.json", {**result.summary, "config": config.to_dict()})
    certificate = result.certificate
    if not result.summary["decay_certificate_asserted"]:
        return []
    return [LemmaCheck("decay_certificate", f"rate={certificate.rate!r} window={list(certificate.time_window)}",
                       f"<={certificate.threshold_constant!r}", repr(certificate.fitted_constant), certificate.passed)]

def cmd_picard(args, writer: ArtifactWriter, config: ProblemConfig) -> List[LemmaCheck]:
    K = config.picard.iterations if args.iterations is None else args.iterations
    iterates = picard_iterate(initial_state(config), config, K)
    constants = existence_times(config, initial_state(config))
    for k, trajectory in enumerate(iterates):
        writer.save_trajectory(trajectory, f"iterate_{k}")
    differences = [iterate_difference(b, a, constants.kappa / 4) for a, b in zip(iterates, iterates[1:])]
    writer.save_json("summary.json", {"iterations": K, "differences": differences, "supports": [len(t.points) for t in iterates],
                                      "constants": constants.as_dict(), "config": config.to_dict()})
    return []

def cmd_cauchy(args, writer: ArtifactWriter, config: ProblemConfig) -> List[LemmaCheck]:
    result = cauchy_ratio_experiment(config, args.iterations)
    writer.save_table("cauchy", result.rows)
    writer.save_json("summary.json", {**result.summary(), "config": config.to_dict()})
    checks = [LemmaCheck("cauchy_contraction", f"k={row.k} t={result.t!r}", f"<={row.bound!r}", repr(row.weighted_diff), row.passed)
              for row in result.rows if result.bound_asserted]
    checks.append(LemmaCheck("cauchy_converging", f"t={result.t!r}", "ratios not persistently > 1", str(result.converging),
                             result.converging))
    return checks

def cmd_asymptotics(args, writer: ArtifactWriter, config: ProblemConfig) -> List[LemmaCheck]:
    result = asymptotic_sweep(config, args.eta, args.varrho, args.eps, workers=args.workers)
    writer.save_table("asymptotics", result.rows)
    writer.save_json("summary.json", {**result.summary(), "config": config.to_dict()})
    checks = [LemmaCheck("sobolev_bound", f"eps={row.epsilon!r}", f"<={row.sobolev_bound!r}", repr(row.sobolev ** 2), row.sobolev_ok)
              for row in result.rows if row.regime == "supported" and row.reliable]
    checks += [LemmaCheck("mass_drift", f"eps={row.epsilon!r}", "<=1e-06", repr(row.mass_drift), row.mass_drift <= 1e-6)
               for row in result.rows if row.regime == "supported" and row.reliable]
    checks.append(LemmaCheck("sweep_slope", f"eta={result.eta!r}", f">={0.5 * result.eta!r}", repr(result.slope_sup),
                             result.slope_sup >= 0.5 * result.eta))
    checks.append(LemmaCheck("sweep_monotone", f"eta={result.eta!r}", "nonincreasing", str(result.monotone), result.monotone))
    return checks

def cmd_uniqueness(args, writer: ArtifactWriter, config: ProblemConfig) -> List[LemmaCheck]:
    result = uniqueness_probe(config, args.producers)
    writer.save_json("uniqueness.json", {**result.as_dict(), "config": config.to_dict()})
    return [LemmaCheck("uniqueness", f"{result.methods[0]} vs {result.methods[1]} horizon={result.horizon!r}", "<=1e-09",
                       repr(result.max_weighted_diff), result.passed)]

COMMANDS = {
    "solve": cmd_solve,
    "picard": cmd_picard,
    "verify-combinatorics": cmd_verify_combinatorics,
    "verify-bounds": cmd_verify_bounds,
    "bounds": cmd_bounds,
    "asymptotics": cmd_asymptotics,
    "uniqueness": cmd_uniqueness,
    "cauchy": cmd_cauchy,
}
NEEDS_CONFIG = {"solve", "picard", "asymptotics", "uniqueness", "cauchy"}

def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    verbose = not args.quiet
    use_wandb = False
    try:
        if args.threads is not None:
            torch.set_num_threads(args.threads)
        config = _load(args) if args.command in NEEDS_CONFIG else None
        set_all_seed(args.seed if args.seed is not None else 42)
        writer = ArtifactWriter(args.out, args.format, verbose)

        use_wandb = args.use_wandb or (config is not None and config.logging.use_wandb)
        if use_wandb:
            logging = config.logging if config is not None else None
            wandb.init(project=logging.project_name if logging else "qpdnls",
                       name=(logging.run_name if logging else None) or args.command,
                       config=config.to_dict() if config is not None else vars(args))

        command = COMMANDS[args.command]
        checks = command(args, writer, config) if args.command in NEEDS_CONFIG else command(args, writer)
        report(checks, verbose)
        passed = all_passed(checks)
        if use_wandb:
            wandb.log({"checks": len(checks), "failures": sum(not c.passed for c in checks), "pass": passed})
        print(f"[{args.command}] checks: {len(checks)} | failures: {sum(not c.passed for c in checks)} | "
              f"{'PASS' if passed else 'FAIL'}")
        return 0 if passed else 1
    except QpdnlsError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    finally:
        if use_wandb:
            wandb.finish()

def main() -> None:
    sys.exit(run())
