"""
python create_config.py --out_dir tmp --exp_name sweep_nu2 --nu 2 --omega 1 1.4142135623730951 --box_radius 8 --t_end 0.01 --steps 128 --B 1 --kappa 1 --use_wandb
"""
import os
from copy import deepcopy
import shutil
import argparse
import json
from typing import List, Optional

from qpdnls.config import config_from_dict

def create_single_config(
    out_dir: str,
    exp_name: str,
    nu: int,
    omega: List[float],
    box_radius: int,
    t_end: float,
    steps: int,
    B: float,
    kappa: float,
    seed: int = 42,
    radius: Optional[int] = None,
    p: int = 1,
    sign: str = "dnls_minus",
    epsilon: float = 1.0,
    scheme: str = "rk4_interaction",
    quadrature: str = "simpson",
    use_wandb: bool = False,
    base_config: str = "template/base_config.json",
) -> str:
    run_path = os.path.join(out_dir, exp_name)

    if not os.path.exists(out_dir):
        os.makedirs(out_dir)

    with open(base_config, "r") as f:
        base = json.load(f)

    config_content = deepcopy(base)
    config_content["nu"] = nu
    config_content["omega"] = [float(w) for w in omega]
    config_content["box_radius"] = box_radius
    config_content["t_end"] = t_end
    config_content["steps"] = steps
    config_content["p"] = p
    config_content["sign"] = sign
    config_content["epsilon"] = epsilon
    config_content["scheme"] = scheme
    config_content["quadrature"] = quadrature
    config_content["initial"] = {"random": {"B": B, "kappa": kappa, "seed": seed, "radius": radius}}

    config_content['logging']['use_wandb'] = use_wandb
    config_content['logging']['run_name'] = exp_name

    # fail here rather than at run time
    config = config_from_dict(config_content)
    print(f"nu: {config.nu}, box points: {len(config.box):,}, dt: {config.dt:.3e}, coupling: {config.coupling}")

    if os.path.exists(run_path):
        shutil.rmtree(run_path)

    os.makedirs(run_path)
    path = os.path.join(run_path, "config.json")
    with open(path, "w") as new_config:
        json.dump(config_content, new_config, indent=4)
    return path

if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--out_dir", type=str, help="Output directory to store the configs", default="tmp")
    parser.add_argument("--exp_name", type=str, help="Experiment name", default="dummy_exp")
    parser.add_argument("--nu", type=int, help="Number of frequencies", default=2)
    parser.add_argument("--omega", type=float, nargs="+", help="Frequency vector", default=[1.0, 2 ** 0.5])
    parser.add_argument("--box_radius", type=int, help="l1 radius of the truncation box", default=6)
    parser.add_argument("--t_end", type=float, help="Final time", default=1e-3)
    parser.add_argument("--steps", type=int, help="Number of time steps", default=64)
    parser.add_argument("--B", type=float, help="Decay amplitude of the random data", default=1.0)
    parser.add_argument("--kappa", type=float, help="Decay rate of the random data", default=1.0)
    parser.add_argument("--seed", type=int, help="Seed of the random data", default=42)
    parser.add_argument("--radius", type=int, help="Support radius of the random data", default=None)
    parser.add_argument("--p", type=int, help="Nonlinearity degree", default=1)
    parser.add_argument("--sign", type=str, help="dnls_minus or gdnls_plus", default="dnls_minus")
    parser.add_argument("--epsilon", type=float, help="Nonlinearity strength", default=1.0)
    parser.add_argument("--scheme", type=str, help="rk4_interaction or picard", default="rk4_interaction")
    parser.add_argument("--quadrature", type=str, help="trapezoid or simpson", default="simpson")
    parser.add_argument("--use_wandb", action="store_true", help="Use wandb for logging")

    args = parser.parse_args()

    create_single_config(
        out_dir=args.out_dir,
        exp_name=args.exp_name,
        nu=args.nu,
        omega=args.omega,
        box_radius=args.box_radius,
        t_end=args.t_end,
        steps=args.steps,
        B=args.B,
        kappa=args.kappa,
        seed=args.seed,
        radius=args.radius,
        p=args.p,
        sign=args.sign,
        epsilon=args.epsilon,
        scheme=args.scheme,
        quadrature=args.quadrature,
        use_wandb=args.use_wandb,
    )

    print("Configs created successfully! ✅")
