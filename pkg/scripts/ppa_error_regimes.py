"""Proximal point runs with summable and vanishing errors: final distance to zero per regime."""
import argparse

import numpy as np

from stochsplit import operators as O
from stochsplit.ppa import ErrorRule, GammaRule, PpaConfig, run_ppa, validate_regime
from stochsplit.sampling import RelaxationSampler


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--iters", type=int, default=300)
    args = ap.parse_args()

    op = O.WeightedQuadratic([1.0, 0.5])
    relax = RelaxationSampler.uniform(0.5, 1.5)
    configs = {
        "exact, constant gamma": PpaConfig(op, GammaRule("constant", 0.5), relax=relax),
        "geometric errors": PpaConfig(op, GammaRule("constant", 0.5), ErrorRule("geometric", 0.5, 0.5), relax),
        "gaussian errors": PpaConfig(op, GammaRule("constant", 0.5), ErrorRule("gaussian", 0.5, 0.9), relax),
        "vanishing gamma": PpaConfig(op, GammaRule("power", 1.0, 0.5)),
    }
    x0 = np.array([4.0, -3.0])
    for name, cfg in configs.items():
        d = [np.linalg.norm(run_ppa(cfg, x0, args.iters, s, keep_iterates=False)[0]) for s in range(args.seeds)]
        print(f"{name:>22}  regime {validate_regime(cfg):>4}  mean {np.mean(d):.3e}  max {np.max(d):.3e}")


if __name__ == "__main__":
    main()
