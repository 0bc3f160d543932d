"""Compare constant, uniform and super-relaxed laws on the scalar Kuhn-Tucker instance.

Prints the ensemble mean distance to the KT point (0, -1) at a few checkpoints.
"""
import argparse

from stochsplit import operators as O
from stochsplit.diagnostics import summarize
from stochsplit.kt import KTProblem, KTStepSizes, run_kt
from stochsplit.sampling import BlockSampler, RelaxationSampler

LAWS = {
    "constant 1": RelaxationSampler.constant(1.0),
    "uniform [0.5, 1.9]": RelaxationSampler.uniform(0.5, 1.9),
    "two-point {0.5: .8, 2.5: .2}": RelaxationSampler.two_point([0.5, 2.5], [0.8, 0.2]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--iters", type=int, default=200)
    args = ap.parse_args()

    p = KTProblem((1,), (1,), [O.L1Norm()], [O.WeightedQuadratic([1.0], [1.0])], [[O.LinearMap([[1.0]])]])
    steps = KTStepSizes.constant(p, 0.1, 1.0, 1.0)
    samplers = BlockSampler("full", 1), BlockSampler("full", 1)
    checkpoints = [c for c in (10, 25, 50, 100, 200, 500, 1000) if c <= args.iters]
    print("law".ljust(32) + "".join(f"n={c}".rjust(12) for c in checkpoints))
    for name, law in LAWS.items():
        traces = []
        for seed in range(args.seeds):
            _, tr = run_kt(p, steps, samplers, law, [3.0], [2.0], n_iter=args.iters, seed=seed, rho=2.5,
                           residual_every=0, reference=([0.0], [-1.0]))
            traces.append(tr)
        mean = summarize(traces).dist_mean
        print(name.ljust(32) + "".join(f"{mean[c - 1]:12.3e}" for c in checkpoints))


if __name__ == "__main__":
    main()
