"""Iterations needed by full, singleton and Bernoulli block activation on the two-block minimization instance."""
import argparse

import numpy as np

from stochsplit import operators as O
from stochsplit.saddle import MinProblem, StepSizes, build_min_problem, run_saddle
from stochsplit.sampling import BlockSampler, RelaxationSampler


def instance():
    one = lambda v: O.LinearMap([[v]])  # noqa: E731
    spec = MinProblem(
        (1, 1), (1, 1),
        f=[O.L1Norm(1, 1.0), O.L1Norm(1, 0.5)],
        phi=[O.quadratic_gradient([1.0], [3.0]), O.quadratic_gradient([1.0], [-2.0])],
        g=[O.ZeroOperator(1), O.L1Norm(1, 1.0)],
        psi=[O.quadratic_gradient([1.0], [-1.0]), O.cocoercive_zero(1)],
        h=[O.BoxIndicator([-0.5], [0.5]), O.WeightedQuadratic([1.0])],
        L=[[one(1.0), one(1.0)], [one(1.0), one(-1.0)]],
    )
    p = build_min_problem(spec)
    return p, StepSizes.constant(p, 0.5, 0.1, 1.0, 1.0, 1.0, 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--max-iter", type=int, default=20000)
    args = ap.parse_args()

    p, s = instance()
    # long full-activation run as the reference minimizer
    ref, _ = run_saddle(p, s, (BlockSampler("full", 2), BlockSampler("full", 2)), RelaxationSampler.constant(1.0),
                        n_iter=20000)
    xref = np.concatenate(ref.x)
    print(f"reference minimizer {xref}")
    kinds = {
        "full": lambda: BlockSampler("full", 2),
        "singleton": lambda: BlockSampler("singleton", 2),
        "bernoulli 0.5": lambda: BlockSampler("bernoulli", 2, (0.5, 0.5)),
    }
    for name, make in kinds.items():
        counts = []
        for seed in range(args.seeds):
            _, tr = run_saddle(p, s, (make(), make()), RelaxationSampler.constant(1.0), n_iter=args.max_iter,
                               seed=seed,
                               stop=lambda st: np.linalg.norm(np.concatenate(st.x) - xref) <= args.tol)
            counts.append(len(tr))
        print(f"{name:>14}: median {int(np.median(counts))} iterations, max {max(counts)}")


if __name__ == "__main__":
    main()
