"""Problem instances shared by the unit and acceptance tests."""
from __future__ import annotations

import numpy as np

from stochsplit import operators as O
from stochsplit.kt import KTProblem, KTStepSizes, constructed_kt_point
from stochsplit.saddle import MinProblem, SaddleProblem, StepSizes, build_min_problem, constructed_zero
from stochsplit.sampling import BlockSampler


def one(v):
    return O.LinearMap([[float(v)]])


def full(ni, nk):
    return BlockSampler("full", ni), BlockSampler("full", nk)


def singleton(ni, nk):
    return BlockSampler("singleton", ni), BlockSampler("singleton", nk)


def scalar_kt():
    p = KTProblem((1,), (1,), [O.L1Norm()], [O.WeightedQuadratic([1.0], [1.0])], [[one(1.0)]])
    return p, KTStepSizes.constant(p, 0.1, 1.0, 1.0)


def two_block_kt():
    p = KTProblem((1, 1), (1, 1),
                  [O.L1Norm(), O.WeightedQuadratic([2.0], [1.0])],
                  [O.WeightedQuadratic([1.0], [1.0]), O.BoxIndicator([-0.5], [0.5])],
                  [[one(1.0), one(0.5)], [one(-1.0), one(1.0)]])
    return p, KTStepSizes.constant(p, 0.1, 1.0, 1.0)


def scalar_min_spec():
    return MinProblem(
        (1,), (1,),
        f=[O.L1Norm()], phi=[O.quadratic_gradient([1.0], [3.0])],
        g=[O.ZeroOperator(1)], psi=[O.quadratic_gradient([1.0], [-1.0])],
        h=[O.BoxIndicator([-0.5], [0.5])], L=[[one(1.0)]],
    )


def scalar_min():
    p = build_min_problem(scalar_min_spec())
    return p, StepSizes.constant(p, 0.5, 0.1, 1.0, 1.0, 1.0, 1.0)


def two_block_min_spec():
    return MinProblem(
        (1, 1), (1, 1),
        f=[O.L1Norm(1, 1.0), O.L1Norm(1, 0.5)],
        phi=[O.quadratic_gradient([1.0], [3.0]), O.quadratic_gradient([1.0], [-2.0])],
        g=[O.ZeroOperator(1), O.L1Norm(1, 1.0)],
        psi=[O.quadratic_gradient([1.0], [-1.0]), O.cocoercive_zero(1)],
        h=[O.BoxIndicator([-0.5], [0.5]), O.WeightedQuadratic([1.0])],
        L=[[one(1.0), one(1.0)], [one(1.0), one(-1.0)]],
    )


def two_block_min():
    p = build_min_problem(two_block_min_spec())
    return p, StepSizes.constant(p, 0.5, 0.1, 1.0, 1.0, 1.0, 1.0)


def rich_saddle(seed: int = 0):
    """Every operator slot populated, two primal and two dual blocks, with a constructed zero.

    alpha = 0.5, chi = 1; the steps below satisfy every interval constraint.
    """
    rng = np.random.default_rng(seed)
    base = SaddleProblem.build(
        (1, 1), (1, 2),
        A=[O.L1Norm(1, 0.7), O.BoxIndicator([-1.0], [2.0])],
        C=[O.identity(1), O.quadratic_gradient([0.5], [1.0])],
        Q=[O.linear_monotone([[0.5]]), O.lipschitz_zero(1)],
        R=O.rotation_operator(np.pi / 2),
        Bm=[O.L1Norm(1, 0.3), O.BoxIndicator([-1.0, -0.5], [1.0, 0.5])],
        Bc=[O.quadratic_gradient([2.0], [0.5]), O.identity(2)],
        Bl=[O.linear_monotone([[0.3]]), O.rotation_operator(0.4)],
        Dm=[O.WeightedQuadratic([1.0], [-1.0]), O.L1Norm(2, 0.5)],
        Dc=[O.identity(1), O.cocoercive_zero(2)],
        Dl=[O.lipschitz_zero(1), O.linear_monotone([[0.2, 0.0], [0.0, 0.1]])],
        L=[[O.LinearMap(rng.standard_normal((1, 1))), O.LinearMap(rng.standard_normal((1, 1)))],
           [O.LinearMap(rng.standard_normal((2, 1))), O.LinearMap(rng.standard_normal((2, 1)))]],
    )
    p, point = constructed_zero(base, rng, scale=1.5)
    steps = StepSizes(0.6, 0.2,
                      gamma=_rule([0.4, 0.45]), mu=_rule([0.8, 0.6]), nu=_rule([1.0, 1.2]), sig=_rule([1.0, 2.0]))
    return p, steps, point


def _rule(values):
    from stochsplit.saddle import StepRule
    return StepRule.cycle([values])


def rich_kt(seed: int = 0):
    rng = np.random.default_rng(seed)
    base = KTProblem(
        (2, 1), (1, 2),
        [O.L1Norm(2, 0.5), O.AffineMonotone([[1.0]], [0.2])],
        [O.BoxIndicator([-1.0], [1.0]), O.rotation(0.3)],
        [[O.LinearMap(rng.standard_normal((1, 2))), O.LinearMap(rng.standard_normal((1, 1)))],
         [O.LinearMap(rng.standard_normal((2, 2))), None]],
    )
    p, point = constructed_kt_point(base, rng, scale=1.5)
    return p, KTStepSizes.constant(p, 0.1, [0.7, 1.3], [1.0, 0.5]), point


def prox_catalog():
    """``(name, operator, vectorized value for the grid oracle, dim)`` for every subdifferential kind."""
    l1 = O.L1Norm(1, 1.0)
    l1w = O.L1Norm(2, 0.7)
    quad = O.WeightedQuadratic([2.0], [0.5])
    quad2 = O.WeightedQuadratic([0.5, 3.0], [1.0, -1.0])
    box = O.BoxIndicator([-1.0], [2.0])
    box2 = O.BoxIndicator([-1.0, 0.0], [1.0, 0.5])
    aff = O.AffineMonotone([[2.0, 0.5], [0.5, 1.0]], [0.3, -0.2])
    big = 1e30
    return [
        ("zero", O.ZeroOperator(1), lambda z: 0 * z, 1),
        ("l1", l1, lambda z: np.abs(z), 1),
        ("l1-2d", l1w, lambda a, b: 0.7 * (np.abs(a) + np.abs(b)), 2),
        ("quadratic", quad, lambda z: (z - 0.5) ** 2, 1),
        ("quadratic-2d", quad2, lambda a, b: 0.25 * (a - 1) ** 2 + 1.5 * (b + 1) ** 2, 2),
        ("box", box, lambda z: np.where((z >= -1) & (z <= 2), 0.0, big), 1),
        ("box-2d", box2, lambda a, b: np.where((a >= -1) & (a <= 1) & (b >= 0) & (b <= 0.5), 0.0, big), 2),
        ("affine-sym-2d", aff,
         lambda a, b: 0.5 * (2 * a * a + a * b + b * b) + 0.3 * a - 0.2 * b, 2),
        ("shifted-l1", O.Shifted(l1, [0.4]), lambda z: np.abs(z) - 0.4 * z, 1),
        ("translated-box", O.Translated(box, [0.5]), lambda z: np.where((z + 0.5 >= -1) & (z + 0.5 <= 2), 0.0, big), 1),
    ]


def monotone_catalog():
    """Every maximally monotone catalog kind, including the ones without a potential."""
    return [op for _, op, _, _ in prox_catalog()] + [
        O.rotation(0.7), O.rotation(np.pi / 2, [1.0, -1.0]), O.Inverse(O.L1Norm(1, 2.0)),
        O.Inverse(O.WeightedQuadratic([0.0, 2.0])), O.AffineMonotone([[1.0, 3.0], [-3.0, 0.5]]),
    ]
