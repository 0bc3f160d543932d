"""Stochastic block-iterative projective splitting for monotone inclusions."""
from .engine import EngineConfig, GraphSample, StepRecord, Trace, run
from .kt import KTProblem, KTStepSizes, kt_iterate, kt_residual, run_kt
from .ppa import ErrorRule, GammaRule, PpaConfig, run_ppa, validate_regime
from .saddle import (
    MinProblem,
    SaddleProblem,
    StepSizes,
    build_min_problem,
    run_saddle,
    saddle_iterate,
    saddle_residual,
)
from .sampling import BlockSampler, RelaxationSampler
from .spaces import BlockVector, SpaceLayout

__version__ = "0.1.0"
