"""Stochastic proximal point algorithm with inexact resolvents.

    x_{n+1} = x_n + lambda_n (J_{gamma_n A} x_n - e_n - x_n)

Parameter rules carry their asymptotics as metadata so that the three
admissible regimes can be decided from the declared laws rather than
from sampled paths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import EngineConfig, GraphSample, StepRecord, Trace, gap, relaxed_update, step_size
from .errors import NumericalError, ParameterError
from .operators import MaxMonotoneOp
from .sampling import RelaxationSampler, make_streams


@dataclass(frozen=True)
class GammaRule:
    """``gamma_n = scale`` (constant) or ``scale / (n+1)**power`` (power)."""

    kind: str = "constant"
    scale: float = 1.0
    power: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise ParameterError(f"unknown gamma rule {self.kind!r}")
        if not self.scale > 0:
            raise ParameterError("gamma scale must be > 0")
        if self.kind == "power" and self.power < 0:
            raise ParameterError("gamma power must be >= 0")

    def __call__(self, n: int) -> float:
        if self.kind == "constant":
            return self.scale
        return self.scale / (n + 1.0) ** self.power

    @property
    def is_one(self) -> bool:
        return self.kind == "constant" and self.scale == 1.0 or (
            self.kind == "power" and self.power == 0 and self.scale == 1.0)

    @property
    def bounded_below(self) -> bool:
        return self.kind == "constant" or self.power == 0

    @property
    def square_sum_diverges(self) -> bool:
        return self.kind == "constant" or self.power <= 0.5

    def describe(self) -> dict:
        d = {"kind": self.kind, "scale": self.scale}
        if self.kind == "power":
            d["power"] = self.power
        return d


@dataclass(frozen=True)
class ErrorRule:
    """Resolvent errors ``e_n``.

    ``zero``; ``geometric``: deterministic ``scale * ratio**n * direction``
    with a unit direction; ``gaussian``: i.i.d. coordinates with standard
    deviation ``scale * ratio**n``.
    """

    kind: str = "zero"
    scale: float = 0.0
    ratio: float = 0.5
    direction: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "geometric", "gaussian"):
            raise ParameterError(f"unknown error rule {self.kind!r}")
        if self.kind != "zero":
            if self.scale < 0:
                raise ParameterError("error scale must be >= 0")
            if not 0 <= self.ratio < 1:
                raise ParameterError("error ratio must lie in [0, 1)")

    def sample(self, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(dim)
        level = self.scale * self.ratio ** n
        if self.kind == "geometric":
            u = np.ones(dim) if self.direction is None else np.asarray(self.direction, dtype=float)
            return level * u / np.linalg.norm(u)
        return level * rng.standard_normal(dim)

    @property
    def root_mean_square_summable(self) -> bool:
        # every built-in decays geometrically
        return True

    @property
    def second_moment_bounded(self) -> bool:
        return True

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.scale == 0

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind != "zero":
            d.update(scale=self.scale, ratio=self.ratio)
            if self.direction is not None:
                d["direction"] = list(self.direction)
        return d


@dataclass(frozen=True)
class PpaConfig:
    op: MaxMonotoneOp
    gamma: GammaRule = GammaRule()
    errors: ErrorRule = ErrorRule()
    relax: RelaxationSampler = RelaxationSampler.constant(1.0)

    def __post_init__(self):
        lo, hi = self.relax.support
        if not (0 < lo and hi < 2):
            raise ParameterError(f"proximal point relaxations must lie in (0, 2), support is [{lo}, {hi}]")


def ppa_step(op: MaxMonotoneOp, x, gamma: float, e, lam: float) -> np.ndarray:
    if not gamma > 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    if not 0 < lam < 2:
        raise ParameterError(f"relaxation must lie in (0, 2), got {lam}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return x + lam * (op.resolvent(gamma, x) - np.asarray(e, dtype=float) - x)


def validate_regime(cfg: PpaConfig) -> str:
    """First of ``"i"``, ``"ii"``, ``"iii"`` whose hypotheses the declared rules meet, else ``"none"``."""
    relax, gamma, errors = cfg.relax, cfg.gamma, cfg.errors
    moment = relax.moment()
    # i.i.d. relaxations: sum of moments diverges iff the moment is positive
    if (moment > 0 and gamma.is_one and errors.second_moment_bounded
            and errors.root_mean_square_summable):
        return "i"
    if moment > 0 and gamma.bounded_below and errors.root_mean_square_summable:
        return "ii"
    if (gamma.square_sum_diverges and errors.root_mean_square_summable
            and relax.kind == "constant" and relax.value == 1.0):
        return "iii"
    return "none"


def ppa_supplier(cfg: PpaConfig):
    """Engine supplier realizing the proximal point step.

    ``w = J x - e``, ``w* = (x - w)/gamma``, ``q = w``, ``c* = f* = 0``,
    ``e* = -e/gamma``; the engine then takes ``theta = gamma``.
    """
    op, rule, errs = cfg.op, cfg.gamma, cfg.errors

    def supplier(n, x, rng):
        g = rule(n)
        e = errs.sample(n, x.size, rng)
        w = op.resolvent(g, x) - e
        zero = np.zeros_like(x)
        return GraphSample(w=w, wstar=(x - w) / g, q=w, cstar=zero, e=e, estar=-e / g, fstar=zero)

    return supplier


def run_ppa(cfg: PpaConfig, x0, n_iter: int, seed: int = 0, audit: bool = False,
            reference=None, keep_iterates: bool = True):
    """Iterate the proximal point recursion; return ``(x_final, Trace)``.

    With ``audit`` the engine step built from :func:`ppa_supplier` is
    evaluated alongside and the largest discrepancy between the two
    paths is stored in ``trace.meta["engine_gap"]``.
    """
    streams = make_streams(seed)
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    op = cfg.op
    ecfg = EngineConfig(alpha=np.inf, zero_tol=0.0)
    ref = None if reference is None else np.asarray(reference, dtype=float)
    iterates = [x.copy()] if keep_iterates else None
    records = []
    worst = 0.0
    for n in range(n_iter):
        g = cfg.gamma(n)
        e = cfg.errors.sample(n, x.size, streams.noise)
        lam = cfg.relax.sample(streams.relax)
        jx = op.resolvent(g, x)
        step = jx - e - x
        x_next = x + lam * step
        if not np.all(np.isfinite(x_next)):
            raise NumericalError("proximal point iterate diverged", iteration=n)
        t = -step / g
        tn = float(np.linalg.norm(t))
        delta = g * tn * tn
        theta = g if tn > 0 else 0.0
        if audit:
            w = jx - e
            zero = np.zeros_like(x)
            s = GraphSample(w=w, wstar=(x - w) / g, q=w, cstar=zero, e=e, estar=-e / g, fstar=zero)
            d = gap(x, s, ecfg.alpha)
            th = step_size(d, s.tstar, ecfg.threshold(x))
            x_eng = relaxed_update(x, th, s.tstar, lam)
            scale = max(1.0, float(np.linalg.norm(x_next)))
            worst = max(worst, float(np.linalg.norm(x_eng - x_next)) / scale)
        rec = StepRecord(n, delta, theta, lam, theta * tn, tn,
                         residual=float(np.linalg.norm(x - op.resolvent(1.0, x))))
        if ref is not None:
            rec = rec.with_(dist_to_ref=float(np.linalg.norm(x_next - ref)))
        records.append(rec)
        x = x_next
        if keep_iterates:
            iterates.append(x.copy())
    meta = {"algorithm": "ppa", "seed": int(seed), "regime": validate_regime(cfg)}
    if audit:
        meta["engine_gap"] = worst
    return x, Trace(records, iterates, meta)
