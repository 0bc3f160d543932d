"""Half-space projection template with stochastic errors and random relaxation.

Given, at every iteration, a sample ``(w, w*)`` close to the graph of a
maximally monotone W, a point ``q`` and an approximation ``c*`` of ``C q``
for an ``alpha``-cocoercive C, the engine forms ``t* = w* + c*`` and the
gap

    Delta = <x - w, t*> - |w - q|^2 / (4 alpha)

and moves along ``-t*`` by ``lambda * theta`` with
``theta = max(Delta, 0) / |t*|^2``.  When the samples are exact the step
is a relaxed projection onto a half-space containing ``zer(W + C)``.

Suppliers are callables ``supplier(n, x, rng) -> GraphSample``; the
engine never evaluates C itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .errors import LayoutError, NumericalError, ParameterError
from .operators import CocoerciveOp, MaxMonotoneOp
from .sampling import RelaxationSampler, Streams, make_streams
from .spaces import BlockVector


def _arr(v) -> np.ndarray:
    if isinstance(v, BlockVector):
        return v.data
    return np.atleast_1d(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class GraphSample:
    """One iteration's input: ``(w+e, w*+e*)`` in gra W and ``c* + f* = C q``."""

    w: np.ndarray
    wstar: np.ndarray
    q: np.ndarray
    cstar: np.ndarray
    e: np.ndarray | None = None
    estar: np.ndarray | None = None
    fstar: np.ndarray | None = None

    def __post_init__(self):
        n = None
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            v = _arr(v)
            object.__setattr__(self, f.name, v)
            if n is None:
                n = v.shape
            elif v.shape != n:
                raise LayoutError(f"GraphSample field {f.name} has shape {v.shape}, expected {n}")
        for name in ("e", "estar", "fstar"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, np.zeros(n))

    @property
    def tstar(self) -> np.ndarray:
        return self.wstar + self.cstar


@dataclass(frozen=True)
class EngineConfig:
    alpha: float
    rho: float = 2.0
    zero_tol: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if not self.rho >= 2:
            raise ParameterError(f"rho must be >= 2, got {self.rho}")
        if self.zero_tol is not None and self.zero_tol < 0:
            raise ParameterError("zero_tol must be >= 0")

    def threshold(self, x) -> float:
        """Squared-norm level below which ``t*`` counts as zero."""
        if self.zero_tol is not None:
            return self.zero_tol
        xa = _arr(x)
        return 1e-24 * max(1.0, float(xa @ xa))


@dataclass(frozen=True)
class StepRecord:
    n: int
    delta: float
    theta: float
    lam: float
    dnorm: float
    tstar_norm: float
    dist_to_ref: float = float("nan")
    residual: float = float("nan")
    active_blocks: str = ""

    def with_(self, **kw) -> "StepRecord":
        return replace(self, **kw)


def gap(x, s: GraphSample, alpha: float) -> float:
    x = _arr(x)
    if x.shape != s.w.shape:
        raise LayoutError(f"iterate shape {x.shape} differs from sample shape {s.w.shape}")
    d = s.w - s.q
    pen = 0.0 if np.isinf(alpha) else float(d @ d) / (4.0 * alpha)
    return float((x - s.w) @ s.tstar) - pen


def step_size(delta: float, tstar, zero_tol: float = 0.0) -> float:
    t = _arr(tstar)
    t2 = float(t @ t)
    if delta > 0 and t2 > zero_tol:
        return delta / t2
    return 0.0


def relaxed_update(x, theta: float, tstar, lam: float, rho: float = np.inf):
    if not (np.isfinite(lam) and 0 < lam <= rho):
        raise ParameterError(f"relaxation {lam} outside (0, {rho}]")
    out = _arr(x) - lam * theta * _arr(tstar)
    if isinstance(x, BlockVector):
        return BlockVector(x.layout, out)
    return out


def realized_error_term(s: GraphSample, theta: float, z, Cz) -> float:
    """Per-path integrand of the error functional, floored at zero."""
    z, Cz = _arr(z), _arr(Cz)
    val = (theta * float((s.w - z) @ (s.estar + s.fstar))
           + float(s.e @ (s.wstar + Cz))
           + float(s.e @ s.estar))
    return max(0.0, val)


Supplier = Callable[[int, np.ndarray, np.random.Generator], GraphSample]


def run(x0, supplier: Supplier, relax: RelaxationSampler, cfg: EngineConfig, n_iter: int,
        seed: int | Streams = 0, on_step: Callable | None = None):
    """Run ``n_iter`` iterations; return ``(x_final, records)``.

    ``on_step(n, x_next, record, sample)`` is called after every update.
    The supplier draws from the ``noise`` stream, the relaxation from
    ``relax``.
    """
    streams = seed if isinstance(seed, Streams) else make_streams(seed)
    layout = x0.layout if isinstance(x0, BlockVector) else None
    x = _arr(x0).copy()
    records = []
    for n in range(n_iter):
        s = supplier(n, x, streams.noise)
        t = s.tstar
        delta = gap(x, s, cfg.alpha)
        t2 = float(t @ t)
        if not (np.isfinite(delta) and np.isfinite(t2)):
            raise NumericalError("non-finite gap or direction", iteration=n)
        theta = step_size(delta, t, cfg.threshold(x))
        lam = relax.sample(streams.relax)
        x = relaxed_update(x, theta, t, lam, cfg.rho)
        rec = StepRecord(n, delta, theta, lam, theta * np.sqrt(t2), np.sqrt(t2))
        records.append(rec)
        if on_step is not None:
            on_step(n, x, rec, s)
    if layout is not None:
        return BlockVector(layout, x), records
    return x, records


def forward_backward_supplier(W: MaxMonotoneOp, C: CocoerciveOp, gamma: float) -> Supplier:
    """Exact supplier ``q = x``, ``w = J_{gamma W}(x - gamma C x)``.

    With ``gamma < 4 alpha`` the gap is positive away from solutions.
    """
    def supplier(n, x, rng):
        cx = C(x)
        u = x - gamma * cx
        w = W.resolvent(gamma, u)
        return GraphSample(w=w, wstar=(u - w) / gamma, q=x, cstar=cx)

    return supplier


@dataclass
class Trace:
    """Per-iteration records of one seeded trajectory.

    ``iterates[n]`` is the state before iteration n; the list has
    ``len(records) + 1`` entries when iterates are kept.
    """

    records: list[StepRecord]
    iterates: list[np.ndarray] | None = None
    meta: dict = field(default_factory=dict)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def __len__(self):
        return len(self.records)
