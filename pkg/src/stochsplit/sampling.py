"""Random block activation, random relaxation, and per-trajectory RNG streams.

Each trajectory owns three disjoint Philox streams derived from its seed:
``block`` (index sets), ``relax`` (relaxation parameters) and ``noise``
(injected errors).  Keeping them separate makes the relaxation drawn at
iteration n independent of everything that produced the current iterate
and the direction, whatever the other streams do.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnsupportedError, UsageError

STREAM_NAMES = ("block", "relax", "noise")


@dataclass
class Streams:
    block: np.random.Generator
    relax: np.random.Generator
    noise: np.random.Generator


def make_streams(seed: int) -> Streams:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    gens = {
        name: np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))
        for k, name in enumerate(STREAM_NAMES)
    }
    return Streams(**gens)


# -- block selection ----------------------------------------------------------

BLOCK_KINDS = ("full", "singleton", "bernoulli")


@dataclass(frozen=True)
class BlockSampler:
    """Random index sets over ``range(count)``.

    kinds
        ``full``       every index at every iteration
        ``singleton``  one index drawn uniformly, i.i.d. over iterations
        ``bernoulli``  index j included with probability ``probs[j]``,
                       independently; empty draws are rejected and redrawn

    Iteration 0 always returns the full set.  ``window`` is the cover
    window used by :func:`cover_probability`.
    """

    kind: str
    count: int
    probs: tuple[float, ...] | None = None
    window: int = 1

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ParameterError(f"unknown block sampler kind {self.kind!r}; expected one of {BLOCK_KINDS}")
        if self.count < 1:
            raise ParameterError("index set must be nonempty")
        if self.window < 1:
            raise ParameterError("cover window must be a positive integer")
        if self.kind == "bernoulli":
            if self.probs is None or len(self.probs) != self.count:
                raise ParameterError("bernoulli sampler needs one probability per index")
            p = np.asarray(self.probs, dtype=float)
            if np.any(p <= 0) or np.any(p > 1):
                raise ParameterError("bernoulli inclusion probabilities must lie in (0, 1]")
            object.__setattr__(self, "probs", tuple(float(v) for v in p))

    def sample(self, n: int, rng: np.random.Generator) -> tuple[int, ...]:
        if n == 0 or self.kind == "full":
            return tuple(range(self.count))
        if self.kind == "singleton":
            return (int(rng.integers(self.count)),)
        p = np.asarray(self.probs)
        while True:
            hit = rng.random(self.count) < p
            if hit.any():
                return tuple(int(j) for j in np.flatnonzero(hit))

    def inclusion_probability(self, i: int) -> float:
        """``P(i in I_n)`` for n >= 1."""
        if self.kind == "full":
            return 1.0
        if self.kind == "singleton":
            return 1.0 / self.count
        p = np.asarray(self.probs)
        empty = float(np.prod(1.0 - p))
        return p[i] / (1.0 - empty)

    def describe(self) -> dict:
        d = {"kind": self.kind, "count": self.count, "window": self.window}
        if self.probs is not None:
            d["probs"] = list(self.probs)
        return d


def sample_blocks(sampler: BlockSampler, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    return sampler.sample(n, rng)


def cover_probability(sampler: BlockSampler, i: int) -> float:
    """Exact ``P(i in I_n u ... u I_{n+N-1})`` for n >= 1."""
    if sampler.kind not in BLOCK_KINDS:
        raise UnsupportedError(f"no closed form for {sampler.kind!r}")
    if not 0 <= i < sampler.count:
        raise ParameterError(f"index {i} outside range({sampler.count})")
    p = sampler.inclusion_probability(i)
    return 1.0 - (1.0 - p) ** sampler.window


@dataclass(frozen=True)
class LastActivation:
    """Per-index iteration of last activation, ``max{j <= n : i in I_j}``."""

    counters: tuple[int, ...]
    last_n: int = -1

    @classmethod
    def start(cls, count: int) -> "LastActivation":
        return cls(tuple([0] * count), -1)

    def update(self, n: int, active) -> "LastActivation":
        if n <= self.last_n:
            raise UsageError(f"activation updates must have increasing n (got {n} after {self.last_n})")
        c = list(self.counters)
        for i in active:
            c[i] = n
        return LastActivation(tuple(c), n)


def update_last_activation(state: LastActivation, n: int, active) -> LastActivation:
    return state.update(n, active)


# -- relaxation ---------------------------------------------------------------

RELAX_KINDS = ("constant", "uniform", "two-point")


@dataclass(frozen=True)
class RelaxationSampler:
    """Law of the relaxation parameters, i.i.d. over iterations.

    kinds
        ``constant``   ``value``
        ``uniform``    uniform on ``[low, high]``
        ``two-point``  ``atoms[j]`` with probability ``probs[j]``
    """

    kind: str
    value: float | None = None
    low: float | None = None
    high: float | None = None
    atoms: tuple[float, ...] | None = None
    probs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in RELAX_KINDS:
            raise ParameterError(f"unknown relaxation kind {self.kind!r}; expected one of {RELAX_KINDS}")
        if self.kind == "constant" and self.value is None:
            raise ParameterError("constant relaxation needs a value")
        if self.kind == "uniform":
            if self.low is None or self.high is None or self.low > self.high:
                raise ParameterError("uniform relaxation needs low <= high")
        if self.kind == "two-point":
            if self.atoms is None or self.probs is None or len(self.atoms) != 2 or len(self.probs) != 2:
                raise ParameterError("two-point relaxation needs two atoms and two probabilities")
            if min(self.probs) < 0 or abs(sum(self.probs) - 1.0) > 1e-12:
                raise ParameterError("two-point probabilities must be nonnegative and sum to 1")
            object.__setattr__(self, "atoms", tuple(float(a) for a in self.atoms))
            object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))

    @classmethod
    def constant(cls, value: float) -> "RelaxationSampler":
        return cls("constant", value=float(value))

    @classmethod
    def uniform(cls, low: float, high: float) -> "RelaxationSampler":
        return cls("uniform", low=float(low), high=float(high))

    @classmethod
    def two_point(cls, atoms, probs) -> "RelaxationSampler":
        return cls("two-point", atoms=tuple(atoms), probs=tuple(probs))

    def sample(self, rng: np.random.Generator) -> float:
        # one uniform draw per call keeps the stream position independent of the kind
        u = rng.random()
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "uniform":
            return float(self.low + (self.high - self.low) * u)
        return self.atoms[0] if u < self.probs[0] else self.atoms[1]

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "constant":
            return (self.value, self.value)
        if self.kind == "uniform":
            return (self.low, self.high)
        live = [a for a, p in zip(self.atoms, self.probs) if p > 0]
        return (min(live), max(live))

    def mean(self) -> float:
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "uniform":
            return 0.5 * (self.low + self.high)
        return float(np.dot(self.atoms, self.probs))

    def second_moment(self) -> float:
        if self.kind == "constant":
            return float(self.value) ** 2
        if self.kind == "uniform":
            a, b = self.low, self.high
            return (a * a + a * b + b * b) / 3.0
        return float(np.dot(np.square(self.atoms), self.probs))

    def moment(self) -> float:
        """``E[lambda (2 - lambda)]``."""
        return 2.0 * self.mean() - self.second_moment()

    def prob_above_two(self) -> float:
        if self.kind == "constant":
            return 1.0 if self.value > 2 else 0.0
        if self.kind == "uniform":
            if self.high <= 2:
                return 0.0
            if self.low >= 2:
                return 1.0 if self.high > self.low else float(self.low > 2)
            return (self.high - 2.0) / (self.high - self.low)
        return float(sum(p for a, p in zip(self.atoms, self.probs) if a > 2))

    @property
    def is_deterministic(self) -> bool:
        lo, hi = self.support
        return lo == hi

    def describe(self) -> dict:
        d = {"kind": self.kind}
        for k in ("value", "low", "high"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        if self.atoms is not None:
            d["atoms"] = list(self.atoms)
            d["probs"] = list(self.probs)
        return d


def relaxation_moment(sampler: RelaxationSampler) -> float:
    return sampler.moment()


def exceed_two_probability(sampler: RelaxationSampler) -> float:
    return sampler.prob_above_two()


def relaxation_violations(sampler: RelaxationSampler, rho: float = 2.0, lower: float = 0.0,
                          strict_moment: bool = False) -> list[str]:
    """Reasons why ``sampler`` is not an admissible relaxation law.

    The support must lie in ``(lower, rho]`` (or ``[lower, rho]`` when
    ``lower > 0``) and ``E[lambda(2-lambda)]`` must be nonnegative, or
    strictly positive when ``strict_moment`` is set.
    """
    out = []
    if rho < 2:
        out.append(f"relaxation bound rho={rho} must be >= 2")
    lo, hi = sampler.support
    if lower > 0:
        if lo < lower:
            out.append(f"relaxation support starts at {lo} < epsilon={lower}")
    elif lo <= 0:
        out.append(f"relaxation support must be positive, found {lo}")
    if hi > rho:
        out.append(f"relaxation support reaches {hi} > rho={rho}")
    m = sampler.moment()
    if strict_moment and not m > 0:
        out.append(f"E[lambda(2-lambda)] = {m:.6g} must be > 0")
    elif not strict_moment and m < 0:
        out.append(f"E[lambda(2-lambda)] = {m:.6g} must be >= 0")
    return out


def is_super_relaxation(sampler: RelaxationSampler) -> bool:
    return sampler.moment() > 0 and sampler.prob_above_two() > 0
