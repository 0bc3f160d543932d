"""Randomized block-iterative Kuhn-Tucker projective splitting.

Find ``x`` and ``v*`` with

    0 in A_i x_i + sum_k L_ki^* v*_k        for every i
    0 in B_k^{-1} v*_k - sum_i L_ki x_i     for every k

There is no cocoercive part, so the gap carries no quadratic penalty.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .engine import GraphSample, StepRecord, Trace
from .errors import InvariantError, NumericalError, ParameterError, UsageError
from .operators import LinearMap, MaxMonotoneOp, Shifted, Translated
from .saddle import StepRule, ValidationReport, _fmt_active
from .sampling import LastActivation, RelaxationSampler, make_streams, relaxation_violations
from .spaces import SpaceLayout


def _v(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass
class KTProblem:
    h_dims: tuple[int, ...]
    g_dims: tuple[int, ...]
    A: list[MaxMonotoneOp]
    B: list[MaxMonotoneOp]
    L: list[list[LinearMap | None]]

    def __post_init__(self):
        self.h_dims, self.g_dims = tuple(self.h_dims), tuple(self.g_dims)
        if len(self.A) != self.n_i or len(self.B) != self.n_k:
            raise ParameterError("operator lists must match the block layouts")
        if len(self.L) != self.n_k or any(len(row) != self.n_i for row in self.L):
            raise ParameterError(f"L must be a {self.n_k} x {self.n_i} table")
        for i, op in enumerate(self.A):
            if op.dim != self.h_dims[i]:
                raise ParameterError(f"A[{i}] acts on dimension {op.dim}, expected {self.h_dims[i]}")
        for k, op in enumerate(self.B):
            if op.dim != self.g_dims[k]:
                raise ParameterError(f"B[{k}] acts on dimension {op.dim}, expected {self.g_dims[k]}")
        for k in range(self.n_k):
            for i in range(self.n_i):
                m = self.L[k][i]
                if m is not None and m.shape != (self.g_dims[k], self.h_dims[i]):
                    raise ParameterError(f"L[{k}][{i}] has shape {m.shape}")

    @property
    def n_i(self) -> int:
        return len(self.h_dims)

    @property
    def n_k(self) -> int:
        return len(self.g_dims)

    @property
    def layout(self) -> SpaceLayout:
        return SpaceLayout(self.h_dims + self.g_dims)

    def Lx(self, k, xs):
        out = np.zeros(self.g_dims[k])
        for i, m in enumerate(self.L[k]):
            if m is not None:
                out = out + m(xs[i])
        return out

    def Lt(self, i, vs):
        out = np.zeros(self.h_dims[i])
        for k in range(self.n_k):
            m = self.L[k][i]
            if m is not None:
                out = out + m.adjoint(vs[k])
        return out

    def pack(self, x, v) -> np.ndarray:
        return np.concatenate([*map(_v, x), *map(_v, v)])

    def unpack(self, flat):
        blocks = self.layout.split(flat)
        return blocks[:self.n_i], blocks[self.n_i:]

    def describe(self) -> dict:
        return {
            "h_dims": list(self.h_dims), "g_dims": list(self.g_dims),
            "A": [op.describe() for op in self.A], "B": [op.describe() for op in self.B],
            "L": [[None if m is None else m.matrix.tolist() for m in row] for row in self.L],
        }


@dataclass(frozen=True)
class KTStepSizes:
    epsilon: float
    gamma: StepRule
    mu: StepRule

    @classmethod
    def constant(cls, p: KTProblem, epsilon, gamma, mu) -> "KTStepSizes":
        return cls(epsilon, StepRule.constant(gamma, p.n_i), StepRule.constant(mu, p.n_k))


def validate_kt_steps(p: KTProblem, s: KTStepSizes) -> ValidationReport:
    rep = ValidationReport()
    if not 0 < s.epsilon < 1:
        rep.violations.append(f"epsilon={s.epsilon} must lie in (0, 1)")
        return rep
    for name, rule, count in (("gamma", s.gamma, p.n_i), ("mu", s.mu, p.n_k)):
        if rule.count != count:
            rep.violations.append(f"{name} rule has {rule.count} entries, expected {count}")
            continue
        for j in range(count):
            lo, hi = rule.bounds(j)
            if lo < s.epsilon or hi > 1.0 / s.epsilon:
                rep.violations.append(f"{name}[{j}] range [{lo:.6g}, {hi:.6g}] outside "
                                      f"[{s.epsilon:.6g}, {1.0 / s.epsilon:.6g}]")
    return rep


@dataclass
class KTState:
    n: int
    x: list
    vstar: list
    a: list | None = None
    astar: list | None = None
    b: list | None = None
    bstar: list | None = None
    act_i: LastActivation | None = None
    act_k: LastActivation | None = None

    @classmethod
    def start(cls, p: KTProblem, x=None, vstar=None) -> "KTState":
        xs = [np.zeros(d) for d in p.h_dims] if x is None else [_v(t).copy() for t in x]
        vs = [np.zeros(d) for d in p.g_dims] if vstar is None else [_v(t).copy() for t in vstar]
        return cls(0, xs, vs)

    @property
    def point(self):
        return self.x, self.vstar


def _finite(arr, n, block):
    if not np.all(np.isfinite(arr)):
        raise NumericalError("non-finite intermediate", iteration=n, block=block)
    return arr


def kt_iterate(p: KTProblem, s: KTStepSizes, st: KTState, I_n, K_n, lam: float, rho: float = np.inf):
    n = st.n
    if not (np.isfinite(lam) and 0 < lam <= rho):
        raise ParameterError(f"relaxation {lam} outside (0, {rho}]")
    I_n, K_n = sorted(set(I_n)), sorted(set(K_n))
    if st.a is None:
        if len(I_n) != p.n_i or len(K_n) != p.n_k:
            raise UsageError("the first iteration must activate every block")
        a, astar = [None] * p.n_i, [None] * p.n_i
        b, bstar = [None] * p.n_k, [None] * p.n_k
        act_i, act_k = LastActivation.start(p.n_i), LastActivation.start(p.n_k)
    else:
        a, astar, b, bstar = list(st.a), list(st.astar), list(st.b), list(st.bstar)
        act_i, act_k = st.act_i, st.act_k
    x, v = st.x, st.vstar
    for i in I_n:
        g = s.gamma(i, n)
        l = p.Lt(i, v)
        ai = p.A[i].resolvent(g, x[i] - g * l)
        a[i] = _finite(ai, n, f"a[{i}]")
        astar[i] = _finite((x[i] - ai) / g - l, n, f"a*[{i}]")
    for k in K_n:
        mu = s.mu(k, n)
        l = p.Lx(k, x)
        bk = p.B[k].resolvent(mu, l + mu * v[k])
        b[k] = _finite(bk, n, f"b[{k}]")
        bstar[k] = _finite(v[k] + (l - bk) / mu, n, f"b*[{k}]")
    tstar = [astar[i] + p.Lt(i, bstar) for i in range(p.n_i)]
    t = [b[k] - p.Lx(k, a) for k in range(p.n_k)]
    # same value as sum <x|t*> - <a|a*> + <t|v*> - <b|b*>, without the cancellation near a fixed point
    direction = np.concatenate(tstar + t)
    offset = np.concatenate([x[i] - a[i] for i in range(p.n_i)] + [v[k] - bstar[k] for k in range(p.n_k)])
    delta = float(offset @ direction)
    denom = float(direction @ direction)
    if not (np.isfinite(delta) and np.isfinite(denom)):
        raise NumericalError("non-finite gap", iteration=n)
    theta = delta / denom if (delta > 0 and denom > 0) else 0.0
    step = lam * theta
    new = KTState(
        n + 1,
        [x[i] - step * tstar[i] for i in range(p.n_i)],
        [v[k] - step * t[k] for k in range(p.n_k)],
        a, astar, b, bstar, act_i.update(n, I_n), act_k.update(n, K_n),
    )
    tn = float(np.sqrt(denom))
    return new, StepRecord(n, float(delta), float(theta), float(lam), theta * tn, tn)


def kt_residual(p: KTProblem, x, vstar) -> float:
    """Rowwise resolvent fixed-point residual; zero exactly at Kuhn-Tucker points.

    The dual row uses ``J_{B^{-1}}(u) = u - J_B(u)`` at ``u = v* + Lx``,
    so its residual is ``|J_B(v* + Lx) - Lx|``.
    """
    x, v = [_v(t) for t in x], [_v(t) for t in vstar]
    parts = [x[i] - p.A[i].resolvent(1.0, x[i] - p.Lt(i, v)) for i in range(p.n_i)]
    for k in range(p.n_k):
        lx = p.Lx(k, x)
        parts.append(p.B[k].resolvent(1.0, v[k] + lx) - lx)
    return float(np.linalg.norm(np.concatenate(parts)))


def constructed_kt_point(p: KTProblem, rng: np.random.Generator | None = None, scale: float = 1.0,
                         u_a=None, u_b=None, vstar=None):
    """Shift the operators so that a generated ``(x, v*)`` is a Kuhn-Tucker point.

    ``x_i = J_{A_i}(u_a[i])`` so that ``u_a[i] - x_i`` lies in ``A_i x_i``;
    ``A_i`` is then replaced by ``A_i - (u_a[i] - x_i + L_i^* v*)``.
    For the dual side ``y_k = J_{B_k}(u_b[k])``, ``B_k`` is shifted so that
    it contains ``v*_k`` at ``y_k`` and translated so that ``y_k`` sits at
    ``sum_i L_ki x_i``.  Returns ``(problem, (x, v*))``.
    """
    rng = np.random.default_rng(0) if rng is None else rng

    def draw(given, dims):
        if given is not None:
            return [_v(t) for t in given]
        return [scale * rng.standard_normal(d) for d in dims]

    u_a, u_b, vs = draw(u_a, p.h_dims), draw(u_b, p.g_dims), draw(vstar, p.g_dims)
    xs = [p.A[i].resolvent(1.0, u_a[i]) for i in range(p.n_i)]
    A = [Shifted(p.A[i], u_a[i] - xs[i] + p.Lt(i, vs)) for i in range(p.n_i)]
    B = []
    for k in range(p.n_k):
        y = p.B[k].resolvent(1.0, u_b[k])
        B.append(Translated(Shifted(p.B[k], u_b[k] - y - vs[k]), y - p.Lx(k, xs)))
    return replace(p, A=A, B=B), (xs, vs)


def kt_supplier(p: KTProblem, s: KTStepSizes):
    """Engine supplier with full activation.

    ``w = (a, b*)`` with ``w*`` read off the Kuhn-Tucker operator at that
    point: ``(A a + L^* b*, B^{-1} b* - L a)``, realized with the resolvent
    elements; ``q = w`` and ``c* = 0``.
    """
    def supplier(n, flat, rng):
        x, v = p.unpack(flat)
        a, a_el, bs, b = [], [], [], []
        # same floating-point expressions as kt_iterate, so the two paths agree to rounding
        for i in range(p.n_i):
            g = s.gamma(i, n)
            l = p.Lt(i, v)
            ai = p.A[i].resolvent(g, x[i] - g * l)
            a.append(ai)
            a_el.append((x[i] - ai) / g - l)
        for k in range(p.n_k):
            mu = s.mu(k, n)
            l = p.Lx(k, x)
            bk = p.B[k].resolvent(mu, l + mu * v[k])
            b.append(bk)
            bs.append(v[k] + (l - bk) / mu)
        ws = [a_el[i] + p.Lt(i, bs) for i in range(p.n_i)]
        ws += [b[k] - p.Lx(k, a) for k in range(p.n_k)]
        w = p.pack(a, bs)
        return GraphSample(w=w, wstar=np.concatenate(ws), q=w, cstar=np.zeros_like(w))

    return supplier


def run_kt(p: KTProblem, s: KTStepSizes, samplers, relax: RelaxationSampler, x0=None, v0=None,
           n_iter: int = 100, seed: int = 0, rho: float = 2.0, residual_every: int = 1,
           reference=None, audit: bool = False, keep_iterates: bool = False,
           stop=None):
    """Run the randomized Kuhn-Tucker splitting; return ``(final_state, Trace)``."""
    rep = validate_kt_steps(p, s)
    if not rep.ok:
        raise ParameterError("step sizes rejected: " + "; ".join(rep.violations))
    bad = relaxation_violations(relax, rho=rho, lower=s.epsilon, strict_moment=True)
    if bad:
        raise ParameterError("relaxation rejected: " + "; ".join(bad))
    si, sk = samplers
    if si.count != p.n_i or sk.count != p.n_k:
        raise ParameterError("block samplers must match the numbers of primal and dual blocks")
    streams = make_streams(seed)
    st = KTState.start(p, x0, v0)
    ref = None if reference is None else p.pack(*reference)
    records = []
    iterates = [p.pack(*st.point)] if keep_iterates else None
    snaps_i, snaps_k = {}, {}
    for n in range(n_iter):
        I_n = si.sample(n, streams.block)
        K_n = sk.sample(n, streams.block)
        lam = relax.sample(streams.relax)
        st, rec = kt_iterate(p, s, st, I_n, K_n, lam, rho)
        if audit:
            _audit(p, st, n, I_n, K_n, snaps_i, snaps_k)
        extra = {"active_blocks": _fmt_active(I_n, K_n)}
        if residual_every and (n % residual_every == 0 or n == n_iter - 1):
            extra["residual"] = kt_residual(p, *st.point)
        if ref is not None:
            extra["dist_to_ref"] = float(np.linalg.norm(p.pack(*st.point) - ref))
        records.append(rec.with_(**extra))
        if keep_iterates:
            iterates.append(p.pack(*st.point))
        if stop is not None and stop(st):
            break
    return st, Trace(records, iterates, {"algorithm": "kt", "seed": int(seed)})


def _audit(p, st, n, I_n, K_n, snaps_i, snaps_k):
    for i in range(p.n_i):
        if i in I_n:
            snaps_i[i] = (n, st.a[i].copy(), st.astar[i].copy())
        m, a, astar = snaps_i[i]
        if st.act_i.counters[i] != m or not (np.array_equal(a, st.a[i]) and np.array_equal(astar, st.astar[i])):
            raise InvariantError(f"primal cache {i} differs from its last activation at iteration {n}")
    for k in range(p.n_k):
        if k in K_n:
            snaps_k[k] = (n, st.b[k].copy(), st.bstar[k].copy())
        m, b, bstar = snaps_k[k]
        if st.act_k.counters[k] != m or not (np.array_equal(b, st.b[k]) and np.array_equal(bstar, st.bstar[k])):
            raise InvariantError(f"dual cache {k} differs from its last activation at iteration {n}")
