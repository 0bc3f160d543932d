"""Randomized block-iterative saddle projective splitting.

Problem data: for each primal block i an operator triple
``A_i`` (set-valued), ``C_i`` (cocoercive), ``Q_i`` (Lipschitz monotone)
and offset ``s*_i``; a monotone Lipschitz coupling ``R`` on the whole
primal space; for each dual block k the triples ``(Bm, Bc, Bl)`` and
``(Dm, Dc, Dl)``, offset ``r_k``, and linear maps ``L[k][i]``.  Zeros of
the saddle operator on ``H + G + G + G`` give primal-dual solutions.

Each iteration activates random index sets ``I_n`` and ``K_n``; inactive
blocks reuse the outputs computed at their last activation.  The rest
of the iteration (direction, gap, relaxed projection) always touches
every block.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .engine import GraphSample, StepRecord, Trace
from .errors import InvariantError, NumericalError, ParameterError, UnsupportedError, UsageError
from .operators import (
    CocoerciveOp,
    LinearMap,
    LipschitzMonotoneOp,
    MaxMonotoneOp,
    Shifted,
    ZeroOperator,
    cocoercive_zero,
    lipschitz_zero,
)
from .sampling import BlockSampler, LastActivation, RelaxationSampler, make_streams, relaxation_violations
from .spaces import SpaceLayout


def _v(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass
class SaddleProblem:
    h_dims: tuple[int, ...]
    g_dims: tuple[int, ...]
    A: list[MaxMonotoneOp]
    C: list[CocoerciveOp]
    Q: list[LipschitzMonotoneOp]
    s: list[np.ndarray]
    R: LipschitzMonotoneOp | None
    Bm: list[MaxMonotoneOp]
    Bc: list[CocoerciveOp]
    Bl: list[LipschitzMonotoneOp]
    Dm: list[MaxMonotoneOp]
    Dc: list[CocoerciveOp]
    Dl: list[LipschitzMonotoneOp]
    r: list[np.ndarray]
    L: list[list[LinearMap | None]]

    @classmethod
    def build(cls, h_dims: Sequence[int], g_dims: Sequence[int], **parts) -> "SaddleProblem":
        """Fill every omitted component with the zero operator of the right size."""
        h_dims, g_dims = tuple(h_dims), tuple(g_dims)
        I, K = range(len(h_dims)), range(len(g_dims))
        defaults = dict(
            A=[ZeroOperator(h_dims[i]) for i in I],
            C=[cocoercive_zero(h_dims[i]) for i in I],
            Q=[lipschitz_zero(h_dims[i]) for i in I],
            s=[np.zeros(h_dims[i]) for i in I],
            R=None,
            Bm=[ZeroOperator(g_dims[k]) for k in K],
            Bc=[cocoercive_zero(g_dims[k]) for k in K],
            Bl=[lipschitz_zero(g_dims[k]) for k in K],
            Dm=[ZeroOperator(g_dims[k]) for k in K],
            Dc=[cocoercive_zero(g_dims[k]) for k in K],
            Dl=[lipschitz_zero(g_dims[k]) for k in K],
            r=[np.zeros(g_dims[k]) for k in K],
            L=[[None for _ in I] for _ in K],
        )
        unknown = set(parts) - set(defaults)
        if unknown:
            raise ParameterError(f"unknown saddle problem components {sorted(unknown)}")
        defaults.update(parts)
        defaults["s"] = [_v(v) for v in defaults["s"]]
        defaults["r"] = [_v(v) for v in defaults["r"]]
        p = cls(h_dims, g_dims, **defaults)
        p.check_dims()
        return p

    def check_dims(self):
        ni, nk = self.n_i, self.n_k
        for name, n in (("A", ni), ("C", ni), ("Q", ni), ("s", ni), ("Bm", nk), ("Bc", nk),
                        ("Bl", nk), ("Dm", nk), ("Dc", nk), ("Dl", nk), ("r", nk)):
            if len(getattr(self, name)) != n:
                raise ParameterError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if len(self.L) != nk or any(len(row) != ni for row in self.L):
            raise ParameterError(f"L must be a {nk} x {ni} table")
        for k in range(nk):
            for i in range(ni):
                Lki = self.L[k][i]
                if Lki is not None and Lki.shape != (self.g_dims[k], self.h_dims[i]):
                    raise ParameterError(f"L[{k}][{i}] has shape {Lki.shape}, "
                                         f"expected {(self.g_dims[k], self.h_dims[i])}")

    @property
    def n_i(self) -> int:
        return len(self.h_dims)

    @property
    def n_k(self) -> int:
        return len(self.g_dims)

    @property
    def chi(self) -> float:
        return 0.0 if self.R is None else self.R.lip

    @property
    def alpha(self) -> float:
        """Smallest cocoercivity constant; zero operators (``alpha = inf``) drop out."""
        consts = [op.alpha for op in (*self.C, *self.Bc, *self.Dc)]
        return float(min(consts))

    @property
    def h_layout(self) -> SpaceLayout:
        return SpaceLayout(self.h_dims)

    @property
    def g_layout(self) -> SpaceLayout:
        return SpaceLayout(self.g_dims)

    @property
    def full_layout(self) -> SpaceLayout:
        return SpaceLayout(self.h_dims + self.g_dims * 3)

    def R_blocks(self, xs) -> list[np.ndarray]:
        if self.R is None:
            return [np.zeros(d) for d in self.h_dims]
        return self.h_layout.split(self.R(np.concatenate(xs)))

    def Lx(self, k: int, xs) -> np.ndarray:
        out = np.zeros(self.g_dims[k])
        for i, Lki in enumerate(self.L[k]):
            if Lki is not None:
                out = out + Lki(xs[i])
        return out

    def Lt(self, i: int, vs) -> np.ndarray:
        out = np.zeros(self.h_dims[i])
        for k in range(self.n_k):
            Lki = self.L[k][i]
            if Lki is not None:
                out = out + Lki.adjoint(vs[k])
        return out

    def pack(self, x, y, z, v) -> np.ndarray:
        return np.concatenate([*map(_v, x), *map(_v, y), *map(_v, z), *map(_v, v)])

    def unpack(self, flat):
        blocks = self.full_layout.split(flat)
        ni, nk = self.n_i, self.n_k
        return (blocks[:ni], blocks[ni:ni + nk], blocks[ni + nk:ni + 2 * nk], blocks[ni + 2 * nk:])

    def describe(self) -> dict:
        def d(ops):
            return [op.describe() for op in ops]
        return {
            "h_dims": list(self.h_dims), "g_dims": list(self.g_dims),
            "A": d(self.A), "C": d(self.C), "Q": d(self.Q), "s": [v.tolist() for v in self.s],
            "R": None if self.R is None else self.R.describe(),
            "Bm": d(self.Bm), "Bc": d(self.Bc), "Bl": d(self.Bl),
            "Dm": d(self.Dm), "Dc": d(self.Dc), "Dl": d(self.Dl), "r": [v.tolist() for v in self.r],
            "L": [[None if m is None else m.matrix.tolist() for m in row] for row in self.L],
            "alpha": self.alpha, "chi": self.chi,
        }


@dataclass(frozen=True)
class StepRule:
    """Per-index step sizes, cycled over iterations: ``values[n % len(values)][idx]``."""

    values: tuple[tuple[float, ...], ...]

    @classmethod
    def constant(cls, value, count: int) -> "StepRule":
        v = np.broadcast_to(np.asarray(value, dtype=float), (count,))
        return cls((tuple(float(t) for t in v),))

    @classmethod
    def cycle(cls, rows) -> "StepRule":
        return cls(tuple(tuple(float(t) for t in row) for row in rows))

    def __call__(self, idx: int, n: int) -> float:
        return self.values[n % len(self.values)][idx]

    def bounds(self, idx: int) -> tuple[float, float]:
        col = [row[idx] for row in self.values]
        return min(col), max(col)

    @property
    def count(self) -> int:
        return len(self.values[0])


@dataclass(frozen=True)
class StepSizes:
    sigma: float
    epsilon: float
    gamma: StepRule
    mu: StepRule
    nu: StepRule
    sig: StepRule

    @classmethod
    def constant(cls, p: SaddleProblem, sigma, epsilon, gamma, mu, nu, sig) -> "StepSizes":
        return cls(sigma, epsilon, StepRule.constant(gamma, p.n_i), StepRule.constant(mu, p.n_k),
                   StepRule.constant(nu, p.n_k), StepRule.constant(sig, p.n_k))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_step_sizes(p: SaddleProblem, s: StepSizes) -> ValidationReport:
    rep = ValidationReport()
    v = rep.violations
    alpha, chi = p.alpha, p.chi
    if not 0 < s.epsilon < 1:
        v.append(f"epsilon={s.epsilon} must lie in (0, 1)")
    if not s.sigma > 0:
        v.append(f"sigma={s.sigma} must be > 0")
    floor = 0.0 if np.isinf(alpha) else 1.0 / (4.0 * alpha)
    if not s.sigma > floor:
        v.append(f"sigma={s.sigma} must exceed 1/(4*alpha)={floor:.6g} (alpha={alpha:.6g})")
    caps = ([op.lip + chi + s.sigma for op in p.Q] + [op.lip + s.sigma for op in p.Bl]
            + [op.lip + s.sigma for op in p.Dl])
    if s.epsilon > 0 and not 1.0 / s.epsilon > max(caps):
        v.append(f"1/epsilon={1.0 / s.epsilon:.6g} must exceed {max(caps):.6g}")
    for name, rule, count in (("gamma", s.gamma, p.n_i), ("mu", s.mu, p.n_k), ("nu", s.nu, p.n_k),
                              ("sigma_k", s.sig, p.n_k)):
        if rule.count != count:
            v.append(f"{name} rule has {rule.count} entries, expected {count}")
    if v and any("rule has" in m for m in v):
        return rep
    for i in range(p.n_i):
        lo, hi = s.gamma.bounds(i)
        cap = 1.0 / (p.Q[i].lip + chi + s.sigma)
        if lo < s.epsilon or hi > cap:
            v.append(f"gamma[{i}] range [{lo:.6g}, {hi:.6g}] outside [{s.epsilon:.6g}, {cap:.6g}]")
    for k in range(p.n_k):
        for name, rule, lip in (("mu", s.mu, p.Bl[k].lip), ("nu", s.nu, p.Dl[k].lip)):
            lo, hi = rule.bounds(k)
            cap = 1.0 / (lip + s.sigma)
            if lo < s.epsilon or hi > cap:
                v.append(f"{name}[{k}] range [{lo:.6g}, {hi:.6g}] outside [{s.epsilon:.6g}, {cap:.6g}]")
        lo, hi = s.sig.bounds(k)
        if lo < s.epsilon or hi > 1.0 / s.epsilon:
            v.append(f"sigma_k[{k}] range [{lo:.6g}, {hi:.6g}] outside "
                     f"[{s.epsilon:.6g}, {1.0 / s.epsilon:.6g}]")
    return rep


@dataclass
class SaddleState:
    """Iterate ``(x, y, z, v*)`` plus block caches.

    ``x_act[i]`` (and ``y_act``, ``z_act``) hold the iterate block seen at
    the last activation; they are the ``q`` part of the engine sample.
    """

    n: int
    x: list
    y: list
    z: list
    vstar: list
    a: list | None = None
    astar: list | None = None
    xi: list | None = None
    b: list | None = None
    d: list | None = None
    estar: list | None = None
    qstar: list | None = None
    tstar: list | None = None
    eta: list | None = None
    x_act: list | None = None
    y_act: list | None = None
    z_act: list | None = None
    act_i: LastActivation | None = None
    act_k: LastActivation | None = None
    last_pstar: list | None = None
    last_e: list | None = None

    @classmethod
    def start(cls, p: SaddleProblem, x=None, y=None, z=None, vstar=None) -> "SaddleState":
        def blocks(val, dims):
            if val is None:
                return [np.zeros(d) for d in dims]
            return [_v(b).copy() for b in val]
        return cls(0, blocks(x, p.h_dims), blocks(y, p.g_dims), blocks(z, p.g_dims),
                   blocks(vstar, p.g_dims))

    @property
    def point(self):
        return self.x, self.y, self.z, self.vstar


def _finite(arr, n, block):
    if not np.all(np.isfinite(arr)):
        raise NumericalError("non-finite intermediate", iteration=n, block=block)
    return arr


def saddle_iterate(p: SaddleProblem, s: StepSizes, st: SaddleState, I_n, K_n, lam: float,
                   alpha: float | None = None, rho: float = np.inf):
    """One pass of the block-iterative update; returns ``(new_state, StepRecord)``."""
    n = st.n
    alpha = p.alpha if alpha is None else alpha
    if not (np.isfinite(lam) and 0 < lam <= rho):
        raise ParameterError(f"relaxation {lam} outside (0, {rho}]")
    I_n, K_n = sorted(set(I_n)), sorted(set(K_n))
    if st.a is None and (len(I_n) != p.n_i or len(K_n) != p.n_k):
        raise UsageError("the first iteration must activate every block")
    x, y, z, v = st.x, st.y, st.z, st.vstar
    if st.a is None:
        a, astar, xi, x_act = [None] * p.n_i, [None] * p.n_i, [0.0] * p.n_i, [None] * p.n_i
        b, d, estar, qstar, tstar = ([None] * p.n_k for _ in range(5))
        eta, y_act, z_act = [0.0] * p.n_k, [None] * p.n_k, [None] * p.n_k
        act_i, act_k = LastActivation.start(p.n_i), LastActivation.start(p.n_k)
    else:
        a, astar, xi, x_act = list(st.a), list(st.astar), list(st.xi), list(st.x_act)
        b, d, estar, qstar, tstar = list(st.b), list(st.d), list(st.estar), list(st.qstar), list(st.tstar)
        eta, y_act, z_act = list(st.eta), list(st.y_act), list(st.z_act)
        act_i, act_k = st.act_i, st.act_k

    if I_n:
        Rx = p.R_blocks(x)
    for i in I_n:
        g = s.gamma(i, n)
        l = p.Q[i](x[i]) + Rx[i] + p.Lt(i, v)
        ai = p.A[i].resolvent(g, x[i] + g * (p.s[i] - l - p.C[i](x[i])))
        a[i] = _finite(ai, n, f"a[{i}]")
        astar[i] = _finite((x[i] - ai) / g - l + p.Q[i](ai), n, f"a*[{i}]")
        xi[i] = float((ai - x[i]) @ (ai - x[i]))
        x_act[i] = x[i]
    for k in K_n:
        mu, nu, sg = s.mu(k, n), s.nu(k, n), s.sig(k, n)
        u = v[k] - p.Bl[k](y[k])
        w = v[k] - p.Dl[k](z[k])
        bk = p.Bm[k].resolvent(mu, y[k] + mu * (u - p.Bc[k](y[k])))
        dk = p.Dm[k].resolvent(nu, z[k] + nu * (w - p.Dc[k](z[k])))
        ek = sg * (p.Lx(k, x) - y[k] - z[k] - p.r[k]) + v[k]
        b[k] = _finite(bk, n, f"b[{k}]")
        d[k] = _finite(dk, n, f"d[{k}]")
        estar[k] = _finite(ek, n, f"e*[{k}]")
        qstar[k] = _finite((y[k] - bk) / mu + u + p.Bl[k](bk) - ek, n, f"q*[{k}]")
        tstar[k] = _finite((z[k] - dk) / nu + w + p.Dl[k](dk) - ek, n, f"t*[{k}]")
        eta[k] = float((bk - y[k]) @ (bk - y[k]) + (dk - z[k]) @ (dk - z[k]))
        y_act[k], z_act[k] = y[k], z[k]
    # the affine row is recomputed for every k with the current a
    e = [_finite(p.r[k] + b[k] + d[k] - p.Lx(k, a), n, f"e[{k}]") for k in range(p.n_k)]
    Ra = p.R_blocks(a)
    pstar = [_finite(astar[i] + Ra[i] + p.Lt(i, estar), n, f"p*[{i}]") for i in range(p.n_i)]

    # packed inner products, in the same order as the engine's gap on the product space
    offset = p.pack([x[i] - a[i] for i in range(p.n_i)], [y[k] - b[k] for k in range(p.n_k)],
                    [z[k] - d[k] for k in range(p.n_k)], [v[k] - estar[k] for k in range(p.n_k)])
    direction = p.pack(pstar, qstar, tstar, e)
    if np.isinf(alpha):
        pen = 0.0
    else:
        lag = p.pack([a[i] - x_act[i] for i in range(p.n_i)], [b[k] - y_act[k] for k in range(p.n_k)],
                     [d[k] - z_act[k] for k in range(p.n_k)], [np.zeros_like(t) for t in estar])
        pen = float(lag @ lag) / (4.0 * alpha)
    delta = float(offset @ direction) - pen
    denom = float(direction @ direction)
    if not (np.isfinite(delta) and np.isfinite(denom)):
        raise NumericalError("non-finite gap", iteration=n)
    theta = delta / denom if (delta > 0 and denom > 0) else 0.0
    step = lam * theta
    new = SaddleState(
        n=n + 1,
        x=[x[i] - step * pstar[i] for i in range(p.n_i)],
        y=[y[k] - step * qstar[k] for k in range(p.n_k)],
        z=[z[k] - step * tstar[k] for k in range(p.n_k)],
        vstar=[v[k] - step * e[k] for k in range(p.n_k)],
        a=a, astar=astar, xi=xi, b=b, d=d, estar=estar, qstar=qstar, tstar=tstar, eta=eta,
        x_act=x_act, y_act=y_act, z_act=z_act,
        act_i=act_i.update(n, I_n), act_k=act_k.update(n, K_n),
        last_pstar=pstar, last_e=e,
    )
    tn = float(np.sqrt(denom))
    return new, StepRecord(n, float(delta), float(theta), float(lam), theta * tn, tn)


def saddle_residual(p: SaddleProblem, point) -> float:
    """Norm of the rowwise resolvent fixed-point residuals; zero iff ``point`` is a saddle zero."""
    x, y, z, v = point
    x = [_v(t) for t in x]
    y, z, v = ([_v(t) for t in blk] for blk in (y, z, v))
    Rx = p.R_blocks(x)
    parts = []
    for i in range(p.n_i):
        rest = -p.s[i] + p.C[i](x[i]) + p.Q[i](x[i]) + Rx[i] + p.Lt(i, v)
        parts.append(x[i] - p.A[i].resolvent(1.0, x[i] - rest))
    for k in range(p.n_k):
        parts.append(y[k] - p.Bm[k].resolvent(1.0, y[k] - (p.Bc[k](y[k]) + p.Bl[k](y[k]) - v[k])))
        parts.append(z[k] - p.Dm[k].resolvent(1.0, z[k] - (p.Dc[k](z[k]) + p.Dl[k](z[k]) - v[k])))
        parts.append(p.r[k] + y[k] + z[k] - p.Lx(k, x))
    return float(np.linalg.norm(np.concatenate(parts)))


def constructed_zero(p: SaddleProblem, rng: np.random.Generator | None = None, scale: float = 1.0,
                     u_a=None, u_b=None, u_d=None):
    """Back-solve offsets so that a chosen point is a saddle zero.

    Returns ``(problem, (x, y, z, v*))``.  ``x_i = J_{A_i}(u_a[i])``,
    ``y_k = J_{Bm_k}(u_b[k])``, ``z_k = J_{Dm_k}(u_d[k])``; ``v*`` follows
    from the B row, ``s*`` and ``r`` are set to fit, and ``Dm_k`` is
    shifted by a constant when the D row would otherwise disagree.
    """
    rng = np.random.default_rng(0) if rng is None else rng

    def draw(given, dims):
        if given is not None:
            return [_v(t) for t in given]
        return [scale * rng.standard_normal(dd) for dd in dims]

    u_a, u_b, u_d = draw(u_a, p.h_dims), draw(u_b, p.g_dims), draw(u_d, p.g_dims)
    x = [p.A[i].resolvent(1.0, u_a[i]) for i in range(p.n_i)]
    a_sel = [u_a[i] - x[i] for i in range(p.n_i)]
    y = [p.Bm[k].resolvent(1.0, u_b[k]) for k in range(p.n_k)]
    v = [u_b[k] - y[k] + p.Bc[k](y[k]) + p.Bl[k](y[k]) for k in range(p.n_k)]
    z = [p.Dm[k].resolvent(1.0, u_d[k]) for k in range(p.n_k)]
    Dm = list(p.Dm)
    for k in range(p.n_k):
        c = (u_d[k] - z[k]) + p.Dc[k](z[k]) + p.Dl[k](z[k]) - v[k]
        if np.any(c != 0):
            Dm[k] = Shifted(p.Dm[k], c)
    Rx = p.R_blocks(x)
    s = [a_sel[i] + p.C[i](x[i]) + p.Q[i](x[i]) + Rx[i] + p.Lt(i, v) for i in range(p.n_i)]
    r = [p.Lx(k, x) - y[k] - z[k] for k in range(p.n_k)]
    return replace(p, s=s, r=r, Dm=Dm), (x, y, z, v)


def saddle_supplier(p: SaddleProblem, s: StepSizes):
    """Engine supplier for the full-activation iteration on the packed space.

    The sample is read off the W/C decomposition of the saddle operator:
    ``w = (a, b, d, e*)``, ``q = (x, y, z, e*)``, ``w*`` is an element of
    ``W(w)`` and ``c* = C q``.
    """
    def supplier(n, flat, rng):
        x, y, z, v = p.unpack(flat)
        Rx = p.R_blocks(x)
        a, a_el, cx = [], [], []
        for i in range(p.n_i):
            g = s.gamma(i, n)
            cx.append(p.C[i](x[i]))
            u = x[i] + g * (p.s[i] - (p.Q[i](x[i]) + Rx[i] + p.Lt(i, v)) - cx[i])
            ai = p.A[i].resolvent(g, u)
            a.append(ai)
            a_el.append((u - ai) / g)
        b, d, es, wb, wd, cb, cd = [], [], [], [], [], [], []
        for k in range(p.n_k):
            mu, nu, sg = s.mu(k, n), s.nu(k, n), s.sig(k, n)
            cb.append(p.Bc[k](y[k]))
            cd.append(p.Dc[k](z[k]))
            ub = y[k] + mu * (v[k] - p.Bl[k](y[k]) - cb[k])
            ud = z[k] + nu * (v[k] - p.Dl[k](z[k]) - cd[k])
            bk, dk = p.Bm[k].resolvent(mu, ub), p.Dm[k].resolvent(nu, ud)
            ek = v[k] + sg * (p.Lx(k, x) - y[k] - z[k] - p.r[k])
            b.append(bk)
            d.append(dk)
            es.append(ek)
            wb.append((ub - bk) / mu + p.Bl[k](bk) - ek)
            wd.append((ud - dk) / nu + p.Dl[k](dk) - ek)
        Ra = p.R_blocks(a)
        wx = [-p.s[i] + a_el[i] + p.Q[i](a[i]) + Ra[i] + p.Lt(i, es) for i in range(p.n_i)]
        wv = [p.r[k] + b[k] + d[k] - p.Lx(k, a) for k in range(p.n_k)]
        zero_v = [np.zeros(dd) for dd in p.g_dims]
        return GraphSample(
            w=p.pack(a, b, d, es),
            wstar=p.pack(wx, wb, wd, wv),
            q=p.pack(x, y, z, es),
            cstar=p.pack(cx, cb, cd, zero_v),
        )

    return supplier


def _fmt_active(I_n, K_n) -> str:
    return "I=" + ";".join(map(str, I_n)) + "|K=" + ";".join(map(str, K_n))


def run_saddle(p: SaddleProblem, s: StepSizes, samplers, relax: RelaxationSampler, start=None,
               n_iter: int = 100, seed: int = 0, rho: float = 2.0, residual_every: int = 0,
               reference=None, audit: bool = False, keep_iterates: bool = False,
           stop=None):
    """Run the randomized saddle splitting; return ``(final_state, Trace)``.

    ``samplers`` is a pair of :class:`BlockSampler` for the primal and dual
    index sets.  ``trace.meta["block_gaps"]`` holds, per iteration,
    ``(|x-a|, |y-b|, |z-d|, |v*-e*|)`` and ``trace.meta["staleness"]``
    the largest ``|x_i at last activation - x_i|``.  With ``audit`` every
    iteration checks the cache-carry law and the xi/eta bookkeeping
    identity, raising :class:`InvariantError` on failure.
    """
    rep = validate_step_sizes(p, s)
    if not rep.ok:
        raise ParameterError("step sizes rejected: " + "; ".join(rep.violations))
    bad = relaxation_violations(relax, rho=rho, lower=s.epsilon, strict_moment=True)
    if bad:
        raise ParameterError("relaxation rejected: " + "; ".join(bad))
    si, sk = samplers
    if si.count != p.n_i or sk.count != p.n_k:
        raise ParameterError("block samplers must match the numbers of primal and dual blocks")
    streams = make_streams(seed)
    alpha = p.alpha
    if start is None:
        st = SaddleState.start(p)
    elif isinstance(start, SaddleState):
        st = start
    else:
        st = SaddleState.start(p, *start)
    ref = None if reference is None else p.pack(*reference)
    records, gaps, stale = [], [], []
    iterates = [p.pack(*st.point)] if keep_iterates else None
    snap_i, snap_k = {}, {}
    if st.a is not None:
        snap_i.update((i, (st.act_i.counters[i], st.a[i].copy(), st.astar[i].copy(), st.xi[i]))
                      for i in range(p.n_i))
        snap_k.update((k, (st.act_k.counters[k],
                           *(getattr(st, f)[k].copy() for f in ("b", "d", "estar", "qstar", "tstar")),
                           st.eta[k])) for k in range(p.n_k))
    # a resumed state keeps its own iteration count
    n0 = st.n
    for n in range(n0, n0 + n_iter):
        I_n = si.sample(n, streams.block)
        K_n = sk.sample(n, streams.block)
        lam = relax.sample(streams.relax)
        x_before, y_before, z_before, v_before = st.point
        st, rec = saddle_iterate(p, s, st, I_n, K_n, lam, alpha, rho)
        gaps.append((
            float(np.linalg.norm(np.concatenate([x_before[i] - st.a[i] for i in range(p.n_i)]))),
            float(np.linalg.norm(np.concatenate([y_before[k] - st.b[k] for k in range(p.n_k)]))),
            float(np.linalg.norm(np.concatenate([z_before[k] - st.d[k] for k in range(p.n_k)]))),
            float(np.linalg.norm(np.concatenate([v_before[k] - st.estar[k] for k in range(p.n_k)]))),
        ))
        stale.append(max(float(np.linalg.norm(st.x_act[i] - x_before[i])) for i in range(p.n_i)))
        if audit:
            _audit(p, st, n, I_n, K_n, snap_i, snap_k)
        extra = {"active_blocks": _fmt_active(I_n, K_n)}
        if residual_every and (n % residual_every == 0 or n == n0 + n_iter - 1):
            extra["residual"] = saddle_residual(p, st.point)
        if ref is not None:
            extra["dist_to_ref"] = float(np.linalg.norm(p.pack(*st.point) - ref))
        records.append(rec.with_(**extra))
        if keep_iterates:
            iterates.append(p.pack(*st.point))
        if stop is not None and stop(st):
            break
    meta = {
        "algorithm": "saddle", "seed": int(seed), "alpha": alpha,
        "block_gaps": np.array(gaps).reshape(-1, 4), "staleness": np.array(stale),
    }
    return st, Trace(records, iterates, meta)


def _audit(p, st, n, I_n, K_n, snap_i, snap_k):
    for i in range(p.n_i):
        if i in I_n:
            snap_i[i] = (n, st.a[i].copy(), st.astar[i].copy(), st.xi[i])
        m, a, astar, xi = snap_i[i]
        if st.act_i.counters[i] != m or not (np.array_equal(st.a[i], a)
                                             and np.array_equal(st.astar[i], astar) and st.xi[i] == xi):
            raise InvariantError(f"primal cache {i} differs from its last activation at iteration {n}")
    for k in range(p.n_k):
        if k in K_n:
            snap_k[k] = (n, *(getattr(st, f)[k].copy() for f in ("b", "d", "estar", "qstar", "tstar")),
                         st.eta[k])
        m, *cached, eta = snap_k[k]
        current = [getattr(st, f)[k] for f in ("b", "d", "estar", "qstar", "tstar")]
        if st.act_k.counters[k] != m or st.eta[k] != eta or not all(
                np.array_equal(c, u) for c, u in zip(cached, current)):
            raise InvariantError(f"dual cache {k} differs from its last activation at iteration {n}")
    lhs = sum(st.xi) + sum(st.eta)
    w = p.pack(st.a, st.b, st.d, st.estar)
    q = p.pack(st.x_act, st.y_act, st.z_act, st.estar)
    rhs = float((w - q) @ (w - q))
    if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
        raise InvariantError(f"xi/eta bookkeeping off by {abs(lhs - rhs):.3e} at iteration {n}")


# -- minimization specialization ---------------------------------------------


@dataclass
class MinProblem:
    """Composite minimization data.

    minimize  Theta(x) + sum_i f_i(x_i) + phi_i(x_i)
              + sum_k ((g_k + psi_k) inf-conv h_k)(sum_i L_ki x_i)

    ``f``, ``g``, ``h`` are catalog subdifferentials (prox available);
    ``phi``, ``psi`` are gradients given as :class:`CocoerciveOp`;
    ``theta`` is the gradient of Theta as a :class:`LipschitzMonotoneOp`.
    """

    h_dims: tuple[int, ...]
    g_dims: tuple[int, ...]
    f: list[MaxMonotoneOp]
    phi: list[CocoerciveOp]
    g: list[MaxMonotoneOp]
    psi: list[CocoerciveOp]
    h: list[MaxMonotoneOp]
    L: list[list[LinearMap | None]]
    theta: LipschitzMonotoneOp | None = None


def build_min_problem(m: MinProblem) -> SaddleProblem:
    for name in ("f", "g", "h"):
        for j, op in enumerate(getattr(m, name)):
            try:
                op.value(np.zeros(op.dim))
            except UnsupportedError as exc:
                raise UnsupportedError(f"{name}[{j}] is not a catalog function: {exc}") from None
    return SaddleProblem.build(
        m.h_dims, m.g_dims,
        A=list(m.f), C=list(m.phi), R=m.theta,
        Bm=list(m.g), Bc=list(m.psi), Dm=list(m.h),
        L=m.L,
    )


def kt_condition_residual(m: MinProblem, x, vstar, y) -> float:
    """Residual of the primal-dual optimality system of a :class:`MinProblem`.

    The dual inclusion involves the inf-convolution, so the split point
    ``y_k`` of ``sum_i L_ki x_i = y_k + z_k`` must be supplied;
    ``z_k`` is the remainder.  Rows are measured through prox fixed points.
    """
    x = [_v(t) for t in x]
    v = [_v(t) for t in vstar]
    y = [_v(t) for t in y]
    p = build_min_problem(m)
    grad_theta = p.R_blocks(x)
    parts = []
    for i in range(p.n_i):
        rest = m.phi[i](x[i]) + grad_theta[i] + p.Lt(i, v)
        parts.append(x[i] - m.f[i].resolvent(1.0, x[i] - rest))
    for k in range(p.n_k):
        zk = p.Lx(k, x) - y[k]
        parts.append(y[k] - m.g[k].resolvent(1.0, y[k] - (m.psi[k](y[k]) - v[k])))
        parts.append(zk - m.h[k].resolvent(1.0, zk + v[k]))
    return float(np.linalg.norm(np.concatenate(parts)))
