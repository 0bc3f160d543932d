"""Catalog of monotone operators with closed-form resolvents.

Every maximally monotone operator here exposes ``resolvent(gamma, x)``,
the map ``(Id + gamma*A)^{-1}``.  Operators that are subdifferentials of
convex functions also expose ``value(z)`` so that the proximity operator
can be checked against brute-force minimization of
``value(z) + |x - z|^2 / (2*gamma)``.

Single-valued operators come in two flavours: ``CocoerciveOp`` for
gradients of smooth convex functions and ``LipschitzMonotoneOp`` for
monotone Lipschitz maps that need not be cocoercive (rotations).  Their
constants are declared, not estimated; the ``check_*`` helpers return
signed residuals that tests compare against a tolerance.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ParameterError, UnsupportedError


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _check_gamma(gamma):
    if not (np.isfinite(gamma) and gamma > 0):
        raise ParameterError(f"resolvent parameter must be > 0, got {gamma}")


class MaxMonotoneOp:
    """A maximally monotone operator on R^dim."""

    kind = "abstract"

    def __init__(self, dim: int):
        self.dim = int(dim)

    def resolvent(self, gamma: float, x) -> np.ndarray:
        _check_gamma(gamma)
        return self._resolvent(float(gamma), _vec(x))

    def _resolvent(self, gamma, x):
        raise NotImplementedError

    def value(self, z) -> float:
        """Function value when the operator is a subdifferential."""
        raise UnsupportedError(f"{self.kind} is not a catalog subdifferential")

    def known_zero(self) -> np.ndarray | None:
        return None

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class ZeroOperator(MaxMonotoneOp):
    kind = "zero"

    def _resolvent(self, gamma, x):
        return x.copy()

    def value(self, z):
        return 0.0

    def known_zero(self):
        return np.zeros(self.dim)


class L1Norm(MaxMonotoneOp):
    """Subdifferential of ``weight * |z|_1``; the prox is soft thresholding."""

    kind = "l1"

    def __init__(self, dim: int = 1, weight: float = 1.0):
        super().__init__(dim)
        if weight < 0:
            raise ParameterError(f"l1 weight must be >= 0, got {weight}")
        self.weight = float(weight)

    def _resolvent(self, gamma, x):
        t = gamma * self.weight
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    def value(self, z):
        return self.weight * float(np.sum(np.abs(_vec(z))))

    def known_zero(self):
        return np.zeros(self.dim)

    def describe(self):
        return {"kind": self.kind, "dim": self.dim, "weight": self.weight}


class WeightedQuadratic(MaxMonotoneOp):
    """Gradient of ``0.5 * sum q_j (z_j - c_j)^2`` with ``q >= 0``."""

    kind = "quadratic"

    def __init__(self, q, center=None):
        q = _vec(q)
        if np.any(q < 0):
            raise ParameterError("quadratic weights must be nonnegative")
        super().__init__(q.size)
        self.q = q
        self.center = np.zeros(self.dim) if center is None else _vec(center) * np.ones(self.dim)

    def _resolvent(self, gamma, x):
        return (x + gamma * self.q * self.center) / (1.0 + gamma * self.q)

    def value(self, z):
        d = _vec(z) - self.center
        return 0.5 * float(np.sum(self.q * d * d))

    def apply(self, z):
        return self.q * (_vec(z) - self.center)

    def known_zero(self):
        return self.center.copy()

    def describe(self):
        return {"kind": self.kind, "q": self.q.tolist(), "center": self.center.tolist()}


class BoxIndicator(MaxMonotoneOp):
    """Normal cone of the box ``[lo, hi]``; the resolvent is the projection."""

    kind = "box"

    def __init__(self, lo, hi, dim: int | None = None):
        lo, hi = _vec(lo), _vec(hi)
        n = dim or max(lo.size, hi.size)
        lo, hi = lo * np.ones(n), hi * np.ones(n)
        if np.any(lo > hi):
            raise ParameterError("box needs lo <= hi")
        super().__init__(n)
        self.lo, self.hi = lo, hi

    def _resolvent(self, gamma, x):
        return np.clip(x, self.lo, self.hi)

    def value(self, z):
        z = _vec(z)
        return 0.0 if np.all((z >= self.lo) & (z <= self.hi)) else np.inf

    def known_zero(self):
        # interior points have normal cone {0}
        return np.clip(np.zeros(self.dim), self.lo, self.hi)

    def describe(self):
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class AffineMonotone(MaxMonotoneOp):
    """``z -> M z + b`` with ``M + M^T`` positive semidefinite."""

    kind = "affine"

    def __init__(self, matrix, offset=None):
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise ParameterError("affine operator needs a square matrix")
        sym = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(sym).min() < -1e-12 * max(1.0, np.abs(m).max()):
            raise ParameterError("affine operator is not monotone: M + M^T has a negative eigenvalue")
        super().__init__(m.shape[0])
        self.matrix = m
        self.offset = np.zeros(self.dim) if offset is None else _vec(offset)
        # symmetric M means a gradient of a convex quadratic
        self._symmetric = np.allclose(m, m.T, atol=0.0)

    def _resolvent(self, gamma, x):
        lhs = np.eye(self.dim) + gamma * self.matrix
        return np.linalg.solve(lhs, x - gamma * self.offset)

    def apply(self, z):
        return self.matrix @ _vec(z) + self.offset

    def value(self, z):
        if not self._symmetric:
            raise UnsupportedError("non-symmetric affine operator is not a subdifferential")
        z = _vec(z)
        return 0.5 * float(z @ self.matrix @ z) + float(self.offset @ z)

    def known_zero(self):
        try:
            return np.linalg.solve(self.matrix, -self.offset)
        except np.linalg.LinAlgError:
            return None

    def describe(self):
        return {"kind": self.kind, "matrix": self.matrix.tolist(), "offset": self.offset.tolist()}


def rotation(angle: float, offset=None) -> AffineMonotone:
    """Planar rotation; monotone iff ``cos(angle) >= 0``."""
    c, s = np.cos(angle), np.sin(angle)
    return AffineMonotone([[c, -s], [s, c]], offset)


class Shifted(MaxMonotoneOp):
    """``z -> A z - u``; zeros of the shifted operator solve ``u in A z``."""

    kind = "shifted"

    def __init__(self, base: MaxMonotoneOp, u):
        super().__init__(base.dim)
        self.base = base
        self.u = _vec(u) * np.ones(base.dim)

    def _resolvent(self, gamma, x):
        return self.base.resolvent(gamma, x + gamma * self.u)

    def value(self, z):
        return self.base.value(z) - float(self.u @ _vec(z))

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe(), "u": self.u.tolist()}


class Translated(MaxMonotoneOp):
    """``z -> A(z + c)``."""

    kind = "translated"

    def __init__(self, base: MaxMonotoneOp, c):
        super().__init__(base.dim)
        self.base = base
        self.c = _vec(c) * np.ones(base.dim)

    def _resolvent(self, gamma, x):
        return self.base.resolvent(gamma, x + self.c) - self.c

    def value(self, z):
        return self.base.value(_vec(z) + self.c)

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe(), "c": self.c.tolist()}


class Inverse(MaxMonotoneOp):
    """Set-valued inverse ``A^{-1}``, resolved through ``J_{gA^{-1}} x = x - g J_{A/g}(x/g)``."""

    kind = "inverse"

    def __init__(self, base: MaxMonotoneOp):
        super().__init__(base.dim)
        self.base = base

    def _resolvent(self, gamma, x):
        return x - gamma * self.base.resolvent(1.0 / gamma, x / gamma)

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe()}


def resolvent(op: MaxMonotoneOp, gamma: float, x) -> np.ndarray:
    return op.resolvent(gamma, x)


def graph_point(op: MaxMonotoneOp, gamma: float, x):
    """Return ``(w, w*)`` with ``w = J_{gamma A} x`` and ``w* = (x - w)/gamma``, a point of gra A."""
    x = _vec(x)
    w = op.resolvent(gamma, x)
    return w, (x - w) / gamma


def check_firm_nonexpansive(op: MaxMonotoneOp, gamma: float, x, y) -> float:
    """``|Jx-Jy|^2 + |(x-Jx)-(y-Jy)|^2 - |x-y|^2``; nonpositive for valid operators."""
    x, y = _vec(x), _vec(y)
    jx, jy = op.resolvent(gamma, x), op.resolvent(gamma, y)
    d = jx - jy
    r = (x - jx) - (y - jy)
    return float(d @ d + r @ r - (x - y) @ (x - y))


# -- single-valued operators ------------------------------------------------


class CocoerciveOp:
    """An ``alpha``-cocoercive map; ``alpha = inf`` encodes the zero operator."""

    def __init__(self, value: Callable, alpha: float, dim: int, potential: Callable | None = None,
                 name: str = "custom"):
        if not alpha > 0:
            raise ParameterError(f"cocoercivity constant must be > 0, got {alpha}")
        self._value = value
        self.alpha = float(alpha)
        self.dim = int(dim)
        self.potential = potential
        self.name = name

    def __call__(self, x) -> np.ndarray:
        return _vec(self._value(_vec(x)))

    @property
    def is_zero(self) -> bool:
        return np.isinf(self.alpha)

    def describe(self):
        return {"kind": self.name, "dim": self.dim, "alpha": self.alpha}

    def __repr__(self):
        return f"CocoerciveOp({self.describe()})"


def cocoercive_zero(dim: int) -> CocoerciveOp:
    return CocoerciveOp(lambda x: np.zeros(dim), np.inf, dim, potential=lambda x: 0.0, name="zero")


def identity(dim: int) -> CocoerciveOp:
    return CocoerciveOp(lambda x: x.copy(), 1.0, dim, potential=lambda x: 0.5 * float(x @ x),
                        name="identity")


def quadratic_gradient(q, center=None) -> CocoerciveOp:
    """Gradient of ``0.5 * sum q_j (z_j - c_j)^2``; Baillon-Haddad gives ``alpha = 1/max q``."""
    f = WeightedQuadratic(q, center)
    qmax = float(f.q.max())
    alpha = np.inf if qmax == 0 else 1.0 / qmax
    op = CocoerciveOp(f.apply, alpha, f.dim, potential=f.value, name="quadratic-gradient")
    op.q, op.center = f.q, f.center
    return op


def check_cocoercive(op: CocoerciveOp, x, y) -> float:
    """``alpha |Cx-Cy|^2 - <x-y, Cx-Cy>``; nonpositive for valid operators."""
    x, y = _vec(x), _vec(y)
    d = op(x) - op(y)
    if op.is_zero:
        return float(-(x - y) @ d) if np.any(d) else 0.0
    return float(op.alpha * (d @ d) - (x - y) @ d)


class LipschitzMonotoneOp:
    """A monotone map with Lipschitz constant ``lip``."""

    def __init__(self, value: Callable, lip: float, dim: int, name: str = "custom", dim_out: int | None = None):
        if lip < 0:
            raise ParameterError(f"Lipschitz constant must be >= 0, got {lip}")
        self._value = value
        self.lip = float(lip)
        self.dim = int(dim)
        self.dim_out = self.dim if dim_out is None else int(dim_out)
        self.name = name

    def __call__(self, x) -> np.ndarray:
        return _vec(self._value(_vec(x)))

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"

    def describe(self):
        return {"kind": self.name, "dim": self.dim, "lip": self.lip}

    def __repr__(self):
        return f"LipschitzMonotoneOp({self.describe()})"


def lipschitz_zero(dim: int) -> LipschitzMonotoneOp:
    return LipschitzMonotoneOp(lambda x: np.zeros(dim), 0.0, dim, name="zero")


def linear_monotone(matrix) -> LipschitzMonotoneOp:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if np.linalg.eigvalsh(0.5 * (m + m.T)).min() < -1e-12 * max(1.0, np.abs(m).max()):
        raise ParameterError("linear map is not monotone")
    op = LipschitzMonotoneOp(lambda x: m @ x, float(np.linalg.norm(m, 2)), m.shape[0], name="linear")
    op.matrix = m
    return op


def rotation_operator(angle: float) -> LipschitzMonotoneOp:
    c, s = np.cos(angle), np.sin(angle)
    if c < 0:
        raise ParameterError("rotation by more than pi/2 is not monotone")
    op = linear_monotone([[c, -s], [s, c]])
    op.name = "rotation"
    op.angle = float(angle)
    return op


def strong_monotonicity_margin(gamma: float, op: LipschitzMonotoneOp, x, y, sigma: float) -> float:
    """``<x-y, (Id/gamma - T)x - (Id/gamma - T)y> - sigma |x-y|^2``.

    Nonnegative whenever ``gamma <= 1/(lip + sigma)``.
    """
    x, y = _vec(x), _vec(y)
    dx = x - y
    g = dx / gamma - (op(x) - op(y))
    return float(dx @ g - sigma * (dx @ dx))


class LinearMap:
    """Dense linear map ``R^n -> R^m`` with its adjoint."""

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))

    @classmethod
    def zero(cls, m: int, n: int) -> "LinearMap":
        return cls(np.zeros((m, n)))

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        return cls(np.eye(n))

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ _vec(x)

    apply = __call__

    def adjoint(self, v) -> np.ndarray:
        return self.matrix.T @ _vec(v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def __repr__(self):
        return f"LinearMap(shape={self.shape})"


def check_adjoint(L: LinearMap, x, v) -> float:
    """Relative gap ``|<Lx, v> - <x, L*v>| / max(1, |Lx||v|)``."""
    x, v = _vec(x), _vec(v)
    lhs = float(L(x) @ v)
    rhs = float(x @ L.adjoint(v))
    scale = max(1.0, float(np.linalg.norm(L(x)) * np.linalg.norm(v)))
    return abs(lhs - rhs) / scale


def sample_pair_residuals(op, rng: np.random.Generator, n_pairs: int = 100, scale: float = 10.0,
                          gamma_range=(0.05, 5.0)) -> np.ndarray:
    """Property residuals of ``op`` on random pairs, normalized by ``max(1, |x-y|^2)``.

    Used by the CLI dry run to flag operators whose declared constants fail.
    """
    out = np.empty(n_pairs)
    for j in range(n_pairs):
        x = scale * rng.standard_normal(op.dim)
        y = scale * rng.standard_normal(op.dim)
        norm2 = max(1.0, float((x - y) @ (x - y)))
        if isinstance(op, MaxMonotoneOp):
            g = rng.uniform(*gamma_range)
            out[j] = check_firm_nonexpansive(op, g, x, y) / norm2
        elif isinstance(op, CocoerciveOp):
            out[j] = check_cocoercive(op, x, y) / norm2
        elif isinstance(op, LipschitzMonotoneOp):
            dx = x - y
            dt = op(x) - op(y)
            mono = -float(dx @ dt)
            lip = float(dt @ dt) - op.lip ** 2 * float(dx @ dx)
            out[j] = max(mono, lip) / norm2
        else:
            raise UnsupportedError(f"no property check for {type(op).__name__}")
    return out
