"""Independent reference computations.

Nothing here imports the library; each oracle re-derives its answer by
brute force or by a straight-line evaluation of the update formulas on
plain floats.
"""
from __future__ import annotations

import numpy as np

GRID_STEP = 1e-4


def grid_argmin_1d(fun, center: float, half_width: float, step: float = GRID_STEP) -> float:
    """Minimize ``fun`` on a uniform grid, zooming from a coarse grid to ``step``."""
    c, h = float(center), float(half_width)
    while True:
        n = int(np.ceil(h / step))
        if n <= 2000:
            g = c + step * np.arange(-n, n + 1)
            return float(g[np.argmin(fun(g))])
        g = np.linspace(c - h, c + h, 2001)
        c = float(g[np.argmin(fun(g))])
        h = 4 * (g[1] - g[0])


def grid_argmin_2d(fun, center, half_width: float, step: float = GRID_STEP) -> np.ndarray:
    c, h = np.asarray(center, dtype=float), float(half_width)
    while True:
        n = int(np.ceil(h / step))
        if n <= 150:
            g = step * np.arange(-n, n + 1)
            X, Y = np.meshgrid(c[0] + g, c[1] + g, indexing="ij")
            k = np.unravel_index(np.argmin(fun(X, Y)), X.shape)
            return np.array([X[k], Y[k]])
        g = np.linspace(-h, h, 301)
        X, Y = np.meshgrid(c[0] + g, c[1] + g, indexing="ij")
        k = np.unravel_index(np.argmin(fun(X, Y)), X.shape)
        c = np.array([X[k], Y[k]])
        h = 4 * (g[1] - g[0])


def prox_by_grid_1d(value, gamma: float, x: float, half_width: float = 20.0) -> float:
    """``argmin_z value(z) + (x - z)^2 / (2 gamma)`` on a grid; ``value`` is vectorized over z."""
    return grid_argmin_1d(lambda z: value(z) + (x - z) ** 2 / (2 * gamma), x, half_width)


def prox_by_grid_2d(value, gamma: float, x, half_width: float = 20.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return grid_argmin_2d(lambda a, b: value(a, b) + ((x[0] - a) ** 2 + (x[1] - b) ** 2) / (2 * gamma),
                          x, half_width)


def soft_threshold_recursion(x0: float, n: int, gamma: float = 1.0):
    """Iterates of ``x <- sign(x) max(|x| - gamma, 0)``."""
    out = [float(x0)]
    for _ in range(n):
        x = out[-1]
        out.append(float(np.sign(x) * max(abs(x) - gamma, 0.0)))
    return out


def scripted_saddle_step(x, y, z, v, gamma, mu, nu, sig, lam, alpha):
    """One full-activation step on the scalar instance with
    ``A = |.|``, ``C = Id``, ``Q = R = 0``, ``B = (0, Id, 0)``, ``D = (0, Id, 0)``,
    ``L = 1``, ``s = r = 0``.  Plain-float transcription of the update blocks.
    """
    def soft(t, g):
        return (1.0 if t > 0 else -1.0) * max(abs(t) - g, 0.0)

    l = v
    a = soft(x + gamma * (0.0 - l - x), gamma)
    astar = (x - a) / gamma - l
    xi = (a - x) ** 2
    u = v
    w = v
    b = y + mu * (u - y)
    d = z + nu * (w - z)
    estar = sig * (x - y - z - 0.0) + v
    qstar = (y - b) / mu + u - estar
    tstar = (z - d) / nu + w - estar
    eta = (b - y) ** 2 + (d - z) ** 2
    e = 0.0 + b + d - a
    pstar = astar + estar
    delta = -(xi + eta) / (4 * alpha) + (x - a) * pstar + (y - b) * qstar + (z - d) * tstar + e * (v - estar)
    denom = pstar ** 2 + qstar ** 2 + tstar ** 2 + e ** 2
    theta = delta / denom if delta > 0 else 0.0
    s = lam * theta
    return (x - s * pstar, y - s * qstar, z - s * tstar, v - s * e), delta


def scripted_kt_step(x, v, gamma, mu, lam):
    """One full-activation step for ``A = |.|``, ``B(u) = u - 1``, ``L = 1``."""
    def soft(t, g):
        return (1.0 if t > 0 else -1.0) * max(abs(t) - g, 0.0)

    a = soft(x - gamma * v, gamma)
    astar = (x - a) / gamma - v
    l = x
    b = (l + mu * v + mu) / (1 + mu)
    bstar = v + (l - b) / mu
    tstar = astar + bstar
    t = b - a
    delta = x * tstar - a * astar + t * v - b * bstar
    denom = tstar ** 2 + t ** 2
    theta = delta / denom if delta > 0 else 0.0
    return (x - lam * theta * tstar, v - lam * theta * t), delta


def kt_point_by_scan():
    """Scalar Kuhn-Tucker point for ``A = |.|``, ``B(u) = u - 1``, ``L = 1``.

    The dual row forces ``v = x - 1``; the primal row needs ``-v`` in the
    subdifferential of ``|.|`` at ``x``.  Scan ``x`` for the smallest
    distance from ``-v`` to that subdifferential.
    """
    xs = np.linspace(-3, 3, 60001)
    v = xs - 1.0
    lo = np.where(xs > 0, 1.0, -1.0)
    hi = np.where(xs < 0, -1.0, 1.0)
    dist = np.maximum(lo - (-v), 0) + np.maximum(-v - hi, 0)
    k = int(np.argmin(dist))
    return float(xs[k]), float(v[k])


def scalar_min_objective(x):
    """``|x| + (x-3)^2/2 + ((psi) inf-conv (box indicator))(x)`` with ``psi(u) = (u+1)^2/2``, box ``[-1/2, 1/2]``."""
    x = np.asarray(x, dtype=float)
    d = np.maximum(np.abs(x + 1.0) - 0.5, 0.0)
    return np.abs(x) + 0.5 * (x - 3.0) ** 2 + 0.5 * d * d


def two_block_objective(x1, x2):
    """Two-block instance: ``|x1| + |x2|/2 + (x1-3)^2/2 + (x2+2)^2/2``
    plus ``dist(x1 + x2 + 1, [-1/2, 1/2])^2 / 2`` plus the Huber function of ``x1 - x2``.
    """
    u = x1 + x2 + 1.0
    d = np.maximum(np.abs(u) - 0.5, 0.0)
    w = x1 - x2
    hub = np.where(np.abs(w) <= 1.0, 0.5 * w * w, np.abs(w) - 0.5)
    return np.abs(x1) + 0.5 * np.abs(x2) + 0.5 * (x1 - 3.0) ** 2 + 0.5 * (x2 + 2.0) ** 2 + 0.5 * d * d + hub


def scalar_min_minimizer() -> float:
    return grid_argmin_1d(scalar_min_objective, 0.0, 10.0, step=1e-9)


def two_block_minimizer() -> np.ndarray:
    return grid_argmin_2d(two_block_objective, [0.0, 0.0], 10.0, step=1e-9)
