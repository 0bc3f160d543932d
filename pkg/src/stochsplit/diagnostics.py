"""Fejer monitors and seed-ensemble statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Trace
from .errors import ParameterError


def distance_series(trace: Trace, z_ref=None) -> np.ndarray:
    """``|x_n - z|`` for n = 0..N from stored iterates, else the recorded ``dist_to_ref``."""
    if z_ref is not None and trace.iterates is not None:
        z = np.atleast_1d(np.asarray(z_ref, dtype=float))
        return np.array([np.linalg.norm(np.asarray(x) - z) for x in trace.iterates])
    return trace.series("dist_to_ref")


def fejer_check(trace: Trace, z_ref, tol: float = 1e-10) -> list[int]:
    """Iterations n where ``|x_{n+1}-z|^2 <= |x_n-z|^2 - lam(2-lam)|d_n|^2 + tol*max(1,|x_n-z|^2)`` fails.

    Needs the stored iterates; ``|d_n|`` and ``lam`` come from the records.
    """
    if trace.iterates is None:
        raise ParameterError("fejer_check needs a trace with iterates")
    d = distance_series(trace, z_ref) ** 2
    bad = []
    for n, rec in enumerate(trace.records):
        lam = rec.lam
        bound = d[n] - lam * (2.0 - lam) * rec.dnorm ** 2 + tol * max(1.0, d[n])
        if not d[n + 1] <= bound:
            bad.append(n)
    return bad


@dataclass(frozen=True)
class EnsembleSummary:
    n_seeds: int
    fingerprint: str | None
    dist_mean: np.ndarray
    dist_median: np.ndarray
    dist_q10: np.ndarray
    dist_q90: np.ndarray
    sq_mean: np.ndarray
    sq_stderr: np.ndarray
    sq_step_mean: np.ndarray
    sq_step_stderr: np.ndarray
    delta_mean: np.ndarray
    delta_median: np.ndarray
    dnorm_mean: np.ndarray
    dnorm_median: np.ndarray

    def to_dict(self) -> dict:
        out = {"n_seeds": self.n_seeds, "fingerprint": self.fingerprint}
        for k, v in self.__dict__.items():
            if isinstance(v, np.ndarray):
                out[k] = v.tolist()
        return out


def _stderr(a: np.ndarray) -> np.ndarray:
    if a.shape[0] < 2:
        return np.zeros(a.shape[1:])
    return a.std(axis=0, ddof=1) / np.sqrt(a.shape[0])


def summarize(traces: list[Trace], z_ref=None) -> EnsembleSummary:
    """Aggregate seeded traces of one configuration.

    Each per-iteration column is sorted across seeds before reduction,
    so the result does not depend on the order of ``traces``.
    ``sq_step_*`` are statistics of the per-seed increments
    ``|x_{n+1}-z|^2 - |x_n-z|^2``.
    """
    if not traces:
        raise ParameterError("summarize needs at least one trace")
    fps = {t.meta.get("fingerprint") for t in traces}
    if len(fps) > 1:
        raise ParameterError(f"traces come from different configurations: {sorted(map(str, fps))}")
    dist = np.array([distance_series(t, z_ref) for t in traces])
    delta = np.array([t.series("delta") for t in traces])
    dn = np.array([t.series("dnorm") for t in traces])
    dist, delta, dn = (np.sort(a, axis=0) for a in (dist, delta, dn))
    sq = np.sort(dist ** 2, axis=0)
    unsorted_sq = np.array([distance_series(t, z_ref) ** 2 for t in traces])
    steps = np.sort(np.diff(unsorted_sq, axis=1), axis=0)
    return EnsembleSummary(
        n_seeds=len(traces),
        fingerprint=fps.pop(),
        dist_mean=dist.mean(axis=0),
        dist_median=np.median(dist, axis=0),
        dist_q10=np.quantile(dist, 0.1, axis=0),
        dist_q90=np.quantile(dist, 0.9, axis=0),
        sq_mean=sq.mean(axis=0),
        sq_stderr=_stderr(sq),
        sq_step_mean=steps.mean(axis=0),
        sq_step_stderr=_stderr(steps),
        delta_mean=delta.mean(axis=0),
        delta_median=np.median(delta, axis=0),
        dnorm_mean=dn.mean(axis=0),
        dnorm_median=np.median(dn, axis=0),
    )


def mean_increase_violations(summary: EnsembleSummary, k: float = 3.0) -> list[int]:
    """Iterations where the mean squared distance rises by more than ``k`` standard errors.

    Uses the paired per-seed increments, whose spread is the relevant one
    for a within-seed comparison of consecutive iterates.
    """
    m, se = summary.sq_step_mean, summary.sq_step_stderr
    return [int(n) for n in np.flatnonzero(m > k * se + 1e-15 * np.maximum(1.0, summary.sq_mean[:-1]))]
