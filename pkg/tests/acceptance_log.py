"""Collects one verdict line per acceptance criterion for the terminal summary."""
import time
from contextlib import contextmanager

LINES: list[str] = []


@contextmanager
def criterion(number: int, title: str, budget_s: float | None = None):
    """Record ``PASS``/``FAIL`` for a criterion; the body may append details to the yielded list."""
    details: list[str] = []
    t0 = time.perf_counter()
    try:
        yield details
        elapsed = time.perf_counter() - t0
        if budget_s is not None:
            details.append(f"{elapsed:.1f}s of {budget_s:.0f}s budget")
            assert elapsed < budget_s, f"runtime {elapsed:.1f}s exceeds {budget_s}s"
    except BaseException as exc:
        _emit("FAIL", number, title, details + [f"{type(exc).__name__}: {exc}".splitlines()[0]])
        raise
    _emit("PASS", number, title, details)


def _emit(verdict, number, title, details):
    line = f"criterion {number:2d} {verdict}: {title}"
    if details:
        line += " | " + "; ".join(details)
    LINES.append(line)
    print(line)
