"""Command-line experiment runner: ``check``, ``run`` and ``sweep``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    ConfigIssue,
    RunConfig,
    build,
    load_document,
    operator_property_report,
    parse_config,
    parse_seeds_flag,
)
from .diagnostics import summarize
from .engine import EngineConfig, Trace, forward_backward_supplier, run
from .errors import NumericalError
from .kt import run_kt
from .ppa import run_ppa
from .saddle import run_saddle
from .sampling import make_streams

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
TRACE_COLUMNS = ("n", "delta", "theta", "lambda", "d_norm", "tstar_norm", "dist_to_ref", "residual",
                 "active_blocks")


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def trace_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace.records:
        w.writerow([r.n, _fmt(r.delta), _fmt(r.theta), _fmt(r.lam), _fmt(r.dnorm), _fmt(r.tstar_norm),
                    _fmt(r.dist_to_ref), _fmt(r.residual), r.active_blocks])
    return buf.getvalue()


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_seed(cfg: RunConfig, seed: int, base_dir=None) -> Trace:
    """One seeded trajectory of a validated configuration."""
    b = build(cfg, base_dir)
    fp = cfg.fingerprint()
    if b.algorithm == "ppa":
        _, tr = run_ppa(b.ppa, b.start, cfg.n_iter, seed, reference=b.reference, keep_iterates=False)
    elif b.algorithm == "engine-custom":
        W, C = b.problem
        supplier = forward_backward_supplier(W, C, b.steps)
        ecfg = EngineConfig(alpha=C.alpha, rho=cfg.rho)
        ref = b.reference

        def residual(x):
            return float(np.linalg.norm(x - W.resolvent(b.steps, x - b.steps * C(x))))

        records = []

        def on_step(n, x, rec, s):
            extra = {}
            if ref is not None:
                extra["dist_to_ref"] = float(np.linalg.norm(x - ref))
            if cfg.residual_every and (n % cfg.residual_every == 0 or n == cfg.n_iter - 1):
                extra["residual"] = residual(x)
            records.append(rec.with_(**extra))

        run(b.start, supplier, b.relax, ecfg, cfg.n_iter, make_streams(seed), on_step)
        tr = Trace(records, None, {"algorithm": "engine-custom", "seed": seed})
    elif b.algorithm == "saddle":
        _, tr = run_saddle(b.problem, b.steps, b.samplers, b.relax, b.start, cfg.n_iter, seed, rho=cfg.rho,
                           residual_every=cfg.residual_every, reference=_unpack_saddle(b))
    else:
        _, tr = run_kt(b.problem, b.steps, b.samplers, b.relax, *b.start, n_iter=cfg.n_iter, seed=seed,
                       rho=cfg.rho, residual_every=cfg.residual_every, reference=_unpack_kt(b))
    tr.meta["fingerprint"] = fp
    return tr


def _unpack_saddle(b):
    return None if b.reference is None else b.problem.unpack(b.reference)


def _unpack_kt(b):
    return None if b.reference is None else b.problem.unpack(b.reference)


def _seed_job(args):
    cfg, seed, out, base_dir = args
    try:
        tr = run_seed(cfg, seed, base_dir)
    except NumericalError as exc:
        return seed, None, f"seed {seed}: {exc} (iteration {exc.iteration}, block {exc.block})"
    atomic_write(Path(out) / f"trace_seed{seed}.csv", trace_csv(tr))
    return seed, tr, None


def _validate(path) -> tuple[RunConfig | None, dict]:
    """Parse and validate; returns the config (or None) and a validation report dict."""
    report = {"config": str(path), "ok": False, "issues": [], "notes": []}
    try:
        doc, text = load_document(path)
        cfg = parse_config(doc, text)
        b = build(cfg, Path(path).parent)
    except ConfigError as exc:
        report["issues"] = [i.to_dict() for i in _relocate(exc.issues, path)]
        return None, report
    except FileNotFoundError as exc:
        report["issues"] = [ConfigIssue("<document>", str(exc)).to_dict()]
        return None, report
    props = operator_property_report(b, np.random.default_rng(12345))
    report["issues"] = [ConfigIssue("problem", m).to_dict() for m in props]
    report["notes"] = list(b.notes)
    report["algorithm"] = cfg.algorithm
    if b.alpha is not None:
        report["alpha"] = b.alpha
    if b.regime is not None:
        report["regime"] = b.regime
    report["ok"] = not props
    return (cfg if not props else None), report


def _relocate(issues, path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        return issues
    from .config import _locate
    return [i if i.line else ConfigIssue(i.path, i.message, _locate(text, i.path)) for i in issues]


def _report_issues(report, quiet, stream=None):
    stream = stream or sys.stderr
    for i in report["issues"]:
        where = f"{report['config']}:{i['line']}: " if i.get("line") else f"{report['config']}: "
        print(f"{where}{i['path']}: {i['message']}", file=stream)
    if not quiet:
        for note in report.get("notes", []):
            print(f"note: {note}", file=stream)


def cmd_check(args) -> int:
    _, report = _validate(args.config)
    if args.out:
        atomic_write(Path(args.out) / "validation.json", json.dumps(report, indent=2, sort_keys=True))
    _report_issues(report, args.quiet)
    if not args.quiet:
        print("ok" if report["ok"] else "invalid")
    return EXIT_OK if report["ok"] else EXIT_INVALID


def _final_stats(traces: list[Trace]) -> dict:
    def last_finite(tr, name):
        s = tr.series(name)
        s = s[np.isfinite(s)]
        return float(s[-1]) if s.size else None

    out = {"n_seeds": len(traces), "n_iter": len(traces[0].records)}
    for name in ("dist_to_ref", "residual"):
        vals = [last_finite(t, name) for t in traces]
        vals = sorted(v for v in vals if v is not None)
        if vals:
            out[f"final_{name}"] = {"mean": float(np.mean(vals)), "median": float(np.median(vals)),
                                    "max": float(max(vals)), "min": float(min(vals))}
    return out


def execute(cfg: RunConfig, out: Path, workers: int = 1, quiet: bool = True, base_dir=None,
            report: dict | None = None) -> tuple[int, dict]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, s, str(out), base_dir) for s in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_seed_job, jobs))
    else:
        results = [_seed_job(j) for j in jobs]
    failures = [msg for _, _, msg in results if msg]
    traces = [tr for _, tr, _ in sorted(results, key=lambda r: r[0]) if tr is not None]
    summary = {"config": cfg.to_dict(), "fingerprint": cfg.fingerprint(), "seeds": list(cfg.seeds),
               "failures": failures}
    if traces:
        summary["final"] = _final_stats(traces)
        if all(np.isfinite(t.series("dist_to_ref")).all() for t in traces):
            ens = summarize(traces)
            summary["final"]["mean_dist_by_iteration_last"] = float(ens.dist_mean[-1])
    if report is not None:
        atomic_write(out / "validation.json", json.dumps(report, indent=2, sort_keys=True))
    atomic_write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True))
    for msg in failures:
        print(f"numerical failure: {msg}", file=sys.stderr)
    if not quiet:
        print(f"wrote {len(traces)} traces to {out}")
    return (EXIT_NUMERICAL if failures else EXIT_OK), summary


def _apply_seeds_flag(cfg: RunConfig, flag):
    if flag is None:
        return cfg
    base = cfg.seeds[0] if cfg.seeds else 0
    return RunConfig(**{**cfg.__dict__, "seeds": parse_seeds_flag(flag, base)})


def cmd_run(args) -> int:
    cfg, report = _validate(args.config)
    if cfg is None:
        _report_issues(report, args.quiet)
        if args.out:
            atomic_write(Path(args.out) / "validation.json", json.dumps(report, indent=2, sort_keys=True))
        return EXIT_INVALID
    cfg = _apply_seeds_flag(cfg, args.seeds)
    out = Path(args.out or "runs/out")
    code, _ = execute(cfg, out, args.workers, args.quiet, Path(args.config).parent, report)
    return code


def _set_path(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = doc
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = value


def cmd_sweep(args) -> int:
    try:
        doc, text = load_document(args.config)
    except ConfigError as exc:
        for i in exc.issues:
            print(f"{args.config}: {i}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    grid = doc.get("grid")
    base = doc.get("base")
    if isinstance(base, str):
        # a path to a run configuration, relative to the sweep document
        try:
            base, _ = load_document(Path(args.config).parent / base)
        except (ConfigError, FileNotFoundError) as exc:
            print(f"{args.config}: base: {exc}", file=sys.stderr)
            return EXIT_INVALID
    if not isinstance(base, dict):
        print(f"{args.config}: base: missing run configuration", file=sys.stderr)
        return EXIT_INVALID
    if not isinstance(grid, dict) or not grid or any(not isinstance(v, list) or not v for v in grid.values()):
        print(f"{args.config}: grid: must declare at least one axis with at least one value", file=sys.stderr)
        return EXIT_INVALID
    axes = sorted(grid)
    out = Path(args.out or "runs/sweep")
    rows, worst = [], EXIT_OK
    base_dir = Path(args.config).parent
    for idx, combo in enumerate(itertools.product(*(grid[a] for a in axes))):
        d = copy.deepcopy(base)
        for axis, value in zip(axes, combo):
            _set_path(d, axis, copy.deepcopy(value))
        run_dir = out / f"run_{idx:03d}"
        row = {"run": run_dir.name, **{a: json.dumps(v, sort_keys=True) for a, v in zip(axes, combo)}}
        try:
            cfg = parse_config(d)
            b = build(cfg, base_dir)
        except ConfigError as exc:
            atomic_write(run_dir / "validation.json",
                         json.dumps({"ok": False, "issues": [i.to_dict() for i in exc.issues]}, indent=2))
            row.update(status="invalid")
            worst = max(worst, EXIT_INVALID)
            rows.append(row)
            continue
        cfg = _apply_seeds_flag(cfg, args.seeds)
        report = {"config": f"{args.config}#{run_dir.name}", "ok": True, "issues": [], "notes": b.notes}
        code, summary = execute(cfg, run_dir, args.workers, True, base_dir, report)
        worst = max(worst, code)
        fin = summary.get("final", {})
        row.update(
            status="ok" if code == EXIT_OK else "numerical",
            final_mean_dist=fin.get("final_dist_to_ref", {}).get("mean", ""),
            final_mean_residual=fin.get("final_residual", {}).get("mean", ""),
            final_max_residual=fin.get("final_residual", {}).get("max", ""),
        )
        rows.append(row)
    cols = ["run", *axes, "status", "final_mean_dist", "final_mean_residual", "final_max_residual"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", restval="")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    atomic_write(out / "comparison.csv", buf.getvalue())
    if not args.quiet:
        print(f"wrote {len(rows)} runs to {out}")
    return worst


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stochsplit", description="Stochastic projective splitting experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("check", cmd_check, "validate a configuration without iterating"),
                               ("run", cmd_run, "run a seed ensemble"),
                               ("sweep", cmd_sweep, "run a grid of configurations")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config_pos", nargs="?", metavar="CONFIG")
        p.add_argument("--config", dest="config_opt", metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--seeds", metavar="N|LIST")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    args.config = args.config_opt or args.config_pos
    if not args.config:
        ap.error("a configuration path is required (--config PATH)")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
