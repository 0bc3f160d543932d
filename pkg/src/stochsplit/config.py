"""Run configuration: JSON schema, validation, and construction of problem objects.

Top-level keys of a run document

    algorithm      "ppa" | "saddle" | "kt" | "engine-custom"
    n_iter         positive int
    seeds          {"count": int, "base": int} or a list of ints
    problem        algorithm-specific table (see README)
    steps          step-size table (saddle, kt, engine-custom)
    blocks         {"primal": sampler, "dual": sampler}
    relaxation     {"kind": "constant"|"uniform"|"two-point", ...}
    errors         resolvent error schedule (ppa only)
    gamma          proximal parameter rule (ppa only)
    rho            relaxation upper bound, >= 2 (default 2)
    reference      "constructed" | "none" | {"point": [...]} | {"file": path}
    residual_every int >= 0 (default 1)

Errors are collected as ``ConfigIssue`` entries addressed by key path and,
when the source text is available, by line.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import operators as ops
from .errors import LayoutError, ParameterError, SplittingError, UnsupportedError
from .kt import KTProblem, KTStepSizes, constructed_kt_point, validate_kt_steps
from .ppa import ErrorRule, GammaRule, PpaConfig, validate_regime
from .saddle import (
    MinProblem,
    SaddleProblem,
    StepRule,
    StepSizes,
    build_min_problem,
    constructed_zero,
    validate_step_sizes,
)
from .sampling import BlockSampler, RelaxationSampler, relaxation_violations

ALGORITHMS = ("ppa", "saddle", "kt", "engine-custom")
TOP_KEYS = {"algorithm", "n_iter", "seeds", "problem", "steps", "blocks", "relaxation", "errors",
            "gamma", "rho", "reference", "residual_every"}


@dataclass
class ConfigIssue:
    path: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.path}: {self.message}"

    def to_dict(self):
        return {"path": self.path, "line": self.line, "message": self.message}


class ConfigError(SplittingError, ValueError):
    def __init__(self, issues: list[ConfigIssue]):
        self.issues = issues
        super().__init__("; ".join(map(str, issues)))


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    n_iter: int
    seeds: tuple[int, ...]
    problem: dict
    steps: dict = field(default_factory=dict)
    blocks: dict = field(default_factory=dict)
    relaxation: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    errors: dict = field(default_factory=lambda: {"kind": "zero"})
    gamma: dict = field(default_factory=lambda: {"kind": "constant", "scale": 1.0})
    rho: float = 2.0
    reference: Any = "none"
    residual_every: int = 1

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm, "n_iter": self.n_iter, "seeds": list(self.seeds),
            "problem": self.problem, "steps": self.steps, "blocks": self.blocks,
            "relaxation": self.relaxation, "errors": self.errors, "gamma": self.gamma,
            "rho": self.rho, "reference": self.reference, "residual_every": self.residual_every,
        }

    def fingerprint(self) -> str:
        """Hash of everything but the seed list."""
        d = self.to_dict()
        d.pop("seeds")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


# -- parsing -------------------------------------------------------------------


def _locate(text: str | None, path: str) -> int | None:
    """Best-effort line of the last key named in ``path``."""
    if not text:
        return None
    key = path.split(".")[-1].split("[")[0]
    if not key:
        return None
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return None


def load_document(path) -> tuple[dict, str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([ConfigIssue("<document>", exc.msg, exc.lineno)]) from None
    if not isinstance(doc, dict):
        raise ConfigError([ConfigIssue("<document>", "top level must be a table", 1)])
    return doc, text


def expand_seeds(spec) -> tuple[int, ...]:
    if isinstance(spec, dict):
        count, base = spec.get("count", 1), spec.get("base", 0)
        if not isinstance(count, int) or count < 1:
            raise ValueError("seeds.count must be a positive integer")
        return tuple(int(base) + j for j in range(count))
    if isinstance(spec, (list, tuple)) and spec and all(isinstance(s, int) for s in spec):
        return tuple(int(s) for s in spec)
    if isinstance(spec, int):
        return (spec,)
    raise ValueError("seeds must be {count, base} or a nonempty list of integers")


def parse_seeds_flag(flag: str, base: int = 0) -> tuple[int, ...]:
    """``--seeds`` accepts a count ``N`` or a comma-separated list."""
    if "," in flag:
        return tuple(int(s) for s in flag.split(",") if s.strip())
    return tuple(base + j for j in range(int(flag)))


def parse_config(doc: dict, text: str | None = None) -> RunConfig:
    issues = []

    def bad(path, msg):
        issues.append(ConfigIssue(path, msg, _locate(text, path)))

    for key in sorted(set(doc) - TOP_KEYS):
        bad(key, "unknown key")
    algo = doc.get("algorithm")
    if algo not in ALGORITHMS:
        bad("algorithm", f"must be one of {ALGORITHMS}, got {algo!r}")
    n_iter = doc.get("n_iter")
    if not isinstance(n_iter, int) or n_iter < 1:
        bad("n_iter", "must be a positive integer")
    try:
        seeds = expand_seeds(doc.get("seeds", {"count": 1, "base": 0}))
    except ValueError as exc:
        bad("seeds", str(exc))
        seeds = ()
    if not isinstance(doc.get("problem"), dict):
        bad("problem", "missing or not a table")
    rho = doc.get("rho", 2.0)
    if not isinstance(rho, (int, float)) or rho < 2:
        bad("rho", "must be a number >= 2")
    rev = doc.get("residual_every", 1)
    if not isinstance(rev, int) or rev < 0:
        bad("residual_every", "must be a nonnegative integer")
    if issues:
        raise ConfigError(issues)
    cfg = RunConfig(
        algorithm=algo, n_iter=n_iter, seeds=seeds, problem=doc["problem"],
        steps=doc.get("steps", {}), blocks=doc.get("blocks", {}),
        relaxation=doc.get("relaxation", {"kind": "constant", "value": 1.0}),
        errors=doc.get("errors", {"kind": "zero"}),
        gamma=doc.get("gamma", {"kind": "constant", "scale": 1.0}),
        rho=float(rho), reference=doc.get("reference", "none"), residual_every=rev,
    )
    return cfg


# -- catalog builders ----------------------------------------------------------


def _arr(v, path):
    try:
        return np.atleast_1d(np.asarray(v, dtype=float))
    except (TypeError, ValueError):
        raise ParameterError(f"{path}: expected a number or a list of numbers") from None


def build_operator(spec: dict, path: str = "op") -> ops.MaxMonotoneOp:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParameterError(f"{path}: operator entry needs a 'kind'")
    kind = spec["kind"]
    if kind == "zero":
        return ops.ZeroOperator(spec.get("dim", 1))
    if kind == "l1":
        return ops.L1Norm(spec.get("dim", 1), spec.get("weight", 1.0))
    if kind == "quadratic":
        return ops.WeightedQuadratic(_arr(spec["q"], path + ".q"),
                                     None if "center" not in spec else _arr(spec["center"], path + ".center"))
    if kind == "box":
        return ops.BoxIndicator(_arr(spec["lo"], path + ".lo"), _arr(spec["hi"], path + ".hi"), spec.get("dim"))
    if kind == "affine":
        return ops.AffineMonotone(spec["matrix"], spec.get("offset"))
    if kind == "rotation":
        return ops.rotation(float(spec["angle"]), spec.get("offset"))
    if kind == "shifted":
        return ops.Shifted(build_operator(spec["base"], path + ".base"), _arr(spec["u"], path + ".u"))
    if kind == "translated":
        return ops.Translated(build_operator(spec["base"], path + ".base"), _arr(spec["c"], path + ".c"))
    if kind == "inverse":
        return ops.Inverse(build_operator(spec["base"], path + ".base"))
    raise UnsupportedError(f"{path}: unknown operator kind {kind!r}")


def build_cocoercive(spec, path: str = "op") -> ops.CocoerciveOp:
    kind = spec.get("kind")
    if kind == "zero":
        return ops.cocoercive_zero(spec.get("dim", 1))
    if kind == "identity":
        return ops.identity(spec.get("dim", 1))
    if kind == "quadratic_gradient":
        return ops.quadratic_gradient(_arr(spec["q"], path + ".q"),
                                      None if "center" not in spec else _arr(spec["center"], path + ".center"))
    raise UnsupportedError(f"{path}: unknown cocoercive kind {kind!r}")


def build_lipschitz(spec, path: str = "op") -> ops.LipschitzMonotoneOp:
    kind = spec.get("kind")
    if kind == "zero":
        return ops.lipschitz_zero(spec.get("dim", 1))
    if kind == "linear":
        return ops.linear_monotone(spec["matrix"])
    if kind == "rotation":
        return ops.rotation_operator(float(spec["angle"]))
    raise UnsupportedError(f"{path}: unknown Lipschitz kind {kind!r}")


def build_linear(spec, shape, path) -> ops.LinearMap | None:
    if spec is None or spec == 0:
        return None
    if spec == "identity":
        if shape[0] != shape[1]:
            raise ParameterError(f"{path}: identity needs equal dimensions")
        return ops.LinearMap.identity(shape[0])
    if isinstance(spec, (int, float)):
        if shape != (1, 1):
            raise ParameterError(f"{path}: scalar entries only fit 1x1 blocks")
        return ops.LinearMap([[float(spec)]])
    m = ops.LinearMap(spec)
    if m.shape != tuple(shape):
        raise ParameterError(f"{path}: matrix has shape {m.shape}, expected {tuple(shape)}")
    return m


def _table(p, key, count, builder, path, default=None):
    entries = p.get(key)
    if entries is None:
        return default
    if not isinstance(entries, list) or len(entries) != count:
        raise ParameterError(f"{path}.{key}: expected a list of {count} entries")
    return [builder(e, f"{path}.{key}[{j}]") for j, e in enumerate(entries)]


def _dims(p, key, path):
    dims = p.get(key)
    if not (isinstance(dims, list) and dims and all(isinstance(d, int) and d > 0 for d in dims)):
        raise ParameterError(f"{path}.{key}: expected a nonempty list of positive integers")
    return tuple(dims)


def _linear_table(p, h_dims, g_dims, path):
    raw = p.get("L")
    if raw is None:
        raise ParameterError(f"{path}.L: missing coupling table")
    if not isinstance(raw, list) or len(raw) != len(g_dims) or any(
            not isinstance(row, list) or len(row) != len(h_dims) for row in raw):
        raise ParameterError(f"{path}.L: expected a {len(g_dims)} x {len(h_dims)} table")
    return [[build_linear(raw[k][i], (g_dims[k], h_dims[i]), f"{path}.L[{k}][{i}]")
             for i in range(len(h_dims))] for k in range(len(g_dims))]


def build_saddle_problem(p: dict, path: str = "problem") -> SaddleProblem:
    if "min" in p:
        return build_min_problem(build_min_spec(p["min"], path + ".min"))
    h, g = _dims(p, "h_dims", path), _dims(p, "g_dims", path)
    parts = {}
    for key, count, builder in (("A", len(h), build_operator), ("C", len(h), build_cocoercive),
                                ("Q", len(h), build_lipschitz), ("Bm", len(g), build_operator),
                                ("Bc", len(g), build_cocoercive), ("Bl", len(g), build_lipschitz),
                                ("Dm", len(g), build_operator), ("Dc", len(g), build_cocoercive),
                                ("Dl", len(g), build_lipschitz)):
        val = _table(p, key, count, builder, path)
        if val is not None:
            parts[key] = val
    for key, count in (("s", len(h)), ("r", len(g))):
        val = _table(p, key, count, _arr, path)
        if val is not None:
            parts[key] = val
    if p.get("R") is not None:
        parts["R"] = build_lipschitz(p["R"], path + ".R")
    parts["L"] = _linear_table(p, h, g, path)
    return SaddleProblem.build(h, g, **parts)


def build_min_spec(p: dict, path: str) -> MinProblem:
    h, g = _dims(p, "h_dims", path), _dims(p, "g_dims", path)

    def fill(key, count, builder, zero):
        val = _table(p, key, count, builder, path)
        return val if val is not None else [zero(d) for d in (h if count == len(h) else g)]

    return MinProblem(
        h, g,
        f=fill("f", len(h), build_operator, ops.ZeroOperator),
        phi=fill("phi", len(h), build_cocoercive, ops.cocoercive_zero),
        g=fill("g", len(g), build_operator, ops.ZeroOperator),
        psi=fill("psi", len(g), build_cocoercive, ops.cocoercive_zero),
        h=fill("h", len(g), build_operator, ops.ZeroOperator),
        L=_linear_table(p, h, g, path),
        theta=None if p.get("theta") is None else build_lipschitz(p["theta"], path + ".theta"),
    )


def build_kt_problem(p: dict, path: str = "problem") -> KTProblem:
    h, g = _dims(p, "h_dims", path), _dims(p, "g_dims", path)
    A = _table(p, "A", len(h), build_operator, path) or [ops.ZeroOperator(d) for d in h]
    B = _table(p, "B", len(g), build_operator, path) or [ops.ZeroOperator(d) for d in g]
    return KTProblem(h, g, A, B, _linear_table(p, h, g, path))


def _rule(spec, count, path) -> StepRule:
    if isinstance(spec, (int, float)):
        return StepRule.constant(float(spec), count)
    if isinstance(spec, list) and spec and all(isinstance(v, (int, float)) for v in spec):
        if len(spec) != count:
            raise ParameterError(f"{path}: expected {count} per-index values")
        return StepRule.cycle([spec])
    if isinstance(spec, list) and spec and all(isinstance(r, list) for r in spec):
        if any(len(r) != count for r in spec):
            raise ParameterError(f"{path}: every cycle row needs {count} values")
        return StepRule.cycle(spec)
    raise ParameterError(f"{path}: expected a number, a per-index list, or a list of rows")


def build_saddle_steps(steps: dict, p: SaddleProblem, path="steps") -> StepSizes:
    for key in ("sigma", "epsilon", "gamma", "mu", "nu", "sigma_k"):
        if key not in steps:
            raise ParameterError(f"{path}.{key}: missing")
    return StepSizes(
        float(steps["sigma"]), float(steps["epsilon"]),
        _rule(steps["gamma"], p.n_i, path + ".gamma"), _rule(steps["mu"], p.n_k, path + ".mu"),
        _rule(steps["nu"], p.n_k, path + ".nu"), _rule(steps["sigma_k"], p.n_k, path + ".sigma_k"),
    )


def build_kt_steps(steps: dict, p: KTProblem, path="steps") -> KTStepSizes:
    for key in ("epsilon", "gamma", "mu"):
        if key not in steps:
            raise ParameterError(f"{path}.{key}: missing")
    return KTStepSizes(float(steps["epsilon"]), _rule(steps["gamma"], p.n_i, path + ".gamma"),
                       _rule(steps["mu"], p.n_k, path + ".mu"))


def build_relaxation(spec: dict, path="relaxation") -> RelaxationSampler:
    kind = spec.get("kind")
    if kind == "constant":
        return RelaxationSampler.constant(spec["value"])
    if kind == "uniform":
        return RelaxationSampler.uniform(spec["low"], spec["high"])
    if kind == "two-point":
        return RelaxationSampler.two_point(spec["atoms"], spec["probs"])
    raise ParameterError(f"{path}.kind: unknown relaxation kind {kind!r}")


def build_sampler(spec: dict | None, count: int, path) -> BlockSampler:
    spec = spec or {"kind": "full"}
    probs = spec.get("probs")
    if isinstance(probs, (int, float)):
        probs = [float(probs)] * count
    return BlockSampler(spec.get("kind", "full"), count, None if probs is None else tuple(probs),
                        spec.get("window", 1))


def _start(p, key, dims, path):
    val = p.get(key)
    if val is None:
        return None
    if not isinstance(val, list) or len(val) != len(dims):
        raise ParameterError(f"{path}.{key}: expected {len(dims)} blocks")
    out = [_arr(b, f"{path}.{key}[{j}]") for j, b in enumerate(val)]
    for j, (b, d) in enumerate(zip(out, dims)):
        if b.size != d:
            raise ParameterError(f"{path}.{key}[{j}]: expected dimension {d}")
    return out


@dataclass
class Built:
    """Everything a run needs, constructed from a validated :class:`RunConfig`."""

    algorithm: str
    problem: Any
    steps: Any
    samplers: tuple | None
    relax: RelaxationSampler
    start: Any
    reference: np.ndarray | None
    ppa: PpaConfig | None = None
    alpha: float | None = None
    regime: str | None = None
    notes: list = field(default_factory=list)


def _reference_point(cfg: RunConfig, base_dir):
    ref = cfg.reference
    if isinstance(ref, dict) and "point" in ref:
        return _arr(ref["point"], "reference.point")
    if isinstance(ref, dict) and "file" in ref:
        fp = Path(ref["file"])
        if not fp.is_absolute() and base_dir is not None:
            fp = Path(base_dir) / fp
        return _arr(json.loads(fp.read_text()), "reference.file")
    if ref in ("none", None, "constructed"):
        return None
    raise ParameterError("reference: expected 'constructed', 'none', {'point': [...]}, or {'file': path}")


def build(cfg: RunConfig, base_dir=None) -> Built:
    """Construct problem objects and run every validator; raise :class:`ConfigError` on failure."""
    issues: list[ConfigIssue] = []
    try:
        built = _build(cfg, base_dir, issues)
    except (ParameterError, UnsupportedError, LayoutError, KeyError, TypeError, ValueError) as exc:
        msg = str(exc)
        if isinstance(exc, KeyError):
            msg = f"missing key {exc}"
        path = msg.split(":", 1)[0] if ":" in msg and " " not in msg.split(":", 1)[0] else "problem"
        issues.append(ConfigIssue(path, msg))
        built = None
    if issues:
        raise ConfigError(issues)
    return built


def _build(cfg: RunConfig, base_dir, issues) -> Built:
    relax = build_relaxation(cfg.relaxation)
    ref = _reference_point(cfg, base_dir)
    p = cfg.problem
    if cfg.algorithm == "ppa":
        op = build_operator(p.get("operator"), "problem.operator")
        g = cfg.gamma
        gamma = GammaRule(g.get("kind", "constant"), float(g.get("scale", 1.0)), float(g.get("power", 0.0)))
        e = cfg.errors
        errors = ErrorRule(e.get("kind", "zero"), float(e.get("scale", 0.0)), float(e.get("ratio", 0.5)),
                           None if e.get("direction") is None else tuple(e["direction"]))
        lo, hi = relax.support
        if not (0 < lo and hi < 2):
            issues.append(ConfigIssue("relaxation", f"proximal point relaxations must lie in (0, 2), "
                                                     f"support is [{lo}, {hi}]"))
            return None
        bad = relaxation_violations(relax, rho=2.0)
        issues.extend(ConfigIssue("relaxation", m) for m in bad)
        ppa = PpaConfig(op, gamma, errors, relax)
        x0 = _arr(p.get("x0", np.zeros(op.dim)), "problem.x0")
        if cfg.reference == "constructed":
            ref = op.known_zero()
            if ref is None:
                issues.append(ConfigIssue("reference", f"no known zero for {op.kind}"))
        regime = validate_regime(ppa)
        if regime == "none":
            issues.append(ConfigIssue("gamma", "no convergence regime matches the gamma, error and "
                                               "relaxation rules"))
        return Built("ppa", op, None, None, relax, x0, ref, ppa=ppa, regime=regime)

    if cfg.algorithm == "engine-custom":
        W = build_operator(p.get("W"), "problem.W")
        C = build_cocoercive(p.get("C", {"kind": "zero", "dim": W.dim}), "problem.C")
        gamma = float(cfg.steps.get("gamma", 1.0))
        if not np.isinf(C.alpha) and not 0 < gamma < 4 * C.alpha:
            issues.append(ConfigIssue("steps.gamma", f"gamma must lie in (0, 4*alpha) = (0, {4 * C.alpha:.6g})"))
        issues.extend(ConfigIssue("relaxation", m) for m in relaxation_violations(relax, rho=cfg.rho))
        x0 = _arr(p.get("x0", np.zeros(W.dim)), "problem.x0")
        if cfg.reference == "constructed":
            issues.append(ConfigIssue("reference", "engine-custom runs take an explicit reference point"))
        return Built("engine-custom", (W, C), gamma, None, relax, x0, ref, alpha=C.alpha)

    if cfg.algorithm == "saddle":
        prob = build_saddle_problem(p)
        steps = build_saddle_steps(cfg.steps, prob)
        rep = validate_step_sizes(prob, steps)
        issues.extend(ConfigIssue("steps", m) for m in rep.violations)
        issues.extend(ConfigIssue("relaxation", m) for m in
                      relaxation_violations(relax, rho=cfg.rho, lower=steps.epsilon, strict_moment=True))
        samplers = (build_sampler(cfg.blocks.get("primal"), prob.n_i, "blocks.primal"),
                    build_sampler(cfg.blocks.get("dual"), prob.n_k, "blocks.dual"))
        start = (_start(p, "x0", prob.h_dims, "problem"), _start(p, "y0", prob.g_dims, "problem"),
                 _start(p, "z0", prob.g_dims, "problem"), _start(p, "v0", prob.g_dims, "problem"))
        notes = []
        if cfg.reference == "constructed":
            rseed = int(p.get("reference_seed", 0))
            prob, point = constructed_zero(prob, np.random.default_rng(rseed))
            ref = prob.pack(*point)
            notes.append("offsets s and r replaced by the constructed zero")
        if cfg.rho > 2 and any(s.kind != "full" for s in samplers):
            notes.append("super-relaxation with random blocks is experimental")
        return Built("saddle", prob, steps, samplers, relax, start, ref, alpha=prob.alpha, notes=notes)

    prob = build_kt_problem(p)
    steps = build_kt_steps(cfg.steps, prob)
    issues.extend(ConfigIssue("steps", m) for m in validate_kt_steps(prob, steps).violations)
    issues.extend(ConfigIssue("relaxation", m) for m in
                  relaxation_violations(relax, rho=cfg.rho, lower=steps.epsilon, strict_moment=True))
    samplers = (build_sampler(cfg.blocks.get("primal"), prob.n_i, "blocks.primal"),
                build_sampler(cfg.blocks.get("dual"), prob.n_k, "blocks.dual"))
    start = (_start(p, "x0", prob.h_dims, "problem"), _start(p, "v0", prob.g_dims, "problem"))
    if cfg.reference == "constructed":
        prob, point = constructed_kt_point(prob, np.random.default_rng(int(p.get("reference_seed", 0))))
        ref = prob.pack(*point)
    return Built("kt", prob, steps, samplers, relax, start, ref)


def operator_property_report(built: Built, rng: np.random.Generator, n_pairs: int = 50,
                             tol: float = 1e-10) -> list[str]:
    """Sampled property checks of every catalog operator in the built problem."""
    found = []
    prob = built.problem
    if built.algorithm == "ppa":
        found.append(("operator", prob))
    elif built.algorithm == "engine-custom":
        found += [("W", prob[0]), ("C", prob[1])]
    elif built.algorithm == "saddle":
        for key in ("A", "C", "Q", "Bm", "Bc", "Bl", "Dm", "Dc", "Dl"):
            found += [(f"{key}[{j}]", op) for j, op in enumerate(getattr(prob, key))]
        if prob.R is not None:
            found.append(("R", prob.R))
    else:
        found += [(f"A[{j}]", op) for j, op in enumerate(prob.A)]
        found += [(f"B[{j}]", op) for j, op in enumerate(prob.B)]
    out = []
    for name, op in found:
        worst = float(np.max(ops.sample_pair_residuals(op, rng, n_pairs)))
        if worst > tol:
            out.append(f"{name}: declared properties fail on sampled pairs (worst residual {worst:.3e})")
    return out
