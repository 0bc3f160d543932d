import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochsplit import operators as O
from stochsplit.engine import EngineConfig, run
from stochsplit.errors import ParameterError
from stochsplit.ppa import ErrorRule, GammaRule, PpaConfig, ppa_step, ppa_supplier, run_ppa, validate_regime
from stochsplit.sampling import RelaxationSampler
from oracles import soft_threshold_recursion


def test_ppa_step_examples():
    A = O.L1Norm()
    assert ppa_step(A, 5.0, 1.0, 0.0, 1.0)[0] == 4.0
    assert ppa_step(A, 0.5, 1.0, 0.0, 1.0)[0] == 0.0
    for lam in (0.3, 1.0, 1.9):
        assert ppa_step(A, 0.0, 2.0, 0.0, lam)[0] == 0.0
    assert ppa_step(A, 5.0, 1.0, 0.5, 1.5)[0] == pytest.approx(2.75, abs=1e-15)


@pytest.mark.parametrize("gamma,lam", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, 2.0)])
def test_ppa_step_parameter_errors(gamma, lam):
    with pytest.raises(ParameterError):
        ppa_step(O.L1Norm(), 1.0, gamma, 0.0, lam)


def test_relaxation_support_must_stay_below_two():
    with pytest.raises(ParameterError):
        PpaConfig(O.L1Norm(), relax=RelaxationSampler.uniform(0.5, 2.0))


def test_regime_classification():
    assert validate_regime(PpaConfig(O.L1Norm())) == "i"
    two_point = RelaxationSampler.two_point([0.5, 1.8], [0.5, 0.5])
    cfg = PpaConfig(O.L1Norm(), GammaRule("constant", 0.5),
                    ErrorRule("geometric", 1.0, 0.5), two_point)
    assert two_point.moment() > 0
    assert validate_regime(cfg) == "ii"
    cfg = PpaConfig(O.L1Norm(), GammaRule("power", 1.0, 0.5))
    assert validate_regime(cfg) == "iii"
    cfg = PpaConfig(O.L1Norm(), GammaRule("power", 1.0, 1.0))
    assert validate_regime(cfg) == "none"
    cfg = PpaConfig(O.L1Norm(), GammaRule("power", 1.0, 0.75), relax=RelaxationSampler.constant(1.5))
    assert validate_regime(cfg) == "none"


def test_exact_soft_threshold_trajectory():
    x, tr = run_ppa(PpaConfig(O.L1Norm()), [5.0], 12)
    expected = soft_threshold_recursion(5.0, 12)
    assert expected[:7] == [5.0, 4.0, 3.0, 2.0, 1.0, 0.0, 0.0]
    np.testing.assert_allclose([float(v[0]) for v in tr.iterates], expected, atol=1e-12, rtol=0)


def test_start_at_zero_is_constant():
    cfg = PpaConfig(O.L1Norm(), GammaRule("constant", 0.5), relax=RelaxationSampler.uniform(0.2, 1.8))
    _, tr = run_ppa(cfg, [0.0], 30, seed=5)
    assert all(v[0] == 0.0 for v in tr.iterates)


def test_geometric_quadratic_recursion():
    _, tr = run_ppa(PpaConfig(O.WeightedQuadratic([1.0])), [3.0], 20)
    np.testing.assert_allclose([v[0] for v in tr.iterates], 3.0 * 0.5 ** np.arange(21), rtol=1e-12, atol=0)


@given(st.integers(0, 2**31), st.floats(0.1, 3.0), st.floats(0.05, 1.95), st.floats(0.05, 1.95))
def test_engine_equivalence_zero_errors(seed, gamma, lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    rng = np.random.default_rng(seed)
    op = O.L1Norm(3, float(rng.uniform(0.1, 2)))
    cfg = PpaConfig(op, GammaRule("constant", gamma), relax=RelaxationSampler.uniform(lo, hi))
    x0 = 5 * rng.standard_normal(3)
    x, tr = run_ppa(cfg, x0, 40, seed, audit=True)
    assert tr.meta["engine_gap"] <= 1e-12
    xs = [x0]
    run(x0, ppa_supplier(cfg), cfg.relax, EngineConfig(alpha=np.inf, zero_tol=0.0), 40, seed,
        on_step=lambda n, xe, r, s: xs.append(xe.copy()))
    for a, b in zip(tr.iterates, xs):
        assert np.linalg.norm(a - b) <= 1e-12 * max(1.0, np.linalg.norm(a))


def test_engine_equivalence_with_errors():
    cfg = PpaConfig(O.L1Norm(2), GammaRule("constant", 0.7), ErrorRule("gaussian", 0.5, 0.9),
                    RelaxationSampler.uniform(0.3, 1.7))
    x0 = np.array([3.0, -2.0])
    _, tr = run_ppa(cfg, x0, 50, 9, audit=True)
    xs = [x0]
    run(x0, ppa_supplier(cfg), cfg.relax, EngineConfig(alpha=np.inf, zero_tol=0.0), 50, 9,
        on_step=lambda n, xe, r, s: xs.append(xe.copy()))
    assert tr.meta["engine_gap"] <= 1e-12
    np.testing.assert_allclose(np.array(tr.iterates), np.array(xs), atol=1e-12, rtol=0)


@given(st.integers(0, 2**31), st.floats(-20, 20))
def test_regime_one_residual_non_increasing(seed, x0):
    cfg = PpaConfig(O.L1Norm(1, 0.7), relax=RelaxationSampler.uniform(0.1, 1.9))
    _, tr = run_ppa(cfg, [x0], 60, seed)
    r = tr.series("residual")
    assert np.all(np.diff(r) <= 1e-12)


def test_error_robustness_regime_two():
    c = 0.5
    op = O.WeightedQuadratic([1.0, 0.5], [0.0, 0.0])
    relax = RelaxationSampler.uniform(0.5, 1.5)
    base = PpaConfig(op, GammaRule("constant", 0.5), relax=relax)
    noisy = PpaConfig(op, GammaRule("constant", 0.5), ErrorRule("geometric", c, 0.5), relax)
    assert validate_regime(noisy) == "ii"
    x0 = np.array([4.0, -3.0])
    d0 = [np.linalg.norm(run_ppa(base, x0, 300, s, keep_iterates=False)[0]) for s in range(200)]
    d1 = [np.linalg.norm(run_ppa(noisy, x0, 300, s, keep_iterates=False)[0]) for s in range(200)]
    assert np.mean(d1) < np.mean(d0) + 4 * c


def test_error_rules():
    rng = np.random.default_rng(0)
    assert ErrorRule().sample(3, 2, rng).tolist() == [0.0, 0.0]
    e = ErrorRule("geometric", 2.0, 0.5, (3.0, 4.0)).sample(2, 2, rng)
    np.testing.assert_allclose(e, [0.3, 0.4])
    with pytest.raises(ParameterError):
        ErrorRule("geometric", 1.0, 1.0)
    with pytest.raises(ParameterError):
        GammaRule("power", 1.0, -1.0)
