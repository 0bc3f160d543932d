import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochsplit import operators as O
from stochsplit.engine import (
    EngineConfig,
    GraphSample,
    forward_backward_supplier,
    gap,
    realized_error_term,
    relaxed_update,
    run,
    step_size,
)
from stochsplit.errors import LayoutError, NumericalError, ParameterError
from stochsplit.sampling import RelaxationSampler
from stochsplit.spaces import BlockVector, SpaceLayout
from oracles import soft_threshold_recursion


def gs(w, ws, q, cs, **kw):
    return GraphSample(w=w, wstar=ws, q=q, cstar=cs, **kw)


def test_gap_examples():
    assert gap([1.0], gs([1.0], [2.0], [1.0], [0.0]), 1.0) == 0.0
    assert gap([2.0], gs([1.0], [3.0], [1.0], [0.0]), 1.0) == 3.0
    assert gap([0.0], gs([1.0], [1.0], [3.0], [0.0]), 0.5) == -3.0


def test_gap_layout_mismatch():
    with pytest.raises(LayoutError):
        gap([1.0, 2.0], gs([1.0], [1.0], [1.0], [0.0]), 1.0)
    with pytest.raises(LayoutError):
        gs([1.0], [1.0, 2.0], [1.0], [0.0])


def test_step_size_examples():
    assert step_size(-3.0, [5.0]) == 0.0
    assert step_size(4.0, [0.0]) == 0.0
    assert step_size(3.0, [3.0]) == pytest.approx(1 / 3, abs=0, rel=1e-15)
    # below the zero threshold the direction counts as null
    assert step_size(1.0, [1e-13], zero_tol=1e-24) == 0.0


def test_relaxed_update_examples():
    assert relaxed_update([2.0], 0.0, [3.0], 1.0).tolist() == [2.0]
    assert relaxed_update([2.0], 1 / 3, [3.0], 1.0)[0] == pytest.approx(1.0, abs=1e-15)
    assert relaxed_update([2.0], 1 / 3, [3.0], 2.0)[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ParameterError):
        relaxed_update([2.0], 1 / 3, [3.0], 0.0)
    with pytest.raises(ParameterError):
        relaxed_update([2.0], 1 / 3, [3.0], 2.5, rho=2.0)
    v = BlockVector(SpaceLayout((1, 1)), [1.0, 1.0])
    assert isinstance(relaxed_update(v, 0.5, [1.0, 0.0], 1.0), BlockVector)


def test_realized_error_term_examples():
    assert realized_error_term(gs([1.0], [1.0], [1.0], [0.0]), 1.0, [0.0], [0.0]) == 0.0
    s = gs([1.0], [0.0], [1.0], [0.0], estar=[2.0])
    assert realized_error_term(s, 1.0, [0.0], [0.0]) == 2.0
    s = gs([1.0], [-3.0], [1.0], [0.0], e=[1.0])
    assert realized_error_term(s, 0.0, [0.0], [0.0]) == 0.0


def test_engine_config_validation():
    with pytest.raises(ParameterError):
        EngineConfig(alpha=0.0)
    with pytest.raises(ParameterError):
        EngineConfig(alpha=1.0, rho=1.5)
    with pytest.raises(ParameterError):
        EngineConfig(alpha=1.0, zero_tol=-1.0)
    assert EngineConfig(alpha=1.0).threshold([1e6]) == pytest.approx(1e-12)


def test_run_soft_threshold_against_recursion():
    sup = forward_backward_supplier(O.L1Norm(), O.cocoercive_zero(1), 1.0)
    xs = []
    x, recs = run([5.0], sup, RelaxationSampler.constant(1.0), EngineConfig(alpha=np.inf), 10, 0,
                  on_step=lambda n, x, r, s: xs.append(float(x[0])))
    expected = soft_threshold_recursion(5.0, 10)[1:]
    np.testing.assert_allclose(xs, expected, atol=1e-12, rtol=0)
    assert x[0] == 0.0 and len(recs) == 10


def test_run_at_zero_is_stationary():
    W = O.WeightedQuadratic([1.0, 2.0], [0.5, -1.0])
    C = O.quadratic_gradient([1.0, 1.0], [0.5, -1.0])
    sup = forward_backward_supplier(W, C, 1.0)
    x, recs = run([0.5, -1.0], sup, RelaxationSampler.uniform(0.5, 1.5), EngineConfig(alpha=C.alpha), 20, 3)
    assert x.tolist() == [0.5, -1.0]
    assert all(r.delta <= 0 and r.theta == 0 for r in recs)


def test_run_deterministic_per_seed():
    W, C = O.L1Norm(3, 0.4), O.quadratic_gradient([1.0, 2.0, 0.5], [1.0, -2.0, 3.0])
    sup = forward_backward_supplier(W, C, 1.0)
    relax = RelaxationSampler.uniform(0.2, 1.9)
    a = run([4.0, 4.0, -4.0], sup, relax, EngineConfig(C.alpha), 50, 42)
    b = run([4.0, 4.0, -4.0], sup, relax, EngineConfig(C.alpha), 50, 42)
    c = run([4.0, 4.0, -4.0], sup, relax, EngineConfig(C.alpha), 50, 43)
    assert a[1] == b[1] and np.array_equal(a[0], b[0])
    assert a[1] != c[1]


def test_run_reports_non_finite_gap():
    def sup(n, x, rng):
        w = np.array([np.nan]) if n == 3 else x * 0.5
        return GraphSample(w=w, wstar=x - w, q=w, cstar=0 * x)
    with pytest.raises(NumericalError) as err:
        run([1.0], sup, RelaxationSampler.constant(1.0), EngineConfig(np.inf), 10)
    assert err.value.iteration == 3


def _instance(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((3, 3))
    W = O.AffineMonotone(M - M.T + 0.1 * np.eye(3), rng.standard_normal(3))
    C = O.quadratic_gradient(rng.uniform(0.5, 2.0, 3), rng.standard_normal(3))
    # zero of W + C: (A + diag q) z = q c - b
    z = np.linalg.solve(W.matrix + np.diag(C.q), C.q * C.center - W.offset)
    return W, C, z


@given(st.integers(0, 10_000), st.floats(0.1, 3.9))
def test_half_space_contains_zero(seed, gscale):
    W, C, z = _instance(seed)
    gamma = gscale * C.alpha
    sup = forward_backward_supplier(W, C, gamma)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        x = 3 * rng.standard_normal(3)
        s = sup(0, x, rng)
        lhs = float(z @ s.tstar)
        rhs = float(s.w @ s.tstar) + float((s.w - s.q) @ (s.w - s.q)) / (4 * C.alpha)
        assert lhs <= rhs + 1e-10 * max(1.0, abs(rhs))


@given(st.integers(0, 10_000))
def test_fejer_and_theta_definition(seed):
    W, C, z = _instance(seed)
    sup = forward_backward_supplier(W, C, 1.5 * C.alpha)
    rng = np.random.default_rng(seed)
    x0 = 4 * rng.standard_normal(3)
    xs = [x0.copy()]
    recs = []

    def on_step(n, x, rec, s):
        xs.append(x.copy())
        recs.append((rec, s))

    run(x0, sup, RelaxationSampler.uniform(0.1, 2.0), EngineConfig(C.alpha), 60, seed, on_step)
    for n, (rec, s) in enumerate(recs):
        d0 = float((xs[n] - z) @ (xs[n] - z))
        d1 = float((xs[n + 1] - z) @ (xs[n + 1] - z))
        assert d1 <= d0 - rec.lam * (2 - rec.lam) * rec.dnorm ** 2 + 1e-10 * max(1.0, d0)
        assert rec.theta >= 0
        if rec.theta > 0:
            assert rec.theta * rec.tstar_norm ** 2 == pytest.approx(rec.delta, rel=1e-12)
        else:
            assert rec.delta <= 0 or rec.tstar_norm ** 2 <= EngineConfig(C.alpha).threshold(xs[n])
