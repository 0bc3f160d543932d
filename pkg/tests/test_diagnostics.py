import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stochsplit import operators as O
from stochsplit.diagnostics import distance_series, fejer_check, mean_increase_violations, summarize
from stochsplit.errors import ParameterError
from stochsplit.ppa import GammaRule, PpaConfig, run_ppa
from stochsplit.sampling import RelaxationSampler


def _ppa_traces(seeds, x0=(5.0, -3.0), n=40):
    cfg = PpaConfig(O.L1Norm(2, 0.6), GammaRule("constant", 0.8), relax=RelaxationSampler.uniform(0.3, 1.9))
    out = []
    for s in seeds:
        _, tr = run_ppa(cfg, list(x0), n, s, reference=[0.0, 0.0])
        tr.meta["fingerprint"] = "ppa-test"
        out.append(tr)
    return out


def test_fejer_clean_on_ppa_trace():
    _, tr = run_ppa(PpaConfig(O.L1Norm()), [5.0], 20)
    assert fejer_check(tr, [0.0]) == []


def test_fejer_clean_when_started_at_reference():
    _, tr = run_ppa(PpaConfig(O.L1Norm(2)), [0.0, 0.0], 20)
    assert fejer_check(tr, [0.0, 0.0]) == []
    assert np.all(distance_series(tr, [0.0, 0.0]) == 0)


def test_fejer_reports_corrupted_index():
    _, tr = run_ppa(PpaConfig(O.WeightedQuadratic([1.0])), [4.0], 10)
    tr.iterates[6] = tr.iterates[6] * 3.0
    assert fejer_check(tr, [0.0]) == [5]


def test_fejer_requires_iterates():
    _, tr = run_ppa(PpaConfig(O.L1Norm()), [5.0], 5, keep_iterates=False)
    with pytest.raises(ParameterError):
        fejer_check(tr, [0.0])


def test_single_trace_summary_is_its_series():
    (tr,) = _ppa_traces([3])
    s = summarize([tr], [0.0, 0.0])
    d = distance_series(tr, [0.0, 0.0])
    for arr in (s.dist_mean, s.dist_median, s.dist_q10, s.dist_q90):
        np.testing.assert_array_equal(arr, d)
    np.testing.assert_array_equal(s.delta_mean, tr.series("delta"))
    np.testing.assert_array_equal(s.sq_step_mean, np.diff(d ** 2))
    assert s.n_seeds == 1 and np.all(s.sq_stderr == 0)


def test_identical_traces_have_zero_spread():
    (tr,) = _ppa_traces([3])
    s = summarize([tr, tr], [0.0, 0.0])
    assert np.all(s.sq_stderr == 0) and np.all(s.dist_q10 == s.dist_q90)


def test_fingerprint_mismatch_rejected():
    a, b = _ppa_traces([1, 2])
    b.meta["fingerprint"] = "other"
    with pytest.raises(ParameterError):
        summarize([a, b], [0.0, 0.0])
    with pytest.raises(ParameterError):
        summarize([])


def test_summary_uses_recorded_distances_without_iterates():
    traces = _ppa_traces([1, 2])
    bare = [dataclasses.replace(t, iterates=None) for t in traces]
    s = summarize(bare)
    assert s.dist_mean.size == len(traces[0].records)
    np.testing.assert_allclose(s.dist_mean, summarize(traces, [0.0, 0.0]).dist_mean[1:], rtol=1e-12)


@given(st.permutations(list(range(6))))
def test_summary_is_permutation_invariant(order):
    traces = _ppa_traces(range(6), n=15)
    base = summarize(traces, [0.0, 0.0]).to_dict()
    assert summarize([traces[i] for i in order], [0.0, 0.0]).to_dict() == base


def test_quantiles_sorted():
    s = summarize(_ppa_traces(range(10)), [0.0, 0.0])
    assert np.all(s.dist_q10 <= s.dist_median) and np.all(s.dist_median <= s.dist_q90)


def test_mean_increase_detector():
    traces = _ppa_traces(range(30))
    assert mean_increase_violations(summarize(traces, [0.0, 0.0])) == []
    for t in traces:
        t.iterates[11] = t.iterates[11] + 1.0
    assert 10 in mean_increase_violations(summarize(traces, [0.0, 0.0]))


def test_summary_json_round_trip():
    import json
    d = summarize(_ppa_traces(range(3)), [0.0, 0.0]).to_dict()
    assert json.loads(json.dumps(d)) == d and d["fingerprint"] == "ppa-test"
