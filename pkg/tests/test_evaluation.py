import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from windcast.errors import LengthMismatch, SeriesTooShort, UndefinedCorrelation
from windcast.evaluation import (
    MetricReport,
    auxiliary_metrics,
    compare_report,
    correlation_r,
    evaluate,
    format_ranking,
    mse,
    persistence_baseline,
)

# millimetre-per-second resolution keeps squared errors clear of underflow
finite = st.integers(-10**6, 10**6).map(lambda k: k / 1000.0)
vectors = st.lists(finite, min_size=3, max_size=40)


def report(mse_value, r):
    return MetricReport(10, r, mse_value, None, None, None if r is None else r * r)


def test_correlation_examples():
    obs = np.array([1.0, 4.0, 2.0, 8.0])
    assert correlation_r(obs, obs) == 1.0
    assert correlation_r(obs, 2 * obs + 3) == pytest.approx(1.0, abs=1e-15)
    assert correlation_r(obs, -obs) == -1.0


def test_correlation_errors():
    with pytest.raises(UndefinedCorrelation):
        correlation_r([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])
    with pytest.raises(LengthMismatch):
        correlation_r([1.0, 2.0], [1.0])


def test_correlation_matches_numpy(rng):
    o, p = rng.normal(size=50), rng.normal(size=50)
    assert correlation_r(o, p) == pytest.approx(np.corrcoef(o, p)[0, 1], abs=1e-14)


def test_mse_examples():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert abs(mse([1, 2, 3], [1, 3, 5]) - 5 / 3) <= 1e-12
    assert mse([2.0], [5.0]) == 9.0
    with pytest.raises(LengthMismatch):
        mse([1.0], [1.0, 2.0])


def test_auxiliary_examples():
    assert auxiliary_metrics([1.0, 2.0, 4.0], [1.0, 2.0, 4.0]) == (0.0, 1.0, 1.0)
    obs = np.array([3.0, 1.0, 7.0, 2.0])
    _, ce, _ = auxiliary_metrics(obs, np.full(4, obs.mean()))
    assert ce == 0.0
    msre, _, _ = auxiliary_metrics([1.0, 2.0], [2.0, 2.0])
    assert msre == 0.5


def test_msre_absent_on_zero_observation():
    msre, ce, r2 = auxiliary_metrics([0.0, 1.0, 2.0], [0.5, 1.0, 2.5])
    assert msre is None
    assert ce is not None and r2 is not None


def test_evaluate_report_fields():
    rep = evaluate([1.0, 2.0, 3.0], [1.0, 3.0, 5.0])
    assert rep.n == 3
    assert rep.r == pytest.approx(1.0)
    assert rep.r_squared == rep.r * rep.r
    assert set(rep.to_dict()) == {"n", "r", "mse", "msre", "ce", "r_squared"}


def test_evaluate_constant_prediction_has_no_r():
    rep = evaluate([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
    assert rep.r is None and rep.r_squared is None
    assert rep.ce == 0.0


def test_persistence_examples():
    obs, pred = persistence_baseline(np.array([1.0, 2.0, 3.0, 4.0]), 1)
    np.testing.assert_array_equal(obs, [2, 3, 4])
    np.testing.assert_array_equal(pred, [1, 2, 3])
    assert mse(obs, pred) == 1.0
    assert mse(*persistence_baseline(np.full(6, 4.2), 2)) == 0.0
    obs, pred = persistence_baseline(np.arange(5.0), 4)
    assert obs.size == 1
    with pytest.raises(SeriesTooShort):
        persistence_baseline(np.arange(3.0), 3)


def test_compare_examples():
    entries = [("poly", report(2.5341, 0.8)), ("arma", report(1.1900, 0.9)),
               ("mlp", report(0.9362, 0.95))]
    assert [e[0] for e in compare_report(entries)] == ["mlp", "arma", "poly"]
    assert compare_report(entries[:1]) == entries[:1]
    tied = [("a", report(1.0, 0.9)), ("b", report(1.0, 0.95)), ("c", report(1.0, None))]
    assert [e[0] for e in compare_report(tied)] == ["b", "a", "c"]


def test_format_ranking_lists_every_entry():
    text = format_ranking([("x", report(1.0, 0.5)), ("y", report(0.5, None))], title="t")
    lines = text.splitlines()
    assert lines[0] == "t"
    assert lines[2].split()[:2] == ["1", "y"]
    assert lines[3].split()[:2] == ["2", "x"]


@given(vectors, st.data(), st.floats(-100, 100).filter(lambda a: abs(a) > 1e-3), finite)
def test_correlation_affine_invariance(obs, data, a, b):
    o = np.array(obs)
    p = np.array(data.draw(st.lists(finite, min_size=len(obs), max_size=len(obs))))
    assume(np.ptp(o) > 1e-3 and np.ptp(p) > 1e-3)
    r = correlation_r(o, p)
    assert correlation_r(o, a * p + b) == pytest.approx(np.sign(a) * r, abs=1e-9)


@given(vectors, st.data())
def test_metric_invariants(obs, data):
    o = np.array(obs)
    p = np.array(data.draw(st.lists(finite, min_size=len(obs), max_size=len(obs))))
    rep = evaluate(o, p)
    assert rep.mse >= 0
    assert (rep.mse == 0) == bool(np.array_equal(o, p))
    if rep.ce is not None:
        assert rep.ce <= 1.0
        dev = o - o.mean()
        assert rep.ce == pytest.approx(1 - rep.mse * o.size / (dev @ dev), rel=1e-12, abs=1e-12)
    if rep.r is not None:
        assert -1.0 <= rep.r <= 1.0
        assert abs(rep.r_squared - rep.r * rep.r) <= 1e-12
