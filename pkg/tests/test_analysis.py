import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groundmode.analysis import (
    NoNucleation,
    ScalingReport,
    ScalingRow,
    analyze_trace,
    bootstrap_ci,
    default_baseline,
    detect_nucleation,
    fit_decay_rate,
    fit_growth_rate,
    piecewise_rates,
    predict_growth,
    scaling_report,
    slice_model_trace,
    time_to_threshold,
    variable_rate_check,
)
from groundmode.evolution import IntegratorConfig, ensemble_run
from groundmode.hamiltonian import NoiseSchedule
from groundmode.network import BooleanNetwork, canonical_network


def recurrence(pF0, k, dt, n):
    """Per-slice decay p_F <- (1 - k dt) p_F, iterated n times."""
    return pF0 * (1 - k * dt) ** np.arange(n + 1)


def test_exact_exponential():
    t = np.linspace(0, 3, 31)
    fit = fit_decay_rate(t, np.exp(-2 * t))
    assert fit.k == pytest.approx(2.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.window == (0.0, 3.0)


def test_constant_trace_has_zero_rate():
    t = np.linspace(0, 1, 11)
    fit = fit_decay_rate(t, np.full(11, 0.4))
    assert fit.k == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(1e-4, 0.01), st.integers(50, 400), st.floats(0.05, 1.0))
def test_recurrence_rate_recovered_within_one_percent(k, kdt, n, pF0):
    dt = kdt / k
    t = dt * np.arange(n + 1)
    fit = fit_decay_rate(t, recurrence(pF0, k, dt, n))
    assert abs(fit.k / k - 1) < 0.01


def test_fit_gated_by_p0():
    t = np.linspace(0, 2, 21)
    pF = np.exp(-t)
    p0 = np.where(t < 1.0, 0.1, 0.5)
    fit = fit_decay_rate(t, pF, p0=p0)
    assert fit.window[1] < 1.0
    assert fit.n_points == int(np.sum(t < 1.0))


def test_fit_rejects_degenerate_windows():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        fit_decay_rate(t, np.exp(-t), window=(0.3, 0.4))
    with pytest.raises(ValueError):
        fit_decay_rate(t, np.zeros(5))


def test_growth_rate_fit():
    t = np.linspace(0, 2, 21)
    fit = fit_growth_rate(t, 0.01 * np.exp(1.5 * t), window=(0.0, 2.0))
    assert fit.k == pytest.approx(1.5, abs=1e-12)


def test_nucleation_examples():
    t = np.arange(8) * 0.5
    p0 = np.array([0.1, 0.1, 0.12, 0.09, 0.11, 0.13, 0.15, 0.2])
    nuc = detect_nucleation(t, p0)
    assert nuc.baseline == 0.1
    assert (nuc.index, nuc.t_h) == (4, 2.0)
    with pytest.raises(NoNucleation):
        detect_nucleation(t, np.full(8, 0.1))
    # the 2^-Q floor
    assert default_baseline([0.0, 0.5], Q=6) == 2.0**-6
    assert detect_nucleation(t, np.array([0, 0, 0.001, 0.02, 0.03, 0.04, 0.05, 0.1]), Q=6).index == 3


def test_predict_growth_examples():
    # exact crossing time ln(19.2) = 2.95491...; the rounded 2.9547 lands at 0.2999
    dT = np.log(0.3 * 64)
    assert predict_growth(1 / 64, 1.0, 2.9547).p0 == pytest.approx(0.3, abs=1e-3)
    pred = predict_growth(1 / 64, 1.0, dT)
    assert pred.p0 == pytest.approx(0.3, abs=1e-12)
    assert not pred.outside_validity
    assert predict_growth(1 / 64, 1.0, dT + 0.01).outside_validity
    assert predict_growth(0.05, 3.0, 0.0).p0 == 0.05
    with pytest.raises(ValueError):
        predict_growth(0.1, 1.0, -1.0)


@given(st.floats(1e-4, 0.1), st.floats(0.01, 3.0), st.floats(0.0, 2.0))
def test_predict_growth_doubling_squares_factor(p, k, dT):
    f1 = predict_growth(p, k, dT).p0 / p
    f2 = predict_growth(p, k, 2 * dT).p0 / p
    assert f2 == pytest.approx(f1**2, rel=1e-12)


def test_variable_rate_check_example():
    chk = variable_rate_check([1.0, 3.0], [1.0, 1.0])
    assert chk.k_mean == 2.0
    assert chk.consistent
    assert chk.relative_residual <= 1e-12
    assert chk.expected == pytest.approx(np.exp(4.0), rel=1e-15)


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(0.01, 1.0)), min_size=1, max_size=10))
def test_variable_rate_check_property(pairs):
    k, dt = zip(*pairs)
    assert variable_rate_check(k, dt).consistent


def test_variable_rate_check_rejects_bad_input():
    with pytest.raises(ValueError):
        variable_rate_check([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        variable_rate_check([1.0], [0.0])


def test_piecewise_rates_on_exponential():
    t = np.linspace(0, 4, 81)
    fits, chk = piecewise_rates(t, np.exp(-0.7 * t), 4)
    assert len(fits) == 4
    assert all(f.k == pytest.approx(0.7, abs=1e-10) for f in fits)
    assert chk.consistent and chk.k_mean == pytest.approx(0.7, abs=1e-10)


def test_slice_model_matches_growth_law_at_small_p0():
    # below the validity threshold the slice picture tracks p0 exp(k t) within 2x
    k, dt = 1.0, 0.01
    p0, pF = slice_model_trace(1 / 64, k, dt, 400)
    assert np.allclose(p0 + pF, 1.0)
    t = dt * np.arange(401)
    pred = np.array([predict_growth(1 / 64, k, x).p0 for x in t])
    inside = pred < 0.3
    ratio = p0[inside] / pred[inside]
    assert ratio.min() > 0.5 and ratio.max() < 2.0
    assert np.all(np.diff(p0) > 0)


def test_time_to_threshold():
    t = np.arange(5.0)
    assert time_to_threshold(t, [0.1, 0.2, 0.35, 0.5, 0.6]) == 2.0
    assert time_to_threshold(t, [0.1, 0.2, 0.35, 0.5, 0.6], start=1.0) == 1.0
    assert time_to_threshold(t, [0.1] * 5) is None


def test_bootstrap_ci_brackets_mean():
    x = np.random.default_rng(0).normal(2.0, 1.0, size=(400, 1))
    lo, hi = bootstrap_ci(x, lambda s: float(s.mean()), n_boot=500)
    assert lo < 2.0 < hi
    assert hi - lo < 0.4


def test_analyze_trace_on_synthetic_ensemble():
    t = np.linspace(0, 4, 41)
    pF = 0.9 * np.exp(-0.5 * t)
    p0 = 1 - pF
    row = analyze_trace(t, p0, pF, Q=6)
    assert row.t_h == 0.1
    assert row.dT_threshold is not None


def test_scaling_report_single_triode():
    n = BooleanNetwork(((1, 2, 3),))

    def run(net):
        return ensemble_run(net, IntegratorConfig(dt=0.005, t_max=0.5, record_stride=10), NoiseSchedule(sigma0=0.5), 4, 0)

    rep = scaling_report([n], run, n_boot=20)
    row = rep.rows[0]
    assert row.Q == 3
    assert row.p0_final == pytest.approx(1.0, abs=1e-12)
    assert row.t_h == 0.0 and row.dT_threshold == 0.0
    # three solutions in a three-dimensional triplet space
    assert row.baseline_network == 1.0 and row.baseline_generic == 2.0**-3
    assert rep.to_dict()["rows"][0]["Q"] == 3


def test_scaling_report_rejects_unsolvable_network():
    bad = BooleanNetwork(((1, 2, 3),), ((1, 2), (2, 3)))
    calls = []
    with pytest.raises(ValueError, match="no solution"):
        scaling_report([canonical_network(), bad], lambda n: calls.append(n))
    assert calls == []


def test_scaling_report_distinct_q():
    row = ScalingRow(Q=6, k=None, k_ci=None, t_h=None, t_h_ci=None, dT_threshold=None, r_squared=None, trajectories=0, p0_final=0.1)
    rep = ScalingReport(0.3, [row])
    with pytest.raises(ValueError, match="distinct"):
        rep.add(row)
