import math

import pytest

from trainhyp import classifier as C
from trainhyp.classifier import Outcome, Verdict, classify, necessary_checks, quasi_increasing_c1, tail_constant_c2
from trainhyp.core import Constant, LogFamily, Power, TrainSpec
from trainhyp.gamma import GammaKind, KEstimate, k_estimate


def _fake_estimate(values, saturated=False, value=None):
    N = 8 * len(values)
    traj = [(8 * (i + 1), v) for i, v in enumerate(values)]
    return KEstimate(GammaKind.FULL, value if value is not None else max(values), (1, 0.0, 1), N, 32, 0.0, traj,
                     saturated)


def test_quasi_increasing_c1():
    assert quasi_increasing_c1(TrainSpec.from_arrays([1, 2, 3])) == (0.0, (1, 1))
    c1, (m, n) = quasi_increasing_c1(TrainSpec.from_arrays([1, 5, 2, 4, 0.5]))
    assert c1 == 4.5 and (m, n) == (2, 5)


def test_tail_constant_geometric():
    t = TrainSpec.flute(Power(1, 1, 0), 200)
    tc = tail_constant_c2(t, 50)
    assert tc.certified
    assert tc.value == pytest.approx(1.581976706869326424, abs=1e-9)


def test_tail_constant_sqrt_matches_oracle():
    t = TrainSpec.flute(Power(1, 0.5, 0), 400)
    assert tail_constant_c2(t, 100).value == pytest.approx(22.50416643579039620, rel=1e-8)
    assert tail_constant_c2(t, 400).value == pytest.approx(42.50208330821450087, rel=1e-8)


def test_tail_constant_explicit_is_lower_bound():
    t = TrainSpec.from_arrays([1, 2, 3, 4])
    tc = tail_constant_c2(t, 2)
    assert not tc.certified
    assert tc.value == pytest.approx(1 + math.exp(-1) + math.exp(-2))
    with pytest.raises(IndexError):
        tail_constant_c2(t, 5)


def test_tail_constant_divergent_log_family():
    # l_n = log(n + 1): the tail sum diverges and can never be certified
    t = TrainSpec.flute(LogFamily(1.0, 0.0), 100)
    assert not tail_constant_c2(t, 10).certified


def test_trend():
    import numpy as np

    assert C._trend(np.ones(64)) == (True, False)
    assert C._trend(np.arange(1.0, 65.0)) == (False, True)
    assert C._trend(np.ones(4)) == (False, False)


def test_bounded_case_verdict():
    t = TrainSpec.flute(Constant(1.0), 200)
    v = classify(t, k_estimate(t, grid=64))
    assert v.outcome is Outcome.HYPERBOLIC
    assert v.pathway == C.BOUNDED_L


def test_geometric_case_verdict():
    t = TrainSpec.flute(Power(1, 1, 0), 200)
    v = classify(t, k_estimate(t, grid=64))
    assert v.outcome is Outcome.HYPERBOLIC
    assert v.pathway == C.DIVERGING_L
    assert v.constants["c2"] == pytest.approx(math.e / (math.e - 1), abs=1e-9)


def test_sqrt_case_verdict():
    t = TrainSpec.flute(Power(1, 0.5, 0), 400)
    v = classify(t, k_estimate(t, grid=64))
    assert v.outcome is Outcome.NOT_HYPERBOLIC
    assert v.pathway == C.DIVERGING_L


def test_diverging_r_verdict():
    t = TrainSpec(Power(1, 1, 0), Power(2, 1, 0), 200)
    v = classify(t, k_estimate(t, grid=64))
    assert v.outcome is Outcome.NOT_HYPERBOLIC
    assert any("r diverges" in d for d in v.diagnostics)


def test_plateau_mismatch_downgrades():
    t = TrainSpec.flute(Constant(1.0), 64)
    v = classify(t, _fake_estimate([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]))
    assert v.outcome is Outcome.INCONCLUSIVE
    assert "trajectory" in v.constants


def test_oscillating_l_is_inconclusive():
    t = TrainSpec.from_arrays([1.0 if i % 2 else 6.0 + i for i in range(64)])
    v = classify(t, _fake_estimate([1.0] * 8))
    assert v.outcome is Outcome.INCONCLUSIVE
    assert v.pathway == C.NO_PATHWAY


def test_verdict_round_trip():
    v = Verdict(Outcome.HYPERBOLIC, C.BOUNDED_L, {"c1": 0.0}, ["note"])
    assert Verdict.from_dict(v.to_dict()) == v


def test_necessary_checks_flag_violations():
    # l_n = n with a huge r at one index, checked against a (wrongly) small K
    r = [0.0] * 60
    r[39] = 1e3
    t = TrainSpec.from_arrays(range(1, 61), r)
    rep = necessary_checks(t, _fake_estimate([0.5] * 8))
    assert not rep.ok
    assert rep.r_violations[0]["n"] == 40
    assert rep.r_gated > 0 and rep.tail_gated > 0


def test_necessary_checks_tail_violation():
    # slowly growing l: the tail sum exceeds K e^{K + c1} e^{-l_n}
    t = TrainSpec.flute(Power(1, 0.5, 0), 100)
    rep = necessary_checks(t, _fake_estimate([1.0] * 8))
    assert rep.tail_violations


def test_necessary_checks_need_unsaturated_estimate():
    t = TrainSpec.flute(Constant(1.0), 64)
    with pytest.raises(ValueError):
        necessary_checks(t, _fake_estimate([1.0] * 8, saturated=True))
