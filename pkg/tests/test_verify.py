import io
import math

import numpy as np
import pytest

from trainhyp import verify as V
from trainhyp.verify import GridSpec, InequalityReport, fit_constants, run_check


@pytest.mark.parametrize("check", list(V.DEFAULT_REGIONS), ids=V.LABELS.get)
def test_checks_pass_small_sample(check):
    rep = run_check(check, samples=20_000, seed=1)
    assert rep.ok, rep.witness
    assert rep.samples == 20_000
    assert rep.worst_margin >= -V.SLACK


def test_run_check_is_seeded_and_job_independent():
    a = run_check("lemma33", samples=250_000, seed=7, jobs=1)
    b = run_check("lemma33", samples=250_000, seed=7, jobs=3)
    assert a.to_dict() == b.to_dict()
    c = run_check("lemma33", samples=250_000, seed=8)
    assert c.worst_margin != a.worst_margin


def test_report_round_trip():
    rep = run_check("delta_sandwich", samples=1000, seed=2, region={"c": 2})
    again = InequalityReport.from_dict(rep.to_dict())
    assert again == rep
    assert rep.region["c"] == 2.0


def test_rel_margin():
    assert V.rel_margin(1.0, 2.0) == pytest.approx(0.5)
    assert V.rel_margin(2.0, 1.0) == pytest.approx(-0.5)
    assert V.rel_margin(0.0, 0.0) == 0.0


def test_growth_bound_equality_case():
    # h = l_k and r_k + h = l_{k+1}: both sides equal 1
    lk, lk1 = np.array([0.7, 3.0]), np.array([2.0, 9.5])
    lhs, rhs = V.growth_bound_sides(lk, lk1, lk1 - lk, lk)
    np.testing.assert_allclose(lhs, 1.0, rtol=1e-14)
    np.testing.assert_allclose(rhs, 1.0, rtol=1e-14)


def test_sandwich_sides_order():
    lo, d, hi = V.sandwich_sides(np.array([1.0]), np.array([2.0]), np.array([0.5]), 1.0)
    assert lo[0] <= d[0] <= hi[0]
    assert hi[0] == pytest.approx((1 + 3 * math.e) * lo[0])


def test_violation_is_detected():
    # outside the hypothesis r_k <= 2c + |l_k - l_{k+1}| the upper sandwich fails
    lo, d, hi = V.sandwich_sides(np.array([5.0]), np.array([5.0]), np.array([40.0]), 0.5)
    assert V.rel_margin(d, hi)[0] < -V.SLACK


def test_region_validation():
    with pytest.raises(ValueError):
        run_check("lemma33", samples=10, region={"l": [-1, 2]})
    with pytest.raises(ValueError):
        run_check("lemma33", samples=10, region={"zz": [0, 1]})
    with pytest.raises(ValueError):
        run_check("lemma46", samples=10, region={"a": [2, 1]})
    with pytest.raises(ValueError):
        run_check("nope", samples=10)
    with pytest.raises(ValueError):
        run_check("lemma33", samples=0)


@pytest.mark.parametrize("check", V.FIT_CHECKS, ids=V.LABELS.get)
def test_fits_positive_and_finite(check):
    rep = fit_constants(check, l0=1.0, grid=GridSpec(9))
    assert rep.ok
    fit = rep.fitted
    assert 0 < fit["c_lower"] <= fit["c_upper"] < math.inf


def test_hexagon_fit_values():
    fit = fit_constants("prop48", l0=1.0).fitted
    assert fit["c_lower"] == pytest.approx(0.9918, abs=5e-4)
    assert fit["c_upper"] == pytest.approx(2.0753, abs=5e-4)


def test_fit_argmin_locates_ratio():
    rep = fit_constants("prop48", l0=1.0, grid=GridSpec(9))
    a = rep.fitted["argmin"]
    from trainhyp.gamma import delta_terms
    from trainhyp.hyptrig import hexagon_f

    ratio = hexagon_f(a["x"], a["y"], a["t"]) / delta_terms(a["x"], a["y"], a["t"])
    assert ratio == pytest.approx(rep.fitted["c_lower"], rel=1e-12)


def test_fit_validation():
    with pytest.raises(ValueError):
        fit_constants("prop48", l0=0)
    with pytest.raises(ValueError):
        fit_constants("nope")


def test_grid_refinement_nests():
    g = GridSpec(5).refined()
    assert g.points == 9
    coarse = np.linspace(0, 1, 5)
    fine = np.linspace(0, 1, 9)
    assert np.all(np.isin(coarse, fine))


def test_fit_csv():
    buf = io.StringIO()
    reps = [fit_constants("prop49", l0=l0, grid=GridSpec(5)) for l0 in (0.1, 1.0)]
    V.write_fit_csv(reps, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "region,l0,c_lower,c_upper,argmin,argmax"
    assert len(lines) == 3
    assert lines[1].startswith("prop49,0.1,")


def test_run_check_delegates_fits():
    rep = run_check("cor410", region={"l0": 1.0})
    assert rep.fitted is not None
