import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ni_lab._validation import DomainError
from ni_lab.regimes import (
    LOSS_SCHEMES,
    NI,
    NI_INFINITE_LOSS,
    OUTSIDE,
    SCHEMES,
    RegimePoint,
    as_number,
    breakpoints,
    certificate_critical,
    certificate_for,
    certificate_infinite_loss,
    certificate_ni,
    classify,
    classify_fl,
    classify_mod,
    critical_fl,
    critical_mod,
    region_grid,
    scheme_conditions,
    verify_certificate,
)

fractions = st.fractions(min_value=-3, max_value=3, max_denominator=12)


def random_point(rng, space=None):
    d = rng.choice([1, 2, 3])
    gamma = F(rng.randint(1, 4 * d), 4)
    alpha = F(rng.randint(2, 32), 4)
    index = rng.choice([F(1), F(3, 2), F(2), F(3), F(4), math.inf])
    s = F(rng.randint(-120, 20), 24)
    return RegimePoint(d, gamma, alpha, index, s, space or rng.choice(["FL", "MOD"]))


def test_as_number():
    assert as_number("3/4") == F(3, 4) and as_number("-0.6") == F(-3, 5)
    assert as_number(2) == F(2) and as_number(2.0) == F(2)
    assert as_number("inf") == math.inf
    assert isinstance(as_number(0.3), float)
    with pytest.raises(DomainError):
        as_number("abc")


def test_point_validation():
    with pytest.raises(DomainError):
        RegimePoint(1, 2, 2, 2, -1)
    with pytest.raises(DomainError):
        RegimePoint(1, 1, 2, F(1, 2), -1)
    with pytest.raises(DomainError):
        RegimePoint(1, 1, 2, 2, -1, "L2")
    assert RegimePoint(1, 1, "2", "inf", "-1/2").exact


def test_critical_examples():
    assert critical_fl(3, 2, 2, 2) == 0 == F(2, 2) - 1
    assert critical_fl(1, 1, 2, 2) == F(-1, 2)
    assert critical_fl(2, 1, 3, 1) == F(-4, 2)
    assert critical_mod(1, 1, 2, 1) == F(-1, 2)
    assert critical_mod(2, 1, 2, "inf") == F(1, 2)


@settings(max_examples=100, deadline=None)
@given(d=st.integers(1, 3), gamma=st.fractions(F(1, 8), 1), alpha=st.fractions(F(1, 4), 10))
def test_critical_mod_continuous_at_two(d, gamma, alpha):
    gamma = gamma * d
    left = F(d, 2) - (d - gamma + alpha) / 2
    right = d * (1 - F(1, 2)) - (d - gamma + alpha) / 2
    assert critical_mod(d, gamma, alpha, 2) == left == right == critical_fl(d, gamma, alpha, 2)


@settings(max_examples=100, deadline=None)
@given(d=st.integers(1, 3), g1=st.fractions(F(1, 8), 1), g2=st.fractions(F(1, 8), 1),
       a1=st.fractions(F(1, 4), 10), a2=st.fractions(F(1, 4), 10), p=st.sampled_from([1, 2, 3, math.inf]))
def test_critical_monotone(d, g1, g2, a1, a2, p):
    lo, hi = sorted([g1 * d, g2 * d])
    if lo < hi:
        assert critical_fl(d, lo, a1, p) < critical_fl(d, hi, a1, p)
    lo, hi = sorted([a1, a2])
    if lo < hi:
        assert critical_fl(d, g1 * d, lo, p) > critical_fl(d, g1 * d, hi, p)


def test_fl_examples():
    v = classify(RegimePoint(1, 1, 2, 2, F("-0.6")))
    assert v.verdict == NI and "s<s_c" in v.branches
    v = classify(RegimePoint(1, 1, 1, 2, F("-0.01")))
    assert v.verdict == NI_INFINITE_LOSS and "s<-(X-1)/3" in v.branches
    assert classify(RegimePoint(1, 1, 2, 2, 0)).verdict == OUTSIDE


def test_mod_examples():
    v = classify(RegimePoint(1, 1, 1, 1, F("-0.1"), "MOD"))
    # the gated loss branch also fires at alpha = d = 1 and is the stronger conclusion
    assert "s<0" in v.conditions["mt3"]
    assert v.verdict == NI_INFINITE_LOSS
    v = classify(RegimePoint(2, 1, 5, 4, F("-0.76"), "MOD"))
    assert v.verdict == NI and v.conditions["mt3"] == ("s<-X*min(1/4,1/2q)",)


def test_mod_gap_is_outside():
    # alpha > d + gamma, s between -X/4 and 0
    v = classify(RegimePoint(1, 1, 4, 1, F(-1, 2), "MOD"))
    assert v.verdict == OUTSIDE


def test_mod_q2_matches_fl_p2():
    rng = random.Random(7)
    for _ in range(200):
        pt = random_point(rng, "FL")
        pt = RegimePoint(pt.d, pt.gamma, pt.alpha, 2, pt.s, "FL")
        mod = RegimePoint(pt.d, pt.gamma, pt.alpha, 2, pt.s, "MOD")
        assert classify_fl(pt).verdict == classify_mod(mod).verdict


def test_space_mismatch():
    with pytest.raises(DomainError):
        classify_fl(RegimePoint(1, 1, 2, 2, -1, "MOD"))
    with pytest.raises(DomainError):
        classify_mod(RegimePoint(1, 1, 2, 2, -1))


@settings(max_examples=150, deadline=None)
@given(d=st.integers(1, 3), gamma=st.fractions(F(1, 4), 1, max_denominator=8),
       alpha=st.fractions(F(1, 4), 8, max_denominator=8), index=st.sampled_from([1, 2, 3, math.inf]),
       s=fractions, drop=st.fractions(F(1, 100), 3, max_denominator=100), space=st.sampled_from(["FL", "MOD"]))
def test_regions_downward_closed(d, gamma, alpha, index, s, drop, space):
    hi = classify(RegimePoint(d, gamma * d, alpha, index, s, space))
    lo = classify(RegimePoint(d, gamma * d, alpha, index, s - drop, space))
    rank = {OUTSIDE: 0, NI: 1, NI_INFINITE_LOSS: 2}
    assert rank[lo.verdict] >= rank[hi.verdict]


def test_float_inputs_flag_near_boundary():
    v = classify(RegimePoint(1, 1.0, 2.0, 2.0, -0.5 - 1e-8))
    assert v.near_boundary
    assert not classify(RegimePoint(1, 1, 2, 2, F(-1, 2))).near_boundary


def test_certificate_theorem_ni_example():
    pt = RegimePoint(1, 1, 2, 2, -1)
    c = certificate_ni(pt)
    assert c and c.scheme == "theorem_ni" and c.delta == F(999, 1000) and c.theta == F(1, 1000)
    tau = -pt.alpha - c.eps
    assert tau + pt.gamma - pt.d + 3 * c.r + 2 * c.a + c.a / 2 + pt.s * c.a / pt.d > 0
    ok, margins = verify_certificate(c)
    assert ok and all(isinstance(m, F) and m > 0 for _, m in margins)


def test_certificate_theorem_ni_infeasible_at_critical():
    assert not certificate_ni(RegimePoint(1, 1, 2, 2, F(-1, 2)))
    assert not certificate_ni(RegimePoint(1, 1, 2, 2, F(1, 10)))


def test_certificate_ni1_case1_exponents():
    pt = RegimePoint(1, 1, 2, 2, -2)
    c = certificate_ni(pt, "ni1_case1", delta=F(1, 1000), theta=F(1, 1000))
    assert c.a == 2 * 2 * F(1, 1000)
    assert c.r == 2 * (1 - F(1, 1000)) - F(1, 1000)
    assert verify_certificate(c)[0]


def test_certificate_critical_examples():
    c = certificate_critical(RegimePoint(1, 1, 2, 2, F(-1, 2)))
    assert c and c.a == 1 and verify_certificate(c)[0]
    assert not certificate_critical(RegimePoint(1, 1, 3, 2, F(-1, 2)))
    assert not certificate_critical(RegimePoint(1, 1, 2, "inf", 0))
    assert not certificate_critical(RegimePoint(1, 1, 2, 2, F(-1, 3)))


def test_certificate_infinite_loss_examples():
    c = certificate_infinite_loss(RegimePoint(2, 1, F(3, 2), 2, F("-0.6")))
    assert c.scheme == "ilr2" and c.a == 0 and c.eps != 1
    assert 1 - c.point.alpha + 1 - 2 + 2 * c.r < c.eps < 1 - c.point.alpha + 1 - 2 + 3 * c.r
    bad = certificate_infinite_loss(RegimePoint(1, 1, 2, 2, F("-0.6")))
    assert not bad and bad.thresholds == {"ilr0": F(-2, 3), "ilr2": F(-1, 3)}
    assert certificate_infinite_loss(RegimePoint(1, 1, 2, 2, F("-0.7"))).scheme == "ilr0"


def test_certificate_exponents_shape():
    c = certificate_ni(RegimePoint(1, 1, 2, 2, -1), delta=F(1, 2), theta=F(1, 8))
    e = c.exponents()
    assert e["ratio_sharp"] == e["U3_sharp"] - e["psi0"]
    assert e["ratio_lower"] <= e["ratio_sharp"]
    assert e["time"] == -2 - c.eps


def test_certificate_soundness_random():
    rng = random.Random(11)
    for _ in range(150):
        pt = random_point(rng)
        conds = scheme_conditions(pt)
        for sch in SCHEMES:
            cert = certificate_for(pt, sch)
            assert bool(cert) == conds[sch], (pt, sch)
            if cert:
                assert verify_certificate(cert)[0]


def test_verdict_matches_feasible_schemes():
    rng = random.Random(3)
    for _ in range(100):
        pt = random_point(rng)
        v = classify(pt)
        feasible = [sch for sch in SCHEMES if certificate_for(pt, sch)]
        if any(sch in LOSS_SCHEMES for sch in feasible):
            assert v.verdict == NI_INFINITE_LOSS
        elif feasible:
            assert v.verdict in (NI, NI_INFINITE_LOSS)


def test_float_certificate_uses_margin():
    c = certificate_ni(RegimePoint(1, 1.0, 2.0, 2.0, -1.0))
    assert c and all(m > 1e-9 for _, m in c.inequalities)


def test_breakpoints_fl():
    b = breakpoints(1, 1, 2)
    assert b["alpha_first"] == 1 and b["alpha_second"] == 2
    assert b["corner"] == (2, F(-1, 2)) and b["corner_included"]
    assert not breakpoints(1, 1, "inf")["corner_included"]


def test_region_grid_rows():
    grid = region_grid([F(2)], [F(-1, 2), F(1, 4)], 1, 1, 2)
    rows = grid.rows
    assert rows[0]["verdict"] == NI and rows[0]["cert"].startswith("nicri_log")
    assert rows[1]["verdict"] == OUTSIDE and rows[1]["cert"] == ""
    assert grid.to_csv().splitlines()[0] == "alpha,s,verdict,theorem,cert"


def test_region_grid_above_scaling():
    # alpha > gamma + d with p >= 3/2: inflation above the scaling index
    pt = RegimePoint(1, 1, 4, 4, F(-3, 5))
    assert pt.s > pt.s_c and classify(pt).verdict == NI
    assert classify(RegimePoint(1, 1, 4, 4, F(-2, 5))).verdict == OUTSIDE


def test_positive_s_is_outside():
    for alpha in (F(1, 2), 1, 2, 5):
        for space in ("FL", "MOD"):
            assert classify(RegimePoint(2, 1, alpha, 2, F(1, 10), space)).verdict == OUTSIDE
