import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ni_lab._validation import DomainError
from ni_lab.lattice import CubeUnion, FreqLattice, GridFn, fractional_phase, indicator
from ni_lab.norms import (
    NormSpec,
    closed_form_mass,
    fl_norm,
    low_freq_norm,
    mod_energies,
    mod_norm,
    partition_sum,
    sequence_weight_mass,
    weight_mass,
)


def collinear_data(N, A=1.0, R=1.0, h=0.25):
    om = CubeUnion(A, [[N], [2 * N]])
    lat = FreqLattice.covering(om.extent() + 1, h, 1)
    return indicator(om, R, lat)


def test_fl_norm_definition_on_small_grid():
    lat = FreqLattice(1, 0.5, 5)
    f = GridFn(lat, np.array([0, 1, 2j, -1, 0]))
    w = (1 + lat.axis**2) ** -0.5
    expected = math.sqrt(0.5 * np.sum((w * np.abs(f.values)) ** 2))
    assert fl_norm(f, 2, -1) == pytest.approx(expected, rel=1e-15)
    assert fl_norm(f, math.inf, 0) == 2.0


def test_fl_norm_rejects_small_index():
    f = GridFn.zeros(FreqLattice(1, 0.5, 3))
    with pytest.raises(DomainError):
        fl_norm(f, 0.5, 0)
    with pytest.raises(DomainError):
        mod_norm(f, 0.9, 0)


def test_fl_norm_of_cube_indicator():
    # int_{-2}^{2} (1 + x^2)^{-1} dx = 2 arctan 2
    lat = FreqLattice.covering(3, 1 / 256, 1)
    f = indicator(CubeUnion(4.0, [[0.0]]), 1.0, lat)
    assert fl_norm(f, 2, -1) == pytest.approx(math.sqrt(2 * math.atan(2)), abs=5e-3)


def test_mod_norm_small_indicator():
    # only the n = 0 window meets [-1/4, 1/4) and it equals 1 there
    lat = FreqLattice.covering(3, 1 / 64, 1)
    f = indicator(CubeUnion(0.5, [[0.0]]), 1.0, lat)
    assert mod_norm(f, 1, 0) == pytest.approx(math.sqrt(0.5), rel=1e-14)
    assert mod_norm(f, 2, -3) == pytest.approx(math.sqrt(0.5), rel=1e-14)


def test_partition_of_unity():
    for d in (1, 2):
        lat = FreqLattice.covering(5.3, 0.1, d)
        assert np.max(np.abs(partition_sum(lat) - 1.0)) < 1e-12


def test_mod_windows_supported_near_n():
    lat = FreqLattice.covering(4, 0.05, 1)
    vals = np.zeros(lat.shape, complex)
    vals[lat.index_of([2.0])] = 1.0
    ns, e = mod_energies(GridFn(lat, vals))
    active = ns[e > 0]
    assert set(active.tolist()) == {2}


def test_mod_norm_l2_equivalence():
    # sum_n sigma_n^2 lies in [2^-d, 1], so M^{2,2}_0 and L^2 differ by at most 2^{d/2}
    rng = np.random.default_rng(2)
    for d in (1, 2):
        lat = FreqLattice.covering(3, 0.125, d)
        f = GridFn(lat, rng.normal(size=lat.shape))
        r = mod_norm(f, 2, 0) / fl_norm(f, 2, 0)
        assert 2 ** (-d / 2) - 1e-12 <= r <= 1 + 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), t=st.floats(-5, 5), alpha=st.floats(0.5, 4),
       p=st.sampled_from([1.0, 2.0, 3.0, math.inf]), s=st.floats(-2, 2))
def test_phase_invariance(seed, t, alpha, p, s):
    rng = np.random.default_rng(seed)
    lat = FreqLattice(1, 0.25, 41)
    f = GridFn(lat, rng.normal(size=lat.shape) + 1j * rng.normal(size=lat.shape))
    g = f * fractional_phase(lat, alpha, t)
    assert fl_norm(g, p, s) == pytest.approx(fl_norm(f, p, s), rel=1e-12)
    assert mod_norm(g, p, s) == pytest.approx(mod_norm(f, p, s), rel=1e-12)


def test_fl_norm_nondecreasing_in_s():
    f = collinear_data(8)
    vals = [fl_norm(f, 2, s) for s in np.linspace(-2, 1, 13)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("p,s", [(2, -1.0), (1, -0.5), (3, -0.25)])
def test_indicator_scaling_stable(p, s):
    # ||R chi_Omega|| / (R A^{d/p} N^s) over N in {8, ..., 128}
    ratios = []
    for N in (8, 16, 32, 64, 128):
        f = collinear_data(N, R=3.0)
        ratios.append(fl_norm(f, p, s) / (3.0 * 1.0 ** (1 / p) * N**s))
    assert max(ratios) / min(ratios) < 2.0


def test_mod_norm_upper_bound_collinear():
    ratios = []
    for N in (8, 16, 32, 64):
        f = collinear_data(N, R=2.0)
        ratios.append(mod_norm(f, 1, -0.5) / (2.0 * N**-0.5))
    assert max(ratios) / min(ratios) < 2.0


def test_low_freq_norm_restricts_to_unit_cube():
    lat = FreqLattice.covering(4, 0.25, 1)
    f = GridFn(lat, np.ones(lat.shape))
    assert low_freq_norm(f, 1, 0) == pytest.approx(1.0)
    assert low_freq_norm(f, 2, 2) > low_freq_norm(f, 2, 0) > low_freq_norm(f, 2, -2)


def test_closed_form_regimes():
    assert closed_form_mass(64, 2, -1) == 1.0
    assert closed_form_mass(64, 2, -0.5) == pytest.approx(math.log(64) ** 0.5)
    assert closed_form_mass(64, 2, -0.25) == pytest.approx(64**0.25)
    assert closed_form_mass(16, 1, -1.5, d=2) == pytest.approx(16**0.5)


def test_weight_mass_quadrature_matches_antiderivative():
    q, _ = weight_mass(4, 2, -1)
    assert q == pytest.approx(math.sqrt(2 * math.atan(2)), rel=1e-10)


def test_weight_mass_power_regime_stable():
    ratios = [weight_mass(A, 2, -0.25)[0] / A**0.25 for A in (16, 32, 64, 128, 256)]
    assert max(ratios) / min(ratios) < 1.2


def test_weight_mass_domain():
    with pytest.raises(DomainError):
        weight_mass(0.5, 2, -1)


def test_sequence_weight_mass_examples():
    assert sequence_weight_mass(0, 3, -1) == 1.0
    expected = 1 + 2 * sum(1 / (1 + n) for n in range(1, 9))
    assert sequence_weight_mass(8, 1, -1) == pytest.approx(expected, rel=1e-14)
    full = 1 + 2 * sum((1 + n) ** -2.0 for n in range(1, 10**6))
    assert all(sequence_weight_mass(A, 1, -2) <= full for A in (4, 64, 1024))


def test_normspec_dispatch():
    f = collinear_data(8)
    assert NormSpec("FL", 2, -1)(f) == fl_norm(f, 2, -1)
    assert NormSpec("MOD", "inf", 0)(f) == mod_norm(f, math.inf, 0)
    with pytest.raises(DomainError):
        NormSpec("L2", 2, 0)
