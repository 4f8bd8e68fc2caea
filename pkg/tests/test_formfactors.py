import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isotwirl.ensembles import EnsembleSpec, Spectrum, sample_spectrum
from isotwirl.formfactors import (
    NOT_CONVERGED,
    FormFactors,
    RFunctions,
    asymptotic_value,
    empirical_form_factors,
    ensemble_form_factors,
    envelope,
    equilibration_time,
    gde_c2,
    gde_c3,
    gde_c4,
    gue_c2,
    gue_c3,
    gue_c4,
    haar_value,
    nls_c2,
    nls_c3,
    nls_c4,
)
from isotwirl.oracle import naive_gde_average, naive_nls_average
from isotwirl.series import ProbeSeries

KINDS = ["GUE", "GDE", "POISSON", "WD_GOE", "WD_GUE"]


def spectrum(e, kind="GDE"):
    return Spectrum(np.asarray(e, float), EnsembleSpec(kind, len(e)))


# ------------------------------------------------------------- empirical


def test_empirical_at_zero():
    sp = sample_spectrum(EnsembleSpec("GUE", 7), 0)
    f = empirical_form_factors(sp, 0.0)
    assert (f.c2, f.c3, f.c4, f.c2_2t) == pytest.approx((49, 343, 2401, 49))


def test_two_level_hand_value():
    f = empirical_form_factors(spectrum([0.0, np.pi]), 1.0)
    assert f.c2 == pytest.approx(0, abs=1e-24)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=12), st.floats(0, 50))
def test_empirical_identities(e, t):
    f = empirical_form_factors(spectrum(sorted(e)), t)
    assert f.c4 == pytest.approx(f.c2**2, rel=1e-10, abs=1e-9)
    assert -1e-12 <= f.ct2 <= 1 + 1e-12
    assert -1e-12 <= f.ct4 <= 1 + 1e-12
    assert abs(f.ct3) <= 1 + 1e-12


def test_nls_spectrum_time_rescale():
    sp = sample_spectrum(EnsembleSpec("POISSON", 16), 3)
    direct = abs(np.exp(-1j * sp.energies * 5.0 / 16).sum()) ** 2
    assert empirical_form_factors(sp, 5.0).c2 == pytest.approx(direct)


# ------------------------------------------------------------ t = 0 and ∞


@pytest.mark.parametrize("kind", KINDS)
def test_ensemble_values_at_zero(kind):
    d = 32
    f = ensemble_form_factors(kind, d, 0.0)
    assert f.c2 == pytest.approx(d**2, rel=1e-12)
    assert np.real(f.c3) == pytest.approx(d**3, rel=1e-12)
    assert f.c4 == pytest.approx(d**4, rel=1e-12)
    assert f.c2_2t == pytest.approx(d**2, rel=1e-12)


def test_gue_and_gde_limits():
    d = 64
    assert gue_c2(d, 0.0) == pytest.approx(d**2)
    assert gue_c2(d, 1e4) == pytest.approx(d, rel=1e-6)
    assert gde_c2(d, 0.0) == pytest.approx(d**2)
    assert gde_c4(d, 200.0) == pytest.approx(d * (2 * d - 1))
    assert np.real(gde_c3(d, 200.0)) == pytest.approx(d)
    assert gue_c4(d, 1e4) == pytest.approx(d * (2 * d - 1), rel=1e-3)
    assert np.real(gue_c3(d, 1e4)) == pytest.approx(d, rel=1e-2)


def test_gue_minus_sign_convention():
    # the ramp is subtracted: c2(t) = r1² + d − d r2(t)/d ... pinned at t = 0
    d = 100
    rf = RFunctions(d)
    assert gue_c2(d, 0.0) == pytest.approx(d**2)
    assert np.asarray(rf.r2(0.0)) == pytest.approx(d)


def test_poisson_plateau():
    d = 256
    late = nls_c2("POISSON", d, np.array([50.0, 100.0]) * np.sqrt(d) / d)
    np.testing.assert_allclose(late, d, rtol=0.05)
    assert nls_c2("POISSON", d, 0.0) == pytest.approx(d**2)


@pytest.mark.parametrize("kind", KINDS)
def test_common_late_time_values(kind):
    d = 64
    t = np.geomspace(20 * d, 200 * d, 200)
    f = ensemble_form_factors(kind, d, t)
    assert np.mean(f.ct2) == pytest.approx(1 / d, rel=0.05)
    assert np.mean(f.ct4) == pytest.approx((2 * d - 1) / d**3, rel=0.05)


def test_asymptotic_and_haar_values():
    d = 16
    assert asymptotic_value("c4", d) / d**4 == pytest.approx((2 * d - 1) / d**3)
    assert asymptotic_value("c2", d) / d**2 == pytest.approx(1 / d)
    assert haar_value("c2", d) == pytest.approx(d**-2)
    assert haar_value("c4", d) == pytest.approx(2 * d**-4)
    with pytest.raises(ValueError):
        asymptotic_value("c5", d)


def test_infinite_time_average_of_single_spectrum():
    d = 16
    sp = sample_spectrum(EnsembleSpec("GDE", d), 2)
    t = np.linspace(0, 1e4, 200_001)
    assert np.mean(empirical_form_factors(sp, t).c2) == pytest.approx(d, rel=0.02)


# ------------------------------------------------------------ NLS sums


@pytest.mark.parametrize("kind", ["POISSON", "WD_GOE", "WD_GUE"])
@pytest.mark.parametrize("d", [2, 5, 9])
def test_nls_matches_naive(kind, d):
    for tau in (0.05, 0.7, 3.0):
        assert abs(nls_c3(kind, d, tau) - naive_nls_average(kind, "c3", d, tau)) < 1e-8 * d**3
        assert abs(nls_c4(kind, d, tau) - naive_nls_average(kind, "c4", d, tau)) < 1e-8 * d**4
        assert abs(nls_c2(kind, d, tau) - naive_nls_average(kind, "c2", d, tau)) < 1e-8 * d**2


def test_nls_c2_near_removable_singularity():
    d = 64
    taus = np.array([1e-9, 1e-7, 1e-5, 1e-3, 2e-2])
    for tau in taus:
        ref = naive_nls_average("POISSON", "c2", d, tau)
        assert nls_c2("POISSON", d, tau) == pytest.approx(np.real(ref), rel=1e-9)


@pytest.mark.parametrize("which", ["c2", "c3", "c4"])
def test_gde_matches_naive(which):
    d = 6
    fn = {"c2": gde_c2, "c3": gde_c3, "c4": gde_c4}[which]
    for t in (0.3, 1.1, 4.0):
        assert np.real(fn(d, t)) == pytest.approx(np.real(naive_gde_average(which, d, t)), rel=1e-10)


# ------------------------------------------------------------- envelopes


def test_poisson_envelope_crossing():
    d = 1024
    assert envelope("POISSON", d, np.sqrt(2 * d)) == pytest.approx(2 / d, rel=1e-3)


def test_gue_envelope_pre_dip():
    d = 2**16
    t = np.array([1.0, 2.0, 4.0])
    np.testing.assert_allclose(envelope("GUE", d, t), 1 / (np.pi * t**3), rtol=1e-3)


@pytest.mark.parametrize("kind", ["GUE", "POISSON"])
def test_envelope_above_local_minima(kind):
    d = 2**10
    t = np.geomspace(0.5, 10 * d, 4000)
    y = ensemble_form_factors(kind, d, t).ct2
    mins = np.nonzero((y[1:-1] < y[:-2]) & (y[1:-1] < y[2:]))[0] + 1
    assert len(mins) > 3
    assert np.all(envelope(kind, d, t[mins]) >= y[mins] * (1 - 1e-6))


def test_envelope_rejects():
    with pytest.raises(ValueError):
        envelope("GDE", 64, 1.0)
    with pytest.raises(ValueError):
        envelope("POISSON", 64, 0.0)


# -------------------------------------------------------- equilibration


def test_equilibration_time_basics():
    t = np.linspace(0.1, 10, 100)
    s = ProbeSeries("c2", "GDE", 4, t, np.full(100, 0.25))
    assert equilibration_time(s, 0.25, 1e-3) == pytest.approx(0.1)
    assert equilibration_time((t, 1 / t), 0.0, 1e-6) == NOT_CONVERGED
    tau = equilibration_time((t, 1 / t), 0.0, 0.5)
    assert 1.9 < tau < 2.1


def test_formfactors_container():
    f = FormFactors.identity(3)
    assert (f.ct2, f.ct4) == (1, 1)
    a = FormFactors.asymptotic(8)
    assert a.ct2 == pytest.approx(1 / 8)
    arr = ensemble_form_factors("GDE", 8, np.array([0.0, 1.0]))
    assert len(arr) == 2 and arr.at(0).c2 == pytest.approx(64)
