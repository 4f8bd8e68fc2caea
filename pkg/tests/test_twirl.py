import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isotwirl.ensembles import EnsembleSpec, sample_spectrum
from isotwirl.formfactors import FormFactors, empirical_form_factors
from isotwirl.oracle import McConfig, mc_isospectral_twirl, sample_haar_unitaries
from isotwirl.permgroup import Permutation, enumerate_group, permutation_matrix
from isotwirl.twirl import (
    CPKind,
    CPMapSpec,
    TwirlOperator,
    asymptotic_r4,
    coefficient_basis,
    conjugate,
    haar_twirl_limit,
    r2,
    r2_cp,
    r2k,
    r2k_from_spectrum,
    r4,
    to_matrix,
    twirl_dense,
)


def P(text, n=4):
    return Permutation.from_cycles(text, n)


def ff_of(d, c2, c3=0.0, c4=0.0, c22=0.0):
    return FormFactors(0.0, c2, c3, c4, c22, d)


def random_ff(rng, d):
    return ff_of(d, rng.uniform(0, d * d), complex(*rng.normal(size=2) * d),
                 rng.uniform(0, d**4), rng.uniform(0, d * d))


# -------------------------------------------------------------------- r2


def test_r2_limits():
    d = 5
    op = r2(ff_of(d, d**2))
    assert op["e"] == pytest.approx(1) and op["(12)"] == pytest.approx(0)
    op = r2(ff_of(d, d))
    assert op["e"] == pytest.approx(1 / (d + 1)) and op["(12)"] == pytest.approx(1 / (d + 1))
    op = r2(ff_of(d, 1.0))
    assert op["e"] == pytest.approx(0) and op["(12)"] == pytest.approx(1 / d)


# -------------------------------------------------------------------- r4


@pytest.mark.parametrize("d", [4, 5, 8])
def test_r4_at_t0_is_identity(d):
    op = r4(FormFactors.identity(d))
    for p in enumerate_group(4):
        assert op[p] == pytest.approx(1.0 if p.is_identity() else 0.0, abs=1e-12)


@pytest.mark.parametrize("d", [4, 6, 9])
def test_r4_asymptotic(d):
    op = r4(FormFactors.asymptotic(d))
    assert op["e"] == pytest.approx((2 * d**2 + 7 * d + 4) / (d * (d + 1) * (d + 2) * (d + 3)))
    assert op.allclose(asymptotic_r4(d))


@pytest.mark.parametrize("d", [4, 7])
def test_r4_haar(d):
    op = r4(FormFactors.haar(d))
    assert op.allclose(haar_twirl_limit(2, d), atol=1e-14)
    lim = haar_twirl_limit(2, d)
    nonzero = [p for p in enumerate_group(4) if abs(lim[p]) > 0]
    assert len(nonzero) == 4
    assert lim["(13)(24)"] == pytest.approx(1 / (d**2 - 1))
    assert lim["(1423)"] == pytest.approx(-1 / (d * (d**2 - 1)))


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 9), st.integers(0, 10**6))
def test_closed_r4_matches_weingarten_solve(d, seed):
    ff = random_ff(np.random.default_rng(seed), d)
    assert r4(ff).allclose(r2k(ff, 2), rtol=1e-9, atol=1e-12)
    assert r2(ff).allclose(r2k(ff, 1), rtol=1e-12, atol=1e-14)


def test_coefficient_basis_matches_solve():
    rng = np.random.default_rng(4)
    d = 5
    ff = random_ff(rng, d)
    mono = np.array([1, ff.c2, ff.c3, np.conj(ff.c3), ff.c4, ff.c2_2t], dtype=complex)
    k = np.array([[float(x) for x in row] for row in coefficient_basis(2, d)])
    np.testing.assert_allclose(k @ mono, r2k(ff, 2).dense_coefficients(), rtol=1e-9, atol=1e-12)


def test_r4_symmetry_under_slot_relabel():
    # conjugating by (12)(34) leaves R4 unchanged; (13)(24) maps c3 to its conjugate
    rng = np.random.default_rng(8)
    d = 5
    ff = random_ff(rng, d)
    op = r2k(ff, 2)
    assert conjugate(op, P("(12)")).allclose(op)
    assert conjugate(op, P("(34)")).allclose(op)
    flipped = FormFactors(0.0, ff.c2, np.conj(ff.c3), ff.c4, ff.c2_2t, d)
    swapped = conjugate(op, P("(13)(24)"))
    assert swapped.allclose(r2k(flipped, 2))


def test_r4_refuses_small_d():
    with pytest.raises(ValueError):
        r2k(FormFactors.identity(3), 2)


# ---------------------------------------------------------------- CP maps


def test_cp_twirl():
    d = 6
    op = r2_cp(CPMapSpec.dephasing(d))
    assert op["e"] == pytest.approx(1 / (d + 1)) and op["(12)"] == pytest.approx(1 / (d + 1))
    op = r2_cp(CPMapSpec(d**2, d))
    assert op["e"] == pytest.approx(1) and op["(12)"] == pytest.approx(0)
    op = r2_cp(CPMapSpec(1.0, d))
    assert op["e"] == pytest.approx(0) and op["(12)"] == pytest.approx(1 / d)
    with pytest.raises(ValueError):
        CPMapSpec(3.0, d, CPKind.DEPHASING)


# ------------------------------------------------------------- matrices


def test_to_matrix_examples():
    d = 2
    np.testing.assert_allclose(to_matrix(r2(FormFactors.identity(d))), np.eye(4))
    m = to_matrix(r2(ff_of(d, d)))
    np.testing.assert_allclose(m @ m, 2 / (d + 1) * m, atol=1e-14)
    # tr(T/d) = tr(T)/d = 1
    lim = to_matrix(haar_twirl_limit(1, 3))
    assert np.trace(lim).real == pytest.approx(1)


def test_to_matrix_hermitian_and_symmetric():
    sp = sample_spectrum(EnsembleSpec("GUE", 4), 1)
    ff = empirical_form_factors(sp, 0.8)
    m2 = to_matrix(r2(ff))
    np.testing.assert_allclose(m2, m2.conj().T, atol=1e-10)
    t12 = permutation_matrix(P("(12)", 2), 4)
    np.testing.assert_allclose(m2 @ t12, t12 @ m2, atol=1e-10)
    m4 = to_matrix(r2k(ff, 2))
    for c in ("(12)", "(34)"):
        t = permutation_matrix(P(c), 4)
        np.testing.assert_allclose(m4 @ t, t @ m4, atol=1e-10)


def test_json_roundtrip():
    op = r2k(random_ff(np.random.default_rng(0), 4), 2)
    assert TwirlOperator.from_json(op.to_json()).allclose(op, rtol=0, atol=0)


def test_r2k_from_spectrum_matches_form_factors():
    sp = sample_spectrum(EnsembleSpec("GDE", 5), 3)
    ff = empirical_form_factors(sp, 1.3)
    assert r2k_from_spectrum(sp.energies, 1.3, 2).allclose(r2k(ff, 2))
    assert r2k_from_spectrum(sp.energies, 1.3, 1).allclose(r2(ff))


def test_twirl_dense_of_product_operator():
    # twirling U^{⊗k,k} of a diagonal U reproduces the isospectral twirl
    d = 4
    e = np.random.default_rng(2).normal(size=d)
    u = np.diag(np.exp(-1j * e * 0.7))
    x = np.kron(np.kron(u, u), np.kron(u.conj(), u.conj()))
    assert twirl_dense(x, 2, d).allclose(r2k_from_spectrum(e, 0.7, 2), atol=1e-12)


# -------------------------------------------------------------- MC checks


def test_r2_vs_mc_two_level():
    # U = diag(1, -1): c2 = 0
    u = np.diag([1.0, -1.0]).astype(complex)
    mc = mc_isospectral_twirl(u, 1, McConfig(n_samples=10_000, seed=3))
    exact = to_matrix(r2(ff_of(2, 0.0)))
    assert np.all(np.abs(mc.mean - exact) < 4 * mc.se + 1e-12)


def test_r4_haar_vs_mc_haar_average():
    d, n = 4, 4000
    rng = np.random.default_rng(21)
    acc = np.zeros((d**4, d**4), complex)
    acc2 = np.zeros((d**4, d**4))
    for _ in range(n // 500):
        us = sample_haar_unitaries(d, 500, rng)
        for u in us:
            uu = np.kron(u, u)
            x = np.kron(uu, uu.conj().T)
            acc += x
            acc2 += np.abs(x) ** 2
    mean = acc / n
    se = np.sqrt(np.maximum(acc2 / n - np.abs(mean) ** 2, 0) / n)
    exact = to_matrix(haar_twirl_limit(2, d))
    # 4 SE per entry: 65536 entries make a 3-SE bound fail by chance
    assert np.all(np.abs(mean - exact) <= 4 * se + 1e-9)
