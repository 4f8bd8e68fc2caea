import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isotwirl.permgroup import (
    Permutation,
    SingularGramError,
    compose,
    cycle_count,
    enumerate_group,
    gram_matrix,
    permutation_matrix,
    permuted_trace,
    trace_power,
    weingarten,
    weingarten_exact,
)


def P(text, n):
    return Permutation.from_cycles(text, n)


def dense_kron(ops):
    out = np.ones((1, 1), dtype=complex)
    for a in ops:
        out = np.kron(out, a)
    return out


def random_ops(rng, n, d):
    return [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(n)]


perms = st.integers(2, 4).flatmap(
    lambda n: st.tuples(st.permutations(range(1, n + 1)), st.permutations(range(1, n + 1)))
)


# ----------------------------------------------------------- group basics


def test_enumerate_small_groups():
    s2 = enumerate_group(2)
    assert s2 == [Permutation.identity(2), P("(12)", 2)]
    s4 = enumerate_group(4)
    assert len(s4) == 24
    for c in ("(12)(34)", "(1234)", "(123)"):
        assert P(c, 4) in s4
    assert s4[0].is_identity()


def test_s3_closed_under_composition():
    s3 = enumerate_group(3)
    assert len(s3) == 6
    for a, b in itertools.product(s3, s3):
        assert compose(a, b) in s3


def test_compose_examples():
    assert compose(P("(12)", 3), P("(23)", 3)) == P("(123)", 3)
    pi = P("(1423)", 4)
    assert compose(Permutation.identity(4), pi) == pi
    assert compose(P("(12)", 2), P("(12)", 2)).is_identity()


def test_cycle_count_and_trace_power():
    assert cycle_count(Permutation.identity(2)) == 2
    assert trace_power(Permutation.identity(2), 3) == 9
    assert cycle_count(P("(12)", 2)) == 1
    assert trace_power(P("(12)", 2), 3) == 3
    p = P("(12)(34)", 4)
    assert cycle_count(p) == 2
    assert trace_power(p, 2) == 4
    assert np.trace(permutation_matrix(p, 2)).real == 4


def test_from_cycles_rejects_bad_input():
    with pytest.raises(ValueError):
        P("(15)", 4)
    with pytest.raises(ValueError):
        P("(11)", 4)


# ------------------------------------------------------------- gram / wg


def test_gram_n2():
    np.testing.assert_array_equal(gram_matrix(2, 2).omega, [[4, 2], [2, 4]])
    om = gram_matrix(2, 7).omega
    assert om[0, 0] == om[1, 1] == 49 and om[0, 1] == om[1, 0] == 7


def test_gram_n4_matches_dense_traces():
    d = 4
    tab = gram_matrix(4, d)
    assert tab.omega.shape == (24, 24)
    np.testing.assert_array_equal(tab.omega, tab.omega.T)
    logs = np.log(tab.omega) / np.log(d)
    np.testing.assert_allclose(logs, np.round(logs), atol=1e-12)
    # brute force on a few entries
    for i, j in [(0, 0), (3, 17), (23, 5)]:
        a, b = tab.elements[i], tab.elements[j]
        m = permutation_matrix(a, d) @ permutation_matrix(b, d)
        assert np.trace(m).real == tab.omega[i, j]


def test_weingarten_n2_values():
    wg = weingarten(2, 2).omega_inv
    np.testing.assert_allclose(wg, [[1 / 3, -1 / 6], [-1 / 6, 1 / 3]], atol=1e-15)
    d = 5
    wg = weingarten(2, d).omega_inv
    np.testing.assert_allclose(wg[0, 0], 1 / (d**2 - 1))
    np.testing.assert_allclose(wg[0, 1], -1 / (d * (d**2 - 1)))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_weingarten_delta_identity(n):
    for d in range(n, 9):
        assert weingarten(n, d).delta_residual() < 1e-10


def test_weingarten_refuses_small_d():
    with pytest.raises(SingularGramError):
        weingarten(4, 3)
    with pytest.raises(SingularGramError):
        weingarten_exact(4, 2)


def test_weingarten_exact_matches_float():
    for n, d in [(2, 3), (4, 4), (4, 7)]:
        exact = np.array([[float(x) for x in row] for row in weingarten_exact(n, d)])
        np.testing.assert_allclose(exact, weingarten(n, d).omega_inv, rtol=1e-9, atol=1e-14)
    assert weingarten_exact(2, 2)[0][1] == Fraction(-1, 6)


# -------------------------------------------------------- permuted traces


def test_permuted_trace_reference_example():
    rng = np.random.default_rng(0)
    a, b, c, dd = random_ops(rng, 4, 3)
    got = permuted_trace(P("(324)", 4), [a, b, c, dd])
    np.testing.assert_allclose(got, np.trace(a) * np.trace(b @ c @ dd), rtol=1e-12)
    got = permuted_trace(Permutation.identity(2), [a, b])
    np.testing.assert_allclose(got, np.trace(a) * np.trace(b), rtol=1e-12)


def test_permuted_trace_swap_dense():
    rng = np.random.default_rng(1)
    a, b = random_ops(rng, 2, 3)
    p = P("(12)", 2)
    dense = np.trace(permutation_matrix(p, 3) @ np.kron(a, b))
    np.testing.assert_allclose(permuted_trace(p, [a, b]), dense, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(2, 3), st.integers(0, 10**6), st.data())
def test_permuted_trace_matches_dense(n, d, seed, data):
    p = Permutation(tuple(data.draw(st.permutations(range(1, n + 1)))))
    ops = random_ops(np.random.default_rng(seed), n, d)
    dense = np.trace(permutation_matrix(p, d) @ dense_kron(ops))
    np.testing.assert_allclose(permuted_trace(p, ops), dense, rtol=1e-10, atol=1e-10)


# ------------------------------------------------------ permutation matrices


def test_permutation_matrix_examples():
    swap = np.eye(4)[[0, 2, 1, 3]]
    np.testing.assert_array_equal(permutation_matrix(P("(12)", 2), 2), swap)
    np.testing.assert_array_equal(permutation_matrix(Permutation.identity(3), 2), np.eye(8))
    for p in enumerate_group(3):
        m = permutation_matrix(p, 2)
        np.testing.assert_array_equal(m @ m.T, np.eye(8))
        assert np.trace(m).real == trace_power(p, 2)


@settings(max_examples=60, deadline=None)
@given(perms, st.integers(2, 3))
def test_matrix_homomorphism(pair, d):
    a, b = Permutation(tuple(pair[0])), Permutation(tuple(pair[1]))
    lhs = permutation_matrix(a, d) @ permutation_matrix(b, d)
    np.testing.assert_array_equal(lhs, permutation_matrix(compose(a, b), d))
    assert np.trace(permutation_matrix(a, d)).real == d ** cycle_count(a)
