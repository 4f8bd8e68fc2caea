"""Isospectral twirling operators as coefficient maps over S_{2k}.

The twirl of ``U^{⊗k,k} = U^{⊗k} ⊗ U^{†⊗k}`` (slots ``1..k`` carry ``U``,
slots ``k+1..2k`` carry ``U†``) commutes with every ``V^{⊗2k}``, hence

    R^{(2k)}(U) = Σ_σ a_σ T_σ,     a = Ω^{-1} c,     c_π = tr(T_π U^{⊗k,k}).

Each ``c_π`` is a product over the cycles of ``π`` of ``tr(U^p)``, where
``p`` counts ``U`` minus ``U†`` slots in the cycle; for ``k ≤ 2`` it is a
monomial in the form factors. :func:`r2` and :func:`r4` are the closed
forms, :func:`r2k` is the generic Weingarten construction.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .formfactors import FormFactors
from .permgroup import (
    MAX_MATRIX_SIZE,
    Permutation,
    SingularGramError,
    compose,
    enumerate_group,
    permutation_image,
    weingarten,
    weingarten_exact,
)

__all__ = [
    "TwirlOperator",
    "CPMapSpec",
    "CPKind",
    "Y_GROUPS",
    "r2",
    "r4",
    "r2k",
    "r2k_from_spectrum",
    "r2_cp",
    "to_matrix",
    "haar_twirl_limit",
    "asymptotic_r4",
    "cycle_trace",
    "MONOMIALS",
    "coefficient_basis",
    "twirl_dense",
    "conjugate",
]


@dataclass(frozen=True)
class TwirlOperator:
    """``Σ_σ coeffs[σ] T_σ`` on ``(C^d)^{⊗2k}``.

    Permutations missing from ``coeffs`` have coefficient zero.
    """

    k: int
    d: int
    coeffs: dict

    def __post_init__(self):
        n = 2 * self.k
        for p in self.coeffs:
            if not isinstance(p, Permutation) or p.n != n:
                raise ValueError(f"coefficient keys must be permutations of degree {n}")

    def __getitem__(self, p) -> complex:
        if isinstance(p, str):
            p = Permutation.from_cycles(p, 2 * self.k)
        return self.coeffs.get(p, 0.0)

    def dense_coefficients(self) -> np.ndarray:
        """Coefficients in :func:`enumerate_group` order."""
        return np.array([self[p] for p in enumerate_group(2 * self.k)], dtype=complex)

    def allclose(self, other: "TwirlOperator", rtol=1e-9, atol=1e-12) -> bool:
        return (self.k, self.d) == (other.k, other.d) and np.allclose(
            self.dense_coefficients(), other.dense_coefficients(), rtol=rtol, atol=atol
        )

    def to_json(self) -> str:
        coeffs = {}
        for p, v in self.coeffs.items():
            v = complex(v)
            coeffs[str(p)] = v.real if v.imag == 0 else [v.real, v.imag]
        return json.dumps({"k": self.k, "d": self.d, "coeffs": coeffs}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "TwirlOperator":
        doc = json.loads(text)
        n = 2 * int(doc["k"])
        coeffs = {}
        for key, v in doc["coeffs"].items():
            coeffs[Permutation.from_cycles(key, n)] = complex(*v) if isinstance(v, list) else v
        return cls(int(doc["k"]), int(doc["d"]), coeffs)


class CPKind(str, enum.Enum):
    GENERIC = "GENERIC"
    DEPHASING = "DEPHASING"


@dataclass(frozen=True)
class CPMapSpec:
    """CP map ``Q`` through ``tr 𝒦`` with ``𝒦 = Σ_α K_α ⊗ K_α†``.

    For the dephasing channel ``tr(T 𝒦) = d`` is fixed.
    """

    trace_of_K: complex
    d: int
    kind: CPKind = CPKind.GENERIC

    def __post_init__(self):
        object.__setattr__(self, "kind", CPKind(self.kind))
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.kind is CPKind.DEPHASING and not np.isclose(self.trace_of_K, self.d):
            raise ValueError("dephasing channel has trace_of_K = d")

    @classmethod
    def dephasing(cls, d: int) -> "CPMapSpec":
        return cls(float(d), d, CPKind.DEPHASING)


def _p(cycles: str, n: int = 4) -> Permutation:
    return Permutation.from_cycles(cycles, n)


Y_GROUPS = {
    "1": ("e",),
    "T12": ("(12)",),
    "T34": ("(34)",),
    "Y2": ("(13)", "(14)", "(23)", "(24)"),
    "Y3+": ("(123)", "(124)", "(132)", "(142)"),
    "Y3-": ("(234)", "(134)", "(243)", "(143)"),
    "Y4_1": ("(1234)", "(1432)", "(1243)", "(1342)"),
    "Y4_2": ("(1324)", "(1423)"),
    "T12_34": ("(12)(34)",),
    "Y22": ("(14)(23)", "(13)(24)"),
}


def _from_groups(d: int, group_coeffs: dict) -> TwirlOperator:
    coeffs = {}
    for name, val in group_coeffs.items():
        for cyc in Y_GROUPS[name]:
            coeffs[_p(cyc)] = val
    return TwirlOperator(2, d, coeffs)


def _scalar(ff: FormFactors):
    if np.ndim(ff.c2):
        raise ValueError("twirl operators take scalar FormFactors; use ff.at(i)")
    return complex(ff.c2).real, complex(ff.c3), complex(ff.c4).real, complex(ff.c2_2t).real


def r2(ff: FormFactors) -> TwirlOperator:
    """Two-fold twirl ``(c2-1)/(d²-1) 1 + (d²-c2)/(d(d²-1)) T``."""
    d = ff.d
    if d < 2:
        raise ValueError("d must be >= 2")
    c2 = _scalar(ff)[0]
    return TwirlOperator(
        1, d, {_p("e", 2): (c2 - 1) / (d**2 - 1), _p("(12)", 2): (d**2 - c2) / (d * (d**2 - 1))}
    )


def r4(ff: FormFactors) -> TwirlOperator:
    """Four-fold twirl in closed form, grouped by the ``Y`` classes.

    Requires ``d ≥ 4``; the prefactor ``(d²-1)(d²-4)(d²-9)`` vanishes below.
    The Re c3 terms carry ``c3 + conj(c3)`` and the ``T_(12)(34)`` constant is
    ``-2d²(d²-9)``, as fixed by the generic construction :func:`r2k`.
    """
    d = ff.d
    if d < 4:
        raise SingularGramError("closed-form R4 needs d >= 4")
    c2, c3, c4, c22 = _scalar(ff)
    c3b = np.conj(c3)
    re3 = 2 * c3.real  # the Weingarten solve gives c3 + conj(c3) = 2 Re c3
    a = 4 * d - d**3
    b = d**4 - 8 * d**2 + 6
    g = {
        "1": (c4 - 4 * c2) * b + c22 * (d**2 + 6) + re3 * a + 2 * d**4 - 18 * d**2,
        "T12": a * (-4 * c2 + c22 + c4) + c3 * b + c3b * (d**2 + 6),
        "Y2": c4 * a + c2 * (d**5 - 7 * d**3 + 2 * d) - 5 * c22 * d + (2 * d**2 - 3) * re3
        - d**5 + 9 * d**3,
        "T34": (c4 + c22 - 4 * c2) * a + c3 * (6 + d**2) + c3b * b,
        "Y3+": (c4 + c22) * (2 * d**2 - 3) - c2 * (d**4 - d**2 - 12) + c3 * a - 5 * c3b * d
        + d**4 - 9 * d**2,
        "Y3-": (c4 + c22) * (2 * d**2 - 3) - c2 * (d**4 - d**2 - 12) + c3b * a - 5 * c3 * d
        + d**4 - 9 * d**2,
        "Y4_1": c2 * (2 * d**3 + 2 * d) + c22 * a + (2 * d**2 - 3) * re3 - 5 * c4 * d,
        "Y4_2": c2 * (4 * d**3 - 16 * d) + (d**2 + 6) * re3 - 5 * d * (c22 + c4) - d**5 + 9 * d**3,
        "T12_34": (6 + d**2) * (c4 - 4 * c2) - d * (d**2 - 4) * re3 + b * c22
        - 2 * d**2 * (d**2 - 9),
        "Y22": c2 * (-2 * d**4 + 14 * d**2 - 24) + (d**2 + 6) * (c22 + c4) - 5 * d * re3
        + d**6 - 11 * d**4 + 18 * d**2,
    }
    norm = d**2 * (d**6 - 14 * d**4 + 49 * d**2 - 36)
    return _from_groups(d, {k: v / norm for k, v in g.items()})


def asymptotic_r4(d: int) -> TwirlOperator:
    """Late-time ensemble average of ``R4`` (``c2 = Re c3 = c2(2t) = d``)."""
    s = 1.0 / (d * (d + 1) * (d + 2) * (d + 3))
    return _from_groups(
        d,
        {
            "1": s * (2 * d**2 + 7 * d + 4),
            "T12": -s * (2 + d),
            "T34": -s * (2 + d),
            "Y2": s * (d**2 + 3 * d + 1),
            "Y3+": -s * (2 + d),
            "Y3-": -s * (2 + d),
            "Y4_2": -s * (2 + d),
            "Y4_1": s,
            "Y22": s * (d**2 + 4 * d + 4),
            "T12_34": s * (4 + d),
        },
    )


def _net_powers(p: Permutation, k: int) -> list[int]:
    return [sum(1 if m <= k else -1 for m in cyc) for cyc in p.cycles(include_fixed=True)]


def cycle_trace(p: Permutation, ff: FormFactors) -> complex:
    """``tr(T_p U^{⊗k,k})`` as a monomial in the form factors (``k ≤ 2``)."""
    k = p.n // 2
    if p.n != 2 * k or k > 2:
        raise ValueError("cycle_trace supports S_2 and S_4")
    c2, c3, c4, c22 = _scalar(ff)
    powers = _net_powers(p, k)
    zeros = powers.count(0)
    rest = tuple(sorted(x for x in powers if x != 0))
    table = {
        (): 1.0,
        (-1, 1): c2,
        (-1, -1, 2): c3,
        (-2, 1, 1): np.conj(c3),
        (-1, -1, 1, 1): c4,
        (-2, 2): c22,
    }
    return complex(float(ff.d) ** zeros * table[rest])


# Monomials spanning the cycle traces, per k.
MONOMIALS = {1: ("1", "c2"), 2: ("1", "c2", "c3", "conj_c3", "c4", "c2_2t")}
_MONO_KEY = {(): "1", (-1, 1): "c2", (-1, -1, 2): "c3", (-2, 1, 1): "conj_c3",
             (-1, -1, 1, 1): "c4", (-2, 2): "c2_2t"}


@lru_cache(maxsize=32)
def coefficient_basis(k: int, d: int) -> tuple[tuple[Fraction, ...], ...]:
    """Exact ``K`` with ``a_σ = Σ_j K[σ][j] m_j`` over :data:`MONOMIALS`.

    Rows follow :func:`enumerate_group` order.
    """
    if k not in (1, 2):
        raise ValueError("coefficient basis available for k in {1, 2}")
    names = MONOMIALS[k]
    group = enumerate_group(2 * k)
    m = [[Fraction(0)] * len(names) for _ in group]
    for i, p in enumerate(group):
        powers = _net_powers(p, k)
        rest = tuple(sorted(x for x in powers if x != 0))
        m[i][names.index(_MONO_KEY[rest])] = Fraction(int(d) ** powers.count(0))
    w = weingarten_exact(2 * k, d)
    n = len(group)
    return tuple(
        tuple(sum(w[i][s] * m[s][j] for s in range(n)) for j in range(len(names)))
        for i in range(n)
    )


def twirl_dense(x: np.ndarray, k: int, d: int) -> TwirlOperator:
    """Twirl ``∫ G^{†⊗2k} X G^{⊗2k}`` of an arbitrary dense operator."""
    size = d ** (2 * k)
    x = np.asarray(x)
    if x.shape != (size, size):
        raise ValueError(f"operator must be {size}x{size}")
    group = enumerate_group(2 * k)
    cols = np.arange(size)
    # tr(T_p X) = Σ_j X[j, r(j)] since T_p has ones at (r(j), j)
    c = np.array([x[cols, permutation_image(p, d)].sum() for p in group])
    return _solve(k, d, c)


def conjugate(op: TwirlOperator, p: Permutation) -> TwirlOperator:
    """``T_p R T_p^†`` as coefficients."""
    pinv = p.inverse()
    return TwirlOperator(op.k, op.d, {compose(compose(p, s), pinv): v for s, v in op.coeffs.items()})


def _solve(k: int, d: int, c: np.ndarray) -> TwirlOperator:
    tab = weingarten(2 * k, d)
    a = tab.omega_inv @ c
    return TwirlOperator(k, d, {p: complex(v) for p, v in zip(tab.elements, a)})


def r2k(ff: FormFactors, k: int) -> TwirlOperator:
    """Generic Weingarten construction ``a = Ω^{-1} c`` for ``k ∈ {1, 2}``."""
    if k not in (1, 2):
        raise ValueError("form-factor input supports k in {1, 2}; use r2k_from_spectrum")
    group = enumerate_group(2 * k)
    c = np.array([cycle_trace(p, ff) for p in group])
    return _solve(k, ff.d, c)


def r2k_from_spectrum(energies, t: float, k: int) -> TwirlOperator:
    """Twirl of ``exp(-iHt)^{⊗k,k}`` for an explicit spectrum, any ``k ≤ 3``."""
    e = np.asarray(energies, dtype=float)
    d = len(e)
    if not 1 <= k <= 3:
        raise ValueError("k must be in 1..3")
    z = {p: np.exp(-1j * p * e * t).sum() for p in range(-k, k + 1)}
    c = []
    for p in enumerate_group(2 * k):
        val = 1.0 + 0j
        for q in _net_powers(p, k):
            val *= z[q]
        c.append(val)
    return _solve(k, d, np.array(c))


def r2_cp(spec: CPMapSpec) -> TwirlOperator:
    """Two-fold twirl of a CP map, ``((d²-tr𝒦) T + d (tr𝒦-1)) / (d(d²-1))``."""
    d, tk = spec.d, spec.trace_of_K
    s = 1.0 / (d * (d**2 - 1))
    return TwirlOperator(1, d, {_p("e", 2): s * d * (tk - 1), _p("(12)", 2): s * (d**2 - tk)})


def haar_twirl_limit(k: int, d: int) -> TwirlOperator:
    """Haar average over ``U`` of the twirl."""
    if k == 1:
        return TwirlOperator(1, d, {_p("(12)", 2): 1.0 / d})
    if k == 2:
        a = 1.0 / (d**2 - 1)
        b = -1.0 / (d * (d**2 - 1))
        return _from_groups(d, {"Y22": a, "Y4_2": b})
    raise ValueError("haar limit available for k in {1, 2}")


def to_matrix(op: TwirlOperator) -> np.ndarray:
    """Dense ``Σ a_σ T_σ`` on ``(C^d)^{⊗2k}``."""
    size = op.d ** (2 * op.k)
    if size > MAX_MATRIX_SIZE:
        raise ValueError(f"d^(2k) = {size} exceeds the {MAX_MATRIX_SIZE} size guard")
    out = np.zeros((size, size), dtype=complex)
    cols = np.arange(size)
    for p, v in op.coeffs.items():
        if v != 0:
            out[permutation_image(p, op.d), cols] += v
    return out
