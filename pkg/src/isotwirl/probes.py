"""Quantum-chaos probes as functions of the form factors.

Every probe has the shape ``tr(T_π O R^{(2k)}(U))`` for a fixed contraction
``π`` and observable ``O``, so it is linear in the monomials
``(1, c2, c3, conj c3, c4, c2(2t))``. Printed closed forms are used where
they survive a check against :func:`generic_probe`; the others go through
:func:`contract`, which sums exact Weingarten coefficients against traces of
``T_{σ∘π} O`` and is valid at any ``d``.

All functions accept scalar or array-valued :class:`FormFactors` and return
arrays of matching shape. Logarithms are natural except for the tripartite
mutual information, which is reported in bits.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .formfactors import FormFactors
from .permgroup import (
    MAX_MATRIX_SIZE,
    Permutation,
    compose,
    cycle_count,
    enumerate_group,
    permutation_image,
    permuted_trace,
    weingarten_exact,
)
from .twirl import MONOMIALS, CPKind, CPMapSpec, TwirlOperator, coefficient_basis, to_matrix

__all__ = [
    "PROBES",
    "LOG_FLOOR",
    "ClampWarning",
    "SceneParams",
    "contract",
    "generic_probe",
    "frame_potential_k1",
    "frame_potential_bound",
    "loschmidt1",
    "otoc2",
    "otoc4_pauli",
    "loschmidt2_pauli",
    "entanglement_purity",
    "entanglement_bound",
    "mutual_information_bound",
    "tmi_bound",
    "coherence",
    "coherence_random_basis",
    "wyd_skew",
    "convergence_f",
    "work",
    "work_fluctuations",
    "free_energy_bounds",
    "cp_probes",
    "typicality_bounds",
]

LOG_FLOOR = 1e-300

# Closed enumeration of probe names, shared with the CLI.
PROBES = (
    "frame-potential",
    "loschmidt1",
    "otoc2",
    "otoc4",
    "loschmidt2",
    "entanglement",
    "mutual-information",
    "tmi",
    "coherence",
    "convergence",
    "work",
    "work-fluct",
    "free-energy",
)


class ClampWarning(RuntimeWarning):
    """A log argument fell below :data:`LOG_FLOOR` and was clamped."""


@dataclass(frozen=True)
class SceneParams:
    """Subsystem dimensions, state purities and battery parameters.

    ``dA``/``dB`` default to ``√d`` when ``d`` is a perfect square, else
    ``(1, d)``; ``dC``/``dD`` default to ``dA``/``dB``.
    """

    d: int
    dA: int | None = None
    dB: int | None = None
    dC: int | None = None
    dD: int | None = None
    purity_psi: float = 1.0
    purity_A: float | None = None
    purity_B: float | None = None
    deph_purity: float = 1.0
    E0: float = 1.0
    E_HT: float = 0.0
    trH0sq: float | None = None
    beta_eps: float = 1.0

    def __post_init__(self):
        d = int(self.d)
        if d < 2:
            raise ValueError("d must be >= 2")
        dA, dB = self.dA, self.dB
        if dA is None and dB is None:
            r = math.isqrt(d)
            dA, dB = (r, r) if r * r == d else (1, d)
        elif dA is None:
            dA = d // dB
        elif dB is None:
            dB = d // dA
        if dA * dB != d:
            raise ValueError(f"dA*dB = {dA}*{dB} != d = {d}")
        dC = dA if self.dC is None and self.dD is None else self.dC
        dD = dB if self.dC is None and self.dD is None else self.dD
        if dC is None:
            dC = d // dD
        if dD is None:
            dD = d // dC
        if dC * dD != d:
            raise ValueError(f"dC*dD = {dC}*{dD} != d = {d}")
        pa = self.purity_psi if self.purity_A is None else self.purity_A
        pb = pa if self.purity_B is None else self.purity_B
        for name, v in (("purity_psi", self.purity_psi), ("purity_A", pa),
                        ("purity_B", pb), ("deph_purity", self.deph_purity)):
            if not 0.0 < v <= 1.0 + 1e-12:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if pa < 1.0 / dA - 1e-12:
            raise ValueError("purity_A must be >= 1/dA")
        trh = self.trH0sq if self.trH0sq is not None else d * (1.0 + self.E_HT**2)
        for name, v in (("d", d), ("dA", dA), ("dB", dB), ("dC", dC), ("dD", dD),
                        ("purity_A", pa), ("purity_B", pb), ("trH0sq", trh)):
            object.__setattr__(self, name, v)

    @property
    def energy_variance(self) -> float:
        """``tr(H0²)/d − E_HT²``."""
        return self.trH0sq / self.d - self.E_HT**2

    @property
    def h(self) -> float:
        """Battery control parameter ``4 E0 E_HT / (tr(H0²)/d − E_HT²)``."""
        return 4.0 * self.E0 * self.E_HT / self.energy_variance

    @classmethod
    def battery(cls, d: int, h: float, **kw) -> "SceneParams":
        """Unit-variance ``H0`` with ``E_HT = 1/2`` and ``E0`` fixed by ``h``."""
        return cls(d=d, E_HT=0.5, E0=h / 2.0, trH0sq=d * 1.25, **kw)


# ---------------------------------------------------------------- helpers


def _parts(ff: FormFactors):
    c2 = np.real(np.asarray(ff.c2, dtype=complex))
    c3 = np.asarray(ff.c3, dtype=complex)
    c4 = np.real(np.asarray(ff.c4, dtype=complex))
    c22 = np.real(np.asarray(ff.c2_2t, dtype=complex))
    return float(ff.d), c2, c3, c4, c22


def _out(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def _safe_log(x, base=None):
    x = np.asarray(x, dtype=float)
    low = ~(x > LOG_FLOOR)
    if np.any(low):
        warnings.warn("log argument clamped at 1e-300", ClampWarning, stacklevel=3)
        x = np.where(low, LOG_FLOOR, x)
    out = np.log(x)
    return out / math.log(base) if base else out


def _monomial_values(ff: FormFactors, k: int) -> list:
    _, c2, c3, c4, c22 = _parts(ff)
    table = {"1": np.ones_like(c2), "c2": c2, "c3": c3, "conj_c3": np.conj(c3),
             "c4": c4, "c2_2t": c22}
    return [table[name] for name in MONOMIALS[k]]


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def contract(ff: FormFactors, k: int, pi: Permutation, weight, values: dict | None = None,
             basis=None):
    """``tr(T_π O R^{(2k)})`` from the traces ``weight(q) = tr(T_q O)``.

    ``weight`` returns a number, or a dict ``{key: coefficient}`` read as
    ``Σ coefficient · values[key]`` over scene invariants. Integer or
    fractional coefficients are summed exactly against the Weingarten basis,
    so large-``d`` cancellations cost no digits. ``basis`` overrides the
    twirl's monomial coefficients (rows in group order).
    """
    group = enumerate_group(2 * k)
    if basis is None:
        basis = coefficient_basis(k, int(ff.d))
    terms = []
    for s in group:
        w = weight(compose(s, pi))
        terms.append(w if isinstance(w, dict) else {None: w})
    vals = {None: 1.0, **(values or {})}
    keys = sorted({key for t in terms for key in t}, key=repr)
    total = 0.0
    for j, mono in enumerate(_monomial_values(ff, k)):
        coef = 0.0
        for key in keys:
            col = [t.get(key, 0) for t in terms]
            if all(_is_exact(c) for c in col):
                v = float(sum(basis[i][j] * c for i, c in enumerate(col) if c))
            else:
                v = sum(complex(basis[i][j]) * c for i, c in enumerate(col))
            coef = coef + v * vals[key]
        total = total + coef * mono
    return _out(total)


def generic_probe(op: TwirlOperator, contraction: Permutation, observable) -> complex:
    """``tr(T_π/tr(T_π) · O · R)`` with dense ``O`` and dense ``R``."""
    n = 2 * op.k
    if contraction.n != n:
        raise ValueError(f"contraction must be a permutation of degree {n}")
    size = op.d**n
    if size > MAX_MATRIX_SIZE:
        raise ValueError(f"d^(2k) = {size} exceeds the {MAX_MATRIX_SIZE} size guard")
    obs = np.asarray(observable)
    if obs.shape != (size, size):
        raise ValueError(f"observable must be {size}x{size}")
    rmat = to_matrix(op)
    # T_π O permutes the rows of O; tr(A B) = Σ A ∘ B^T
    po = np.empty_like(obs, dtype=complex)
    po[permutation_image(contraction, op.d)] = obs
    val = np.einsum("ij,ji->", po, rmat)
    return complex(val / float(op.d) ** cycle_count(contraction))


# ------------------------------------------------------- frame potential


def frame_potential_k1(ff: FormFactors):
    """``F^(1) = d²/(d²-1) (d² c̃4 − 2 c̃2 + 1)``."""
    d = float(ff.d)
    return _out(d**2 / (d**2 - 1) * (d**2 * ff.ct4 - 2 * ff.ct2 + 1))


def frame_potential_bound(ff: FormFactors):
    """Lower bound ``d^{-2}|tr U|⁴ = d² c̃2²`` (Jensen keeps it valid for averages)."""
    return _out(float(ff.d) ** 2 * np.asarray(ff.ct2) ** 2)


# ------------------------------------------------------ echoes and OTOCs


def loschmidt1(ff: FormFactors):
    """``⟨L1⟩ = (d c̃2 + 1)/(d + 1)``."""
    d = float(ff.d)
    return _out((d * ff.ct2 + 1) / (d + 1))


def otoc2(ff: FormFactors, trA: complex, norm2A_sq: float):
    """Two-point OTOC from ``tr A`` and ``‖A‖₂²``."""
    d, c2, *_ = _parts(ff)
    return _out((c2 - 1) / (d**2 - 1) * norm2A_sq / d
                + (d**2 - c2) / (d**2 - 1) * abs(trA) ** 2 / d**2)


def _require_d(ff: FormFactors, low: int):
    if ff.d < low:
        raise ValueError(f"closed form is singular for d < {low}")


def otoc4_pauli(ff: FormFactors):
    """Four-point OTOC of two non-overlapping Pauli operators."""
    _require_d(ff, 4)
    d, c2, c3, c4, c22 = _parts(ff)
    num = d * (c4 - 4 * c2 + c22 - d**2 + 9) - 6 * c3.real
    return _out(num / (d * (d**4 - 10 * d**2 + 9)))


def loschmidt2_pauli(ff: FormFactors):
    """Loschmidt echo of the second kind for a Pauli perturbation."""
    _require_d(ff, 4)
    d, c2, c3, c4, c22 = _parts(ff)
    num = (d**2 - 6) * (c4 - 4 * c2 + c22) - 2 * d * c3.real + d**4 - 9 * d**2
    return _out(num / (d**2 * (d**4 - 10 * d**2 + 9)))


# ------------------------------------------------ entanglement and TMI


def entanglement_purity(ff: FormFactors, params: SceneParams, part: str = "A"):
    """``⟨tr ψ_A(t)²⟩`` upper estimate ``tr(T_(13)(24) R4 ψ^{⊗2} ⊗ T_(A))``.

    ``part="B"`` swaps the roles of the two subsystems.
    """
    _require_d(ff, 4)
    d, c2, c3, c4, c22 = _parts(ff)
    dA, dB = (params.dA, params.dB) if part == "A" else (params.dB, params.dA)
    pa, pb = (params.purity_A, params.purity_B) if part == "A" else (params.purity_B, params.purity_A)
    p = params.purity_psi
    delta = c4 + c22 - 4 * c2
    re3 = c3.real
    if p >= 1.0 - 1e-12:
        # pure state, tr ψ_A² = tr ψ_B²
        num = (d + 1) * pa * (delta + 2 * re3) + (-delta - 2 * re3 - 3 * d**2 + 2 * d**3 + d**4) * (dA + dB)
        return _out(num / (d**2 * (d + 3) * (d + 1) * (d - 1)))
    pi = Permutation.from_cycles("(13)(24)", 4)
    swap34 = Permutation.from_cycles("(34)", 4)
    values = {"1": 1.0, "P": p, "Pa": pa, "Pb": pb}
    return _out(np.real(contract(ff, 2, pi, _purity_weight(dA, dB, swap34), values)))


def _reduce_slots(q: Permutation) -> tuple[bool, int]:
    # trace out identity slots 3, 4: (slots 1, 2 joined?, closed cycles)
    cycles = q.cycles(include_fixed=True)
    joined = any(1 in c and 2 in c for c in cycles)
    closed = sum(1 for c in cycles if 1 not in c and 2 not in c)
    return joined, closed


_PURITY_KEY = {(False, False): "1", (True, True): "P", (True, False): "Pa", (False, True): "Pb"}


def _purity_weight(dA: int, dB: int, swap34: Permutation):
    # tr(T_q ρ⊗ρ⊗T_(A)) with T_q = T_q^A ⊗ T_q^B and T_(A) swapping A in slots 3, 4
    def weight(q: Permutation) -> dict:
        ja, ca = _reduce_slots(compose(q, swap34))
        jb, cb = _reduce_slots(q)
        return {_PURITY_KEY[ja, jb]: dA**ca * dB**cb}
    return weight


def entanglement_bound(ff: FormFactors, params: SceneParams):
    """Lower bound on ``⟨S₂(ψ_A(t))⟩`` (natural log)."""
    return _out(-_safe_log(entanglement_purity(ff, params)))


def mutual_information_bound(ff: FormFactors, params: SceneParams):
    """Lower bound ``log p − log ⟨tr ψ_A²⟩ − log ⟨tr ψ_B²⟩`` on ``⟨I₂(A:B)⟩``."""
    pa = entanglement_purity(ff, params, "A")
    pb = entanglement_purity(ff, params, "B")
    return _out(math.log(params.purity_psi) - _safe_log(pa) - _safe_log(pb))


def _split_weight(dc: int, dd: int, on_c: Permutation, on_d: Permutation):
    # tr(T_q (T_C-part ⊗ T_D-part)) factorises over C and D
    def weight(q: Permutation) -> int:
        return dc ** cycle_count(compose(q, on_c)) * dd ** cycle_count(compose(q, on_d))
    return weight


def tmi_bound(ff: FormFactors, params: SceneParams):
    """Upper bound on the 2-Rényi tripartite mutual information, in bits.

    ``log d + log tr(T̃_(13)(24) R4 T_(C)^{⊗2}) + log tr(T̃_(13)(24) R4 T_(C)⊗T_(D))``,
    contracted exactly over S_4.
    """
    _require_d(ff, 4)
    d, dc, dd = int(ff.d), params.dC, params.dD
    pi = Permutation.from_cycles("(13)(24)", 4)
    e = Permutation.identity(4)
    both_c = Permutation.from_cycles("(12)(34)", 4)
    first = Permutation.from_cycles("(12)", 4)
    second = Permutation.from_cycles("(34)", 4)
    norm = float(d) ** 2
    x1 = np.real(contract(ff, 2, pi, _split_weight(dc, dd, both_c, e))) / norm
    x2 = np.real(contract(ff, 2, pi, _split_weight(dc, dd, first, second))) / norm
    return _out(math.log2(d) + _safe_log(x1, 2) + _safe_log(x2, 2))


# ------------------------------------------------------------- coherence


def _cycle_words(q: Permutation, labels) -> list[tuple]:
    # label words in permuted_trace order: m, q^{-1}(m), ...
    inv = q.inverse()
    words = []
    for cyc in q.cycles(include_fixed=True):
        m, word = cyc[0], [labels[cyc[0] - 1]]
        nxt = inv(m)
        while nxt != m:
            word.append(labels[nxt - 1])
            nxt = inv(nxt)
        words.append(tuple(word))
    return words


def _coherence_weight(d: int, deph: float):
    # Σ_i tr(T_q Π_i⊗Π_i⊗ψ⊗ψ) for pure ψ with Σ_i ⟨i|ψ|i⟩² = deph
    def weight(q: Permutation):
        words = _cycle_words(q, ("P", "P", "S", "S"))
        # each cyclic P→S step contributes one factor ⟨i|ψ|i⟩
        power = sum(
            1 for w in words for j in range(len(w)) if w[j] == "S" and w[j - 1] == "P"
        )
        if power == 0:
            return d
        return 1 if power == 1 else deph
    return weight


def coherence(ff: FormFactors, params: SceneParams):
    """2-coherence ``1 − Σ_i tr(T_(13)(24)(Π_i⊗Π_i⊗ψ^{⊗2}) R4)`` of a pure state."""
    _require_d(ff, 4)
    pi = Permutation.from_cycles("(13)(24)", 4)
    val = contract(ff, 2, pi, _coherence_weight(int(ff.d), params.deph_purity))
    return _out(1.0 - np.real(val))


def coherence_random_basis(purity: float, d: int) -> float:
    """Average coherence in a Haar-random basis, ``Pur − (1 + Pur)/(d + 1)``."""
    return purity - (1.0 + purity) / (d + 1)


# ----------------------------------------------------------------- WYD


def _density_power(rho: np.ndarray, power: float) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    return (v * w**power) @ v.conj().T


def wyd_skew(ff: FormFactors, X, rho, eta: float):
    """Wigner-Yanase-Dyson skew information averaged over the isospectral ensemble.

    ``tr(T_(12)(X²⊗ρ) R2) − tr(T_(1423)(X^{⊗2}⊗ρ^{1-η}⊗ρ^η) R4)`` contracted
    with explicit matrix traces.
    """
    X = np.asarray(X, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    d = int(ff.d)
    if X.shape != (d, d) or rho.shape != (d, d):
        raise ValueError(f"X and rho must be {d}x{d}")
    if not np.allclose(rho, rho.conj().T, atol=1e-10) or abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("rho must be Hermitian with unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("rho must be positive semidefinite")
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    _require_d(ff, 4)
    ra, rb = _density_power(rho, 1 - eta), _density_power(rho, eta)
    ops2 = (X @ X, rho)
    ops4 = (X, X, ra, rb)
    a = contract(ff, 1, Permutation.from_cycles("(12)", 2), lambda q: permuted_trace(q, ops2))
    b = contract(ff, 2, Permutation.from_cycles("(1423)", 4), lambda q: permuted_trace(q, ops4))
    return _out(np.real(np.asarray(a) - np.asarray(b)))


# --------------------------------------------------------- thermodynamics


def _diagonal_trace(q: Permutation, slots: str, d: int) -> tuple[str, int]:
    """``tr(T_q Y)`` for ``Y`` diagonal in the energy basis.

    ``slots`` labels each tensor slot ``U``, ``V`` (= U†) or a summed
    projector index ``i``/``j``. Cycles sharing an index merge into one sum;
    each group gives ``tr U^p`` with ``p`` its net power (``d`` when ``p = 0``).
    """
    groups: list[tuple[set, int]] = []
    for cyc in q.cycles(include_fixed=True):
        labels = {slots[m - 1] for m in cyc} & {"i", "j"}
        power = sum(1 if slots[m - 1] == "U" else -1 if slots[m - 1] == "V" else 0 for m in cyc)
        for g in [g for g in groups if g[0] & labels]:
            groups.remove(g)
            labels |= g[0]
            power += g[1]
        groups.append((labels, power))
    powers = sorted(p for _, p in groups)
    rest = tuple(p for p in powers if p != 0)
    return {(): "1", (-1, 1): "c2"}[rest], d ** powers.count(0)


def _diagonal_basis(slots: str, d: int) -> list[list[Fraction]]:
    # Weingarten coefficients of the twirl of a diagonal operator, per monomial
    names = MONOMIALS[2]
    group = enumerate_group(4)
    c = [[Fraction(0)] * len(names) for _ in group]
    for r, q in enumerate(group):
        key, coef = _diagonal_trace(q, slots, d)
        c[r][names.index(key)] = Fraction(coef)
    w = weingarten_exact(4, d)
    n = len(group)
    return [[sum(w[a][b] * c[b][m] for b in range(n)) for m in range(len(names))] for a in range(n)]


@lru_cache(maxsize=16)
def _equilibration_basis(d: int) -> tuple:
    # Θ = R4(U) + twirl(Σ Π_i⊗Π_j⊗Π_i⊗Π_j) − 2 twirl(Σ U⊗Π_j⊗U†⊗Π_j)
    unitary = coefficient_basis(2, d)
    dephased = _diagonal_basis("ijij", d)
    hybrid = _diagonal_basis("UjVj", d)
    return tuple(
        tuple(unitary[a][m] + dephased[a][m] - 2 * hybrid[a][m] for m in range(len(MONOMIALS[2])))
        for a in range(len(unitary))
    )


def convergence_f(ff: FormFactors, params: SceneParams):
    """Squared 2-norm distance ``‖ψ_A(t) − ω_A‖₂²`` from the dephased equilibrium.

    ``ω = D_H(ψ)`` dephases in the energy basis; the three terms of the
    square are twirled jointly and contracted exactly against
    ``ψ^{⊗2} ⊗ T_(A)``, using the purities held in ``params``.
    """
    _require_d(ff, 4)
    pi = Permutation.from_cycles("(13)(24)", 4)
    swap34 = Permutation.from_cycles("(34)", 4)
    values = {"1": 1.0, "P": params.purity_psi, "Pa": params.purity_A, "Pb": params.purity_B}
    val = contract(ff, 2, pi, _purity_weight(params.dA, params.dB, swap34), values,
                   basis=_equilibration_basis(int(ff.d)))
    return _out(np.real(val))


def work(ff: FormFactors):
    """Normalized average work ``(d² − c2)/(d² − 1)``."""
    d, c2, *_ = _parts(ff)
    return _out((d**2 - c2) / (d**2 - 1))


def _battery_weight(labels):
    # tr(T_q ...) for ψ an eigenstate of H0: keys are powers of (E0, tr H0, tr H0²)
    def weight(q: Permutation) -> dict:
        e0 = tr1 = tr2 = 0
        for w in _cycle_words(q, labels):
            nh = w.count("H")
            if "S" in w:
                e0 += nh
            elif nh == 1:
                tr1 += 1
            else:
                tr2 += 1
        return {(e0, tr1, tr2): 1}
    return weight


def _battery_values(params: SceneParams, k: int) -> dict:
    d = params.d
    base = (params.E0, params.E_HT * d, params.trH0sq)
    return {
        (a, b, c): base[0] ** a * base[1] ** b * base[2] ** c
        for a in range(2 * k + 1) for b in range(2 * k + 1) for c in range(k + 1)
    }


def work_fluctuations(ff: FormFactors, params: SceneParams):
    """Normalized work variance for an eigenstate of ``H0``.

    ``(tr(T_(13)(24) R4 ψ^{⊗2}⊗H0^{⊗2}) − tr(T R2 ψ⊗H0)²) / (tr(H0²)/d − E_HT²)``,
    contracted exactly; requires a nondegenerate ``H0``.
    """
    _require_d(ff, 4)
    var = params.energy_variance
    if not var > 0:
        raise ValueError("tr(H0^2)/d must exceed E_HT^2 (degenerate H0)")
    x = contract(ff, 1, Permutation.from_cycles("(12)", 2), _battery_weight("SH"),
                 _battery_values(params, 1))
    x2 = contract(ff, 2, Permutation.from_cycles("(13)(24)", 4), _battery_weight("SSHH"),
                  _battery_values(params, 2))
    return _out(np.real(np.asarray(x2) - np.asarray(x) ** 2) / var)


def free_energy_bounds(ff: FormFactors, params: SceneParams):
    """``(lower, upper)`` on the normalized change of extractable work.

    ``upper = W̃ + ε^{-1} log⟨tr ψ_A²⟩`` with the exact purity contraction;
    ``lower = W̃ − ε^{-1} log d_A``.
    """
    eps = params.beta_eps
    if not eps > 0:
        raise ValueError("beta_eps must be positive")
    if params.dA < 2:
        raise ValueError("dA must be >= 2")
    w = np.asarray(work(ff))
    lower = w - math.log(params.dA) / eps
    upper = w + _safe_log(entanglement_purity(ff, params)) / eps
    return _out(lower), _out(upper)


# ---------------------------------------------------------------- CP maps


def cp_probes(spec: CPMapSpec, purity: float) -> dict:
    """Loschmidt echo of a twirled CP map and, for dephasing, the output purity."""
    if not 0.0 < purity <= 1.0 + 1e-12:
        raise ValueError("purity must lie in (0, 1]")
    d, tk = spec.d, spec.trace_of_K
    l1 = ((d**2 - tk) + d * purity * (tk - 1)) / (d * (d**2 - 1))
    l1 = float(np.real(l1))
    out = {"loschmidt1_cp": l1, "purity_out": math.nan}
    if spec.kind is CPKind.DEPHASING:
        out["purity_out"] = l1
    return out


# ------------------------------------------------------------- typicality


def typicality_bounds(ff: FormFactors, delta: float, k: int = 1,
                      norm_O: float = 1.0, trace_T: float | None = None) -> dict:
    """Chebyshev bounds on ``c̃2``/``c̃4`` deviations and the Lévy bound.

    ``ff`` holds ensemble means; ``trace_T`` defaults to ``d^{2k}``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    d = float(ff.d)
    ct2, ct4 = np.asarray(ff.ct2), np.asarray(ff.ct4)
    tt = d ** (2 * k) if trace_T is None else trace_T
    expo = -d * delta**2 * tt**2 / (72 * k**2 * norm_O**2 * math.pi**3)
    return {
        "chebyshev_c2": _out(np.maximum(ct4 - ct2**2, 0.0) / delta**2),
        "chebyshev_c4": _out(ct4 / delta**2),
        "levy": 4.0 * math.exp(expo),
    }
