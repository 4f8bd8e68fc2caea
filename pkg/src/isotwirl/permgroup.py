"""Symmetric groups, permutation operators and Weingarten coefficients.

Permutations act on tensor slots ``1..n``. The operator ``T_p`` moves the
content of slot ``m`` to slot ``p(m)``, so that ``T_p T_q = T_{p∘q}`` and

    tr(T_p (A_1 ⊗ ... ⊗ A_n)) = prod over cycles of tr(A_m A_{p^{-1}(m)} ...).

With this convention ``tr(T_(324) (A⊗B⊗C⊗D)) = tr(A) tr(BCD)``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "Permutation",
    "WeingartenTable",
    "SingularGramError",
    "enumerate_group",
    "compose",
    "cycle_count",
    "trace_power",
    "gram_matrix",
    "weingarten",
    "weingarten_exact",
    "permuted_trace",
    "permutation_matrix",
    "permutation_image",
]

MAX_DEGREE = 8
MAX_GRAM_DEGREE = 6
MAX_MATRIX_SIZE = 4096
WG_RESIDUAL_TOL = 1e-10


class SingularGramError(ValueError):
    """Raised when the Gram matrix is singular (d < n)."""


@dataclass(frozen=True)
class Permutation:
    """Element of S_n stored as the image list of ``1..n``.

    Parameters
    ----------
    mapping : tuple of int
        ``mapping[m-1]`` is the image of ``m``.
    """

    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.mapping)
        if sorted(m) != list(range(1, len(m) + 1)):
            raise ValueError(f"not a bijection of 1..{len(m)}: {m}")
        object.__setattr__(self, "mapping", m)

    @property
    def n(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, cycles, n: int) -> "Permutation":
        """Build from cycle notation.

        ``cycles`` is either a string such as ``"(12)(34)"`` / ``"(1 2)(3 4)"``
        / ``"e"`` or an iterable of integer tuples.
        """
        if isinstance(cycles, str):
            cycles = _parse_cycles(cycles)
        img = list(range(1, n + 1))
        seen = set()
        for cyc in cycles:
            cyc = [int(c) for c in cyc]
            for c in cyc:
                if not 1 <= c <= n or c in seen:
                    raise ValueError(f"invalid cycle element {c} for n={n}")
                seen.add(c)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                img[a - 1] = b
        return cls(tuple(img))

    def __call__(self, m: int) -> int:
        return self.mapping[m - 1]

    def cycles(self, include_fixed: bool = False) -> list[tuple[int, ...]]:
        """Canonical cycles: each starts at its smallest element, sorted."""
        seen = set()
        out = []
        for start in range(1, self.n + 1):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            nxt = self(start)
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            if len(cyc) > 1 or include_fixed:
                out.append(tuple(cyc))
        return out

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.mapping, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return self.mapping == tuple(range(1, self.n + 1))

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def __str__(self) -> str:
        cyc = self.cycles()
        if not cyc:
            return "e"
        sep = "" if self.n < 10 else " "
        return "".join("(" + sep.join(str(c) for c in c_) + ")" for c_ in cyc)

    def __repr__(self) -> str:
        return f"Permutation({str(self)!r}, n={self.n})"


def _parse_cycles(text: str) -> list[tuple[int, ...]]:
    text = text.strip()
    if text in ("", "e", "()", "id"):
        return []
    groups = re.findall(r"\(([^()]*)\)", text)
    if not groups or re.sub(r"\([^()]*\)", "", text).strip():
        raise ValueError(f"cannot parse cycle notation {text!r}")
    out = []
    for g in groups:
        g = g.strip()
        parts = g.replace(",", " ").split() if (" " in g or "," in g) else list(g)
        if parts:
            out.append(tuple(int(p) for p in parts))
    return out


@lru_cache(maxsize=None)
def _group_tuple(n: int) -> tuple[Permutation, ...]:
    return tuple(Permutation(p) for p in itertools.permutations(range(1, n + 1)))


def enumerate_group(n: int) -> list[Permutation]:
    """All elements of S_n, lexicographic on the image list (identity first)."""
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_DEGREE:
        raise ValueError(f"degree must be in 1..{MAX_DEGREE}, got {n}")
    return list(_group_tuple(int(n)))


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Return ``a∘b`` (apply ``b`` first). ``(12)∘(23) = (123)``."""
    if a.n != b.n:
        raise ValueError(f"degree mismatch: {a.n} vs {b.n}")
    return Permutation(tuple(a(b(m)) for m in range(1, a.n + 1)))


def cycle_count(p: Permutation) -> int:
    """Number of cycles, fixed points included."""
    return len(p.cycles(include_fixed=True))


def trace_power(p: Permutation, d: int) -> float:
    """``tr(T_p) = d**cycle_count(p)`` on (C^d)^{⊗n}."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return float(d) ** cycle_count(p)


def _cycle_counts_of_products(n: int) -> np.ndarray:
    # counts[i, j] = #cycles(g_i ∘ g_j), vectorised over all pairs
    perms = np.array([p.mapping for p in _group_tuple(n)], dtype=np.int16) - 1
    comp = perms[:, perms]  # comp[i, j, m] = perms[i, perms[j, m]]
    orbit_min = np.broadcast_to(np.arange(n, dtype=np.int16), comp.shape).copy()
    x = orbit_min.copy()
    for _ in range(n):
        x = np.take_along_axis(comp, x, axis=2)
        np.minimum(orbit_min, x, out=orbit_min)
    return (orbit_min == np.arange(n)).sum(axis=2)


@dataclass(frozen=True)
class WeingartenTable:
    """Gram matrix ``omega`` of S_n permutation operators and its inverse."""

    n: int
    d: int
    omega: np.ndarray
    elements: tuple[Permutation, ...]
    omega_inv: np.ndarray | None = None
    element_index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.omega.setflags(write=False)
        if self.omega_inv is not None:
            self.omega_inv.setflags(write=False)
        if self.element_index is None:
            object.__setattr__(
                self, "element_index", {p: i for i, p in enumerate(self.elements)}
            )

    def wg(self, a: Permutation, b: Permutation) -> float:
        """Weingarten entry ``(Ω^{-1})_{ab}``."""
        if self.omega_inv is None:
            raise ValueError("table has no inverse; use weingarten()")
        return float(self.omega_inv[self.element_index[a], self.element_index[b]])

    def delta_residual(self) -> float:
        """max |Σ_σ Wg(π,σ) Ω_{κσ} − δ_{κπ}|."""
        if self.omega_inv is None:
            raise ValueError("table has no inverse")
        r = self.omega @ self.omega_inv - np.eye(len(self.elements))
        return float(np.abs(r).max())


def gram_matrix(n: int, d: int) -> WeingartenTable:
    """Gram matrix ``Ω_{πσ} = tr(T_π T_σ) = d^{#cycles(π∘σ)}``."""
    if not 1 <= n <= MAX_GRAM_DEGREE:
        raise ValueError(f"gram matrix supported for 1 <= n <= {MAX_GRAM_DEGREE}")
    if d < 1:
        raise ValueError("d must be >= 1")
    counts = _cycle_counts_of_products(n)
    omega = np.power(float(d), counts)
    return WeingartenTable(n=n, d=d, omega=omega, elements=_group_tuple(n))


@lru_cache(maxsize=64)
def _weingarten_cached(n: int, d: int) -> WeingartenTable:
    tab = gram_matrix(n, d)
    eye = np.eye(len(tab.elements))
    inv = np.linalg.solve(tab.omega, eye)
    inv = 0.5 * (inv + inv.T)
    res = np.abs(tab.omega @ inv - eye).max()
    if not np.isfinite(res) or res > WG_RESIDUAL_TOL:
        raise SingularGramError(f"Gram inversion residual {res:.3e} exceeds tolerance")
    return WeingartenTable(n=n, d=d, omega=tab.omega, elements=tab.elements, omega_inv=inv)


def weingarten(n: int, d: int) -> WeingartenTable:
    """Weingarten matrix ``Ω^{-1}`` by LU solve; refused when ``d < n``."""
    if d < n:
        raise SingularGramError(f"Gram matrix of S_{n} is singular for d={d} < n")
    return _weingarten_cached(int(n), int(d))


@lru_cache(maxsize=32)
def weingarten_exact(n: int, d: int) -> tuple[tuple[Fraction, ...], ...]:
    """``Ω^{-1}`` in exact rational arithmetic (``n ≤ 4``), rows in group order.

    Float LU loses digits against cancellations at large ``d``; probes that
    contract many Weingarten terms use this table instead.
    """
    if not 1 <= n <= 4:
        raise ValueError("exact Weingarten supported for 1 <= n <= 4")
    if d < n:
        raise SingularGramError(f"Gram matrix of S_{n} is singular for d={d} < n")
    counts = _cycle_counts_of_products(n)
    size = len(counts)
    rows = [
        [Fraction(int(d) ** int(c)) for c in counts[i]] + [Fraction(int(i == j)) for j in range(size)]
        for i in range(size)
    ]
    for col in range(size):
        piv = next(r for r in range(col, size) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [x * inv for x in rows[col]]
        for r in range(size):
            f = rows[r][col]
            if r != col and f != 0:
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return tuple(tuple(row[size:]) for row in rows)


def permuted_trace(p: Permutation, ops) -> complex:
    """``tr(T_p · A_1⊗...⊗A_n)`` without forming the tensor product."""
    ops = [np.asarray(a) for a in ops]
    if len(ops) != p.n:
        raise ValueError(f"need {p.n} operators, got {len(ops)}")
    shape = ops[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(a.shape != shape for a in ops):
        raise ValueError("operators must be square matrices of equal size")
    inv = p.inverse()
    val = 1.0 + 0.0j
    for cyc in p.cycles(include_fixed=True):
        m = cyc[0]
        prod = ops[m - 1]
        nxt = inv(m)
        while nxt != m:
            prod = prod @ ops[nxt - 1]
            nxt = inv(nxt)
        val *= np.trace(prod)
    return complex(val)


def permutation_image(p: Permutation, d: int) -> np.ndarray:
    """Row index ``r[j]`` with ``T_p e_j = e_{r[j]}`` on (C^d)^{⊗n}."""
    n = p.n
    size = d**n
    if size > MAX_MATRIX_SIZE:
        raise ValueError(f"d**n = {size} exceeds the {MAX_MATRIX_SIZE} size guard")
    idx = np.indices((d,) * n).reshape(n, -1)
    out_idx = np.empty_like(idx)
    for m in range(n):
        out_idx[p.mapping[m] - 1] = idx[m]
    return np.ravel_multi_index(tuple(out_idx), (d,) * n)


def permutation_matrix(p: Permutation, d: int) -> np.ndarray:
    """Dense 0/1 matrix of ``T_p`` on (C^d)^{⊗n}."""
    rows = permutation_image(p, d)
    size = len(rows)
    mat = np.zeros((size, size), dtype=complex)
    mat[rows, np.arange(size)] = 1.0
    return mat
