r"""Spectral form factors.

For ``U = exp(-iHt)`` with eigenvalues ``E_k``::

    c2(t) = |Σ e^{-iE t}|^2
    c3(t) = (Σ e^{-2iE t}) (Σ e^{iE t})^2
    c4(t) = |Σ e^{-iE t}|^4
    c2(2t)

Ensemble averages are written as sums over set partitions of the trace
slots. Each slot carries a frequency weight (``c2: (-1, 1)``,
``c3: (-2, 1, 1)``, ``c4: (-1, -1, 1, 1)``); slots in one block share an
eigenvalue index, distinct blocks carry distinct indices. The ensemble
enters only through the average of ``Σ_distinct Π_b exp(i W_b E_{i_b} t)``.

All ensemble-average entry points share one time axis. NLS spectra have
bandwidth O(d), so :func:`ensemble_form_factors` evaluates them at ``t/d``;
the ``nls_*`` functions themselves take the already rescaled time.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .ensembles import NLS_KINDS, EnsembleKind, Spectrum, characteristic_function

__all__ = [
    "FormFactors",
    "RFunctions",
    "SLOT_WEIGHTS",
    "empirical_form_factors",
    "gue_c2",
    "gue_c3",
    "gue_c4",
    "gde_c2",
    "gde_c3",
    "gde_c4",
    "nls_c2",
    "nls_c3",
    "nls_c4",
    "ensemble_form_factors",
    "envelope",
    "asymptotic_value",
    "haar_value",
    "equilibration_time",
    "NOT_CONVERGED",
]

SLOT_WEIGHTS = {"c2": (-1, 1), "c3": (-2, 1, 1), "c4": (-1, -1, 1, 1)}
NOT_CONVERGED = math.inf
_SERIES_SWITCH = 1e-6
_DIRECT_SWITCH = 1e-2
_MAX_PANELS = 16384


def _t_array(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    return t


def _out(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


@dataclass(frozen=True)
class FormFactors:
    """The tuple ``(c2, c3, c4, c2(2t))`` at time(s) ``t``.

    Fields may be scalars or equal-shape arrays (one entry per time).
    """

    t: float | np.ndarray
    c2: complex | np.ndarray
    c3: complex | np.ndarray
    c4: complex | np.ndarray
    c2_2t: complex | np.ndarray
    d: int

    @classmethod
    def identity(cls, d: int, t=0.0) -> "FormFactors":
        """Values at ``t = 0`` (U = 1)."""
        return cls(t, float(d) ** 2, float(d) ** 3, float(d) ** 4, float(d) ** 2, d)

    @classmethod
    def asymptotic(cls, d: int, t=math.inf) -> "FormFactors":
        """Ensemble-independent ``t -> ∞`` values."""
        return cls(t, float(d), float(d), float(d * (2 * d - 1)), float(d), d)

    @classmethod
    def haar(cls, d: int, t=math.nan) -> "FormFactors":
        """Haar-averaged values, ``c2 = 1, c3 = 0, c4 = c2(2t) = 2``."""
        return cls(t, 1.0, 0.0, 2.0, 2.0, d)

    @property
    def ct2(self):
        return np.real(self.c2) / self.d**2

    @property
    def ct3(self):
        return self.c3 / self.d**3

    @property
    def ct4(self):
        return np.real(self.c4) / self.d**4

    def at(self, i: int) -> "FormFactors":
        """Scalar form factors at grid index ``i``."""
        pick = lambda x: np.asarray(x).reshape(-1)[i] if np.ndim(x) else x
        return FormFactors(
            pick(self.t), pick(self.c2), pick(self.c3), pick(self.c4), pick(self.c2_2t), self.d
        )

    def __len__(self) -> int:
        return int(np.size(self.t))


class RFunctions:
    """The functions r1, r2, r3 entering the GUE averages."""

    def __init__(self, d: int):
        self.d = int(d)

    @staticmethod
    def r1(t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t == 0, 1.0, t)
        return _out(np.where(t == 0, 1.0, special.j1(2 * safe) / safe))

    def r2(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        return _out(np.where(t < 2 * self.d, self.d - t / 2, 0.0))

    @staticmethod
    def r3(t):
        x = np.pi * np.asarray(t, dtype=float) / 2
        return _out(np.sinc(x / np.pi))


# ---------------------------------------------------------------- empirical


def empirical_form_factors(sp: Spectrum, t) -> FormFactors:
    """Exact form factors of one spectrum (``sp.time_rescale`` applied)."""
    t = _t_array(t)
    tau = np.atleast_1d(t) * sp.time_rescale
    e = sp.energies
    z1 = np.empty(tau.shape, dtype=complex)
    z2 = np.empty(tau.shape, dtype=complex)
    step = max(1, 2**20 // max(len(e), 1))
    for s in range(0, len(tau), step):
        ph = np.exp(-1j * np.outer(tau[s : s + step], e))
        z1[s : s + step] = ph.sum(axis=1)
        z2[s : s + step] = (ph * ph).sum(axis=1)
    a1 = np.abs(z1) ** 2
    shape = t.shape
    return FormFactors(
        t=_out(t),
        c2=_out(a1.reshape(shape)),
        c3=_out((z2 * np.conj(z1) ** 2).reshape(shape)),
        c4=_out((a1**2).reshape(shape)),
        c2_2t=_out((np.abs(z2) ** 2).reshape(shape)),
        d=sp.d,
    )


# ------------------------------------------------------- partition algebra


def _set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


@lru_cache(maxsize=None)
def block_patterns(weights: tuple[int, ...]) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Multiset of block-weight tuples over all set partitions of the slots."""
    cnt = Counter()
    for part in _set_partitions(range(len(weights))):
        w = tuple(sorted(sum(weights[i] for i in blk) for blk in part))
        cnt[w] += 1
    return tuple(sorted(cnt.items()))




# ------------------------------------------------------------------- GUE


def _spread(freqs) -> np.ndarray:
    # spread of the partial sums of the centred frequencies, in cycle order
    f = np.asarray(freqs)
    c = f - f.mean(axis=0)
    ps = np.cumsum(c, axis=0)
    return ps.max(axis=0) - ps.min(axis=0)


_PANEL_ORDER = 32


@lru_cache(maxsize=32)
def _composite_rule(panels: int):
    # 32-point Gauss-Legendre on each of `panels` equal pieces of [-1, 1]
    x, w = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    left = -1.0 + 2.0 * np.arange(panels) / panels
    nodes = (left[:, None] + (x + 1) / panels).ravel()
    return nodes, np.tile(w / panels, panels)


def _semicircle_cluster(d: int, total: np.ndarray, spread: np.ndarray) -> np.ndarray:
    # (1/2π) ∫ dE cos(A E) max(0, 2πρ(E) - s), ρ the semicircle density
    a = np.abs(np.atleast_1d(total)).astype(float)
    s = np.atleast_1d(spread).astype(float)
    out = np.zeros_like(a)
    live = s < 2 * d
    e0 = np.sqrt(4.0 - np.minimum(s / d, 2.0) ** 2)
    # about one panel per oscillation, rounded up to a power of two
    need = 2 + a * e0 / np.pi
    panels = np.minimum(2 ** np.ceil(np.log2(need)), _MAX_PANELS).astype(int)
    for k in np.unique(panels[live]):
        idx = np.flatnonzero(live & (panels == k))
        x, w = _composite_rule(int(k))
        phi = 0.5 * np.pi * x
        step = max(1, 2**20 // len(x))
        for lo in range(0, len(idx), step):
            sel = idx[lo : lo + step]
            # E = e0 sin(φ) removes the square-root endpoint behaviour
            e = e0[sel, None] * np.sin(phi)
            f = np.maximum(d * np.sqrt(np.maximum(4.0 - e**2, 0.0)) - s[sel, None], 0.0)
            val = (w * np.cos(phi) * f * np.cos(a[sel, None] * e)).sum(axis=-1)
            out[sel] = 0.25 * e0[sel] * val
    return out.reshape(np.shape(total))


def _cycle_key(weights) -> tuple[int, ...]:
    # clusters are invariant under rotation and reversal of the cycle
    w = tuple(weights)
    forms = [w[i:] + w[:i] for i in range(len(w))]
    forms += [tuple(reversed(f)) for f in forms]
    return min(forms)


def _gue_cycle(rf: RFunctions, freqs, approx: str) -> np.ndarray:
    f = np.asarray(freqs)
    if f.shape[0] == 1:
        return rf.d * np.asarray(rf.r1(f[0]))
    spread = _spread(f)
    if approx == "semicircle":
        return _semicircle_cluster(rf.d, f.sum(axis=0), spread)
    overlap = 0.5 * np.maximum(0.0, 2 * rf.d - spread)
    return np.asarray(rf.r3(f.sum(axis=0))) * overlap


def _gue_distinct(rf: RFunctions, pattern, t: np.ndarray, approx: str, cache: dict) -> np.ndarray:
    # determinantal expansion: Σ_σ sgn(σ) Π_cycles cluster(cycle)
    b = len(pattern)
    total = np.zeros_like(t)
    for perm in itertools.permutations(range(b)):
        term = np.ones_like(t)
        seen = set()
        for start in range(b):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            nxt = perm[start]
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                nxt = perm[nxt]
            sign = -1.0 if len(cyc) % 2 == 0 else 1.0
            key = _cycle_key(pattern[c] for c in cyc)
            if key not in cache:
                freqs = np.array(key, dtype=float)[:, None] * t[None, :]
                cache[key] = _gue_cycle(rf, freqs, approx)
            term = term * sign * cache[key]
        total += term
    return total


def _check_approx(approx: str) -> str:
    if approx not in ("box", "semicircle"):
        raise ValueError("approx must be 'box' or 'semicircle'")
    return approx


def _gue_average(which: str, d: int, t, approx: str = "box") -> np.ndarray:
    approx = _check_approx(approx)
    t = _t_array(t)
    tt = np.atleast_1d(t).astype(float)
    rf = RFunctions(d)
    total = np.zeros_like(tt)
    cache: dict = {}
    for pattern, mult in block_patterns(SLOT_WEIGHTS[which]):
        total += mult * _gue_distinct(rf, pattern, tt, approx, cache)
    return total.reshape(t.shape)


def gue_c2(d: int, t, approx: str = "box"):
    """GUE average ``d + d^2 r1(t)^2 - r2(t)``.

    ``approx="box"`` is the flat-density regularization of the sine kernel.
    ``approx="semicircle"`` replaces ``r2`` by the local-density ramp
    ``(d/2π)(4 arcsin(e0/2) - a e0)``, ``a = t/d``, ``e0 = sqrt(4 - a^2)``,
    which tracks sampled GUE spectra more closely for ``1 < t < 2d``.
    """
    approx = _check_approx(approx)
    t = _t_array(t)
    rf = RFunctions(d)
    if approx == "box":
        ramp = np.asarray(rf.r2(t))
    else:
        a = np.minimum(t / d, 2.0)
        e0 = np.sqrt(4 - a**2)
        ramp = d / (2 * np.pi) * (4 * np.arcsin(e0 / 2) - a * e0)
    return _out(d + d**2 * np.asarray(rf.r1(t)) ** 2 - ramp)


def gue_c3(d: int, t, approx: str = "box"):
    """GUE average of ``c3`` (real by the E -> -E symmetry)."""
    return _out(_gue_average("c3", d, t, approx))


def gue_c4(d: int, t, approx: str = "box"):
    """GUE average of ``c4``."""
    return _out(_gue_average("c4", d, t, approx))


# ------------------------------------------------------------------- GDE


def gde_c2(d: int, t):
    t = _t_array(t)
    return _out(d + d * (d - 1) * np.exp(-(t**2) / 4))


def gde_c3(d: int, t):
    """Real part of the GDE average of ``c3``; the imaginary part vanishes."""
    t = _t_array(t)
    e = lambda a: np.exp(-a * t**2)
    return _out(d + d * (d - 1) * e(1.0) + 2 * d * (d - 1) * e(0.25) + d * (d - 1) * (d - 2) * e(0.75))


def gde_c4(d: int, t):
    t = _t_array(t)
    e = lambda a: np.exp(-a * t**2)
    return _out(
        d * (2 * d - 1)
        + 4 * d * (d - 1) ** 2 * e(0.25)
        + d * (d - 1) * e(1.0)
        + 2 * d * (d - 1) * (d - 2) * e(0.75)
        + d * (d - 1) * (d - 2) * (d - 3) * e(0.5)
    )


# ------------------------------------------------------------------- NLS


def _geometric_weight_sum(g: np.ndarray, d: int) -> np.ndarray:
    """``Σ_{N=1}^{d-1} (d-N) g^N``.

    Closed form away from ``g = 1``; a fourth-order series below
    ``|g-1| = 1e-6``; the direct sum in between, where the closed form
    loses digits to cancellation.
    """
    shape = np.shape(g)
    g = np.atleast_1d(np.asarray(g, dtype=complex))
    eps = g - 1
    aeps = np.abs(eps)
    near = aeps < _SERIES_SWITCH
    mid = ~near & (aeps < _DIRECT_SWITCH)
    # placeholder inside the unit disk keeps the masked powers finite
    safe = np.where(near | mid, 0.5, g)
    out = (safe ** (d + 1) - d * safe**2 + (d - 1) * safe) / (safe - 1) ** 2
    if near.any():
        # Σ_N (d-N) C(N,k) = C(d+1, k+2)
        e = eps[near]
        out[near] = math.comb(d + 1, 2) - d + sum(math.comb(d + 1, k + 2) * e**k for k in range(1, 5))
    if mid.any():
        n = np.arange(1, d)
        out[mid] = (np.power(g[mid][:, None], n[None, :]) * (d - n)).sum(axis=1)
    return out.reshape(shape)


def nls_c2(kind, d: int, tau):
    """NLS average of ``c2`` at rescaled time ``tau`` (units of mean spacing)."""
    kind = EnsembleKind.parse(kind)
    tau = _t_array(tau)
    g = characteristic_function(kind, tau)
    f = _geometric_weight_sum(g, d)
    return _out(d + 2 * np.real(f))


def _gap_sequences(weights) -> Counter:
    """Count of gap-multiplier sequences over partitions and block orders."""
    seqs = Counter()
    for pattern, mult in block_patterns(tuple(weights)):
        if sum(pattern) != 0:
            raise ValueError("slot weights must sum to zero")
        for order in itertools.permutations(pattern):
            tail = tuple(sum(order[j + 1 :]) for j in range(len(order) - 1))
            seqs[tail] += mult
    return seqs


def _ordered_gap_sum(G: np.ndarray, d: int) -> np.ndarray:
    """``Σ_{p_1<..<p_B} Π_j G_j^{p_{j+1}-p_j}`` for ``G`` of shape (k, n)."""
    k, n = G.shape
    if k == 0:
        return np.full(n, float(d), dtype=complex)
    h = np.zeros((k + 1, n), dtype=complex)
    h[0] = 1.0  # h_0(0) = 1, h_0(N > 0) = 0
    acc = np.zeros(n, dtype=complex)
    for N in range(1, d):
        new = np.empty_like(h)
        new[0] = 0.0
        new[1:] = G * (h[1:] + h[:-1])
        h = new
        acc += (d - N) * h[k]
    return acc


def _nls_average(kind, weights, d: int, tau) -> np.ndarray:
    tau = _t_array(tau)
    tt = np.atleast_1d(tau).astype(float)
    seqs = _gap_sequences(weights)
    total = np.zeros(tt.shape, dtype=complex)
    by_len: dict[int, list] = {}
    for seq, mult in seqs.items():
        by_len.setdefault(len(seq), []).append((seq, mult))
    for k, items in by_len.items():
        if k == 0:
            total += sum(m for _, m in items) * d
            continue
        G = np.empty((len(items), k, len(tt)), dtype=complex)
        for i, (seq, _) in enumerate(items):
            for j, m in enumerate(seq):
                G[i, j] = 1.0 if m == 0 else characteristic_function(kind, m * tt)
        mults = np.array([m for _, m in items], dtype=float)
        flat = G.transpose(1, 0, 2).reshape(k, -1)
        sums = _ordered_gap_sum(flat, d).reshape(len(items), len(tt))
        total += mults @ sums
    return total.reshape(tau.shape)


def nls_c3(kind, d: int, tau):
    """NLS average of ``c3`` (complex) at rescaled time ``tau``."""
    return _out(_nls_average(EnsembleKind.parse(kind), SLOT_WEIGHTS["c3"], d, tau))


def nls_c4(kind, d: int, tau):
    """NLS average of ``c4`` at rescaled time ``tau``."""
    return _out(np.real(_nls_average(EnsembleKind.parse(kind), SLOT_WEIGHTS["c4"], d, tau)))


# -------------------------------------------------------------- dispatch


def ensemble_form_factors(kind, d: int, t) -> FormFactors:
    """Ensemble-averaged form factors on the common time axis."""
    kind = EnsembleKind.parse(kind)
    t = _t_array(t)
    if kind is EnsembleKind.GUE:
        c2, c3, c4, c22 = gue_c2(d, t), gue_c3(d, t), gue_c4(d, t), gue_c2(d, 2 * t)
    elif kind is EnsembleKind.GDE:
        c2, c3, c4, c22 = gde_c2(d, t), gde_c3(d, t), gde_c4(d, t), gde_c2(d, 2 * t)
    elif kind in NLS_KINDS:
        tau = t / d
        c2, c3, c4, c22 = nls_c2(kind, d, tau), nls_c3(kind, d, tau), nls_c4(kind, d, tau), nls_c2(kind, d, 2 * tau)
    else:
        h = FormFactors.haar(d)
        full = lambda v: _out(np.full(t.shape, v, dtype=float))
        c2, c3, c4, c22 = full(h.c2), full(h.c3), full(h.c4), full(h.c2_2t)
    return FormFactors(_out(t), c2, c3, c4, c22, d)


# ------------------------------------------------------------- envelopes


def envelope(kind, d: int, t, which: str = "c2"):
    """Non-oscillating envelope of ``c̃2`` or ``c̃4`` on the common time axis.

    The GUE ramp uses ``r2(t)/d = θ(2d - t)(1 - t/2d)``.
    """
    kind = EnsembleKind.parse(kind)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("envelope needs t > 0")
    if which not in ("c2", "c4"):
        raise ValueError("which must be 'c2' or 'c4'")
    if kind is EnsembleKind.POISSON:
        if which == "c2":
            return _out(1 / d + 2 / t**2)
        return _out((2 * d - 1) / d**3 + 6 / t**4 + (16 * d - 15) / (d**2 * t**2))
    if kind is EnsembleKind.GUE:
        q = np.asarray(RFunctions(d).r2(t)) / d
        q2 = np.asarray(RFunctions(d).r2(2 * t)) / d
        if which == "c2":
            return _out(1 / d + 1 / (np.pi * t**3) - q / d)
        bracket = (
            2
            - 31 / (8 * np.pi * t**3)
            - (8 * q2 - 16 * q + q / np.sqrt(2)) / (np.pi**1.5 * t**2.5)
            - 4 * q
            + 2 * q**2
            + q**2 / (np.pi**2 * t**2)
        )
        return _out(1 / (np.pi**2 * t**6) + bracket / d**2)
    raise ValueError(f"no envelope for {kind}")


def asymptotic_value(which: str, d: int) -> float:
    """Late-time ensemble value: ``c2 -> d, Re c3 -> d, c4 -> d(2d-1)``."""
    table = {"c2": d, "c3": d, "c4": d * (2 * d - 1), "c2_2t": d}
    if which not in table:
        raise ValueError(f"unknown quantity {which!r}")
    return float(table[which])


def haar_value(which: str, d: int) -> float:
    """Haar value of the rescaled ``c̃``: ``c̃2 = d^-2, c̃3 = 0, c̃4 = 2 d^-4``."""
    table = {"c2": 1.0 / d**2, "c3": 0.0, "c4": 2.0 / d**4, "c2_2t": 2.0 / d**2}
    if which not in table:
        raise ValueError(f"unknown quantity {which!r}")
    return table[which]


def equilibration_time(series, level: float, band: float) -> float:
    """First time after which ``|value - level| <= band`` for the rest of the window.

    ``series`` is a :class:`~isotwirl.series.ProbeSeries` or a ``(t, values)``
    pair. Returns :data:`NOT_CONVERGED` if the last sample is outside the band.
    """
    if hasattr(series, "t"):
        t, v = series.t, series.values
    else:
        t, v = series
    t = np.asarray(t, dtype=float)
    v = np.real(np.asarray(v))
    outside = np.abs(v - level) > band
    if outside[-1]:
        return NOT_CONVERGED
    if not outside.any():
        return float(t[0])
    last = np.nonzero(outside)[0][-1]
    # linear interpolation of the crossing between the two samples
    t0, t1 = t[last], t[last + 1]
    e0, e1 = np.abs(v[last] - level) - band, np.abs(v[last + 1] - level) - band
    if e0 == e1:
        return float(t1)
    return float(t0 + (t1 - t0) * e0 / (e0 - e1))
