"""Monte Carlo and brute-force ground truth.

Everything here is deliberately independent of the closed forms: twirls are
estimated by Haar conjugation, ensemble averages by sampling spectra, and the
NLS/GDE averages by explicit sums over all index tuples. Sample ``i`` always
draws from ``substream(seed, i)`` (or block ``i``), so results do not depend
on how work is split; reductions use compensated summation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .ensembles import (
    NLS_KINDS,
    EnsembleKind,
    EnsembleSpec,
    Spectrum,
    characteristic_function,
    sample_spectrum,
    substream,
)
from .formfactors import SLOT_WEIGHTS, empirical_form_factors

__all__ = [
    "McConfig",
    "McResult",
    "KahanSum",
    "sample_haar_unitary",
    "sample_haar_unitaries",
    "spectrum_unitary",
    "mc_isospectral_twirl",
    "mc_ensemble_c",
    "mc_haar_moments",
    "mc_frame_potential",
    "TypicalityResult",
    "empirical_typicality",
    "jackknife_se",
    "naive_nls_average",
    "naive_gde_average",
]

MAX_HAAR_DIM = 64
MAX_TWIRL_SIZE = 4096


@dataclass(frozen=True)
class McConfig:
    """Sample count, master seed and stream layout of one MC run."""

    n_samples: int = 1000
    seed: int = 0
    d: int | None = None
    parallel_streams: int = 1
    block: int = 500

    def __post_init__(self):
        if self.n_samples < 1 or self.parallel_streams < 1 or self.block < 1:
            raise ValueError("n_samples, parallel_streams and block must be positive")


@dataclass(frozen=True)
class McResult:
    """Sample mean with its standard error."""

    mean: np.ndarray
    se: np.ndarray
    n_samples: int


class KahanSum:
    """Compensated running sum of equal-shape arrays."""

    def __init__(self, shape, dtype=float):
        self.total = np.zeros(shape, dtype=dtype)
        self._c = np.zeros(shape, dtype=dtype)

    def add(self, x) -> None:
        y = np.asarray(x) - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def sample_haar_unitaries(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar unitaries, shape ``(n, d, d)``: QR of Ginibre with phase fix."""
    if not 1 <= d <= MAX_HAAR_DIM:
        raise ValueError(f"d must be in 1..{MAX_HAAR_DIM}")
    z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def sample_haar_unitary(d: int, rng=None) -> np.ndarray:
    """One ``d × d`` Haar-random unitary."""
    return sample_haar_unitaries(d, 1, np.random.default_rng(rng))[0]


def spectrum_unitary(sp: Spectrum, t: float) -> np.ndarray:
    """Diagonal ``exp(-i H t)`` of a spectrum (time rescale applied)."""
    return np.diag(np.exp(-1j * sp.energies * t * sp.time_rescale))


def _kron_all(mats) -> np.ndarray:
    # batched Kronecker product of a list of (n, d, d) stacks
    out = mats[0]
    for m in mats[1:]:
        n, a, _ = out.shape
        b = m.shape[1]
        out = (out[:, :, None, :, None] * m[:, None, :, None, :]).reshape(n, a * b, a * b)
    return out


def mc_isospectral_twirl(U, k: int, cfg: McConfig) -> McResult:
    """Estimate ``∫dG (G†UG)^{⊗k} ⊗ (G†U†G)^{⊗k}`` and its elementwise SE.

    The complex SE is ``sqrt(Var Re + Var Im) / sqrt(n)``.
    """
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    size = d ** (2 * k)
    if size > MAX_TWIRL_SIZE:
        raise ValueError(f"d^(2k) = {size} exceeds the {MAX_TWIRL_SIZE} size guard")
    s1 = KahanSum((size, size), complex)
    s2 = KahanSum((size, size), float)
    done, block_id = 0, 0
    while done < cfg.n_samples:
        m = min(cfg.block, cfg.n_samples - done)
        g = sample_haar_unitaries(d, m, substream(cfg.seed, block_id))
        v = np.conj(np.swapaxes(g, 1, 2)) @ U @ g
        vd = np.conj(np.swapaxes(v, 1, 2))
        x = _kron_all([v] * k + [vd] * k)
        s1.add(x.sum(axis=0))
        s2.add((np.abs(x) ** 2).sum(axis=0))
        done += m
        block_id += 1
    n = cfg.n_samples
    mean = s1.total / n
    var = np.maximum(s2.total / n - np.abs(mean) ** 2, 0.0) * n / max(n - 1, 1)
    return McResult(mean, np.sqrt(var / n), n)


def jackknife_se(samples, axis: int = 0) -> np.ndarray:
    """Jackknife standard error of the mean along ``axis``."""
    x = np.moveaxis(np.asarray(samples), axis, 0)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    loo = (x.sum(axis=0) - x) / (n - 1)
    dev = loo - loo.mean(axis=0)
    return np.sqrt((n - 1) / n * (np.abs(dev) ** 2).sum(axis=0))


def _sample_c(spec: EnsembleSpec, t, cfg: McConfig) -> np.ndarray:
    # rows: sample, (c2, Re c3, c4, c2(2t)), t
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((cfg.n_samples, 4, len(t)))
    for i in range(cfg.n_samples):
        sp = sample_spectrum(spec, substream(cfg.seed, i))
        f = empirical_form_factors(sp, t)
        out[i] = [f.c2, np.real(f.c3), f.c4, f.c2_2t]
    return out


def mc_ensemble_c(spec: EnsembleSpec, t_grid, cfg: McConfig) -> dict[str, McResult]:
    """Sample means and jackknife SEs of ``c2, Re c3, c4, c2(2t)`` on a grid."""
    if spec.kind is EnsembleKind.HAAR:
        raise ValueError("HAAR has no spectrum; use mc_haar_moments")
    x = _sample_c(spec, t_grid, cfg)
    mean = x.mean(axis=0)
    se = jackknife_se(x)
    names = ("c2", "c3", "c4", "c2_2t")
    return {k: McResult(mean[i], se[i], cfg.n_samples) for i, k in enumerate(names)}


def mc_haar_moments(d: int, cfg: McConfig) -> dict[str, McResult]:
    """Haar averages of ``|tr U|², Re tr(U²) tr(U†)², |tr U|⁴, |tr U²|²``."""
    vals = []
    done, block_id = 0, 0
    while done < cfg.n_samples:
        m = min(cfg.block, cfg.n_samples - done)
        u = sample_haar_unitaries(d, m, substream(cfg.seed, block_id))
        z1 = np.trace(u, axis1=1, axis2=2)
        z2 = np.trace(u @ u, axis1=1, axis2=2)
        a = np.abs(z1) ** 2
        vals.append(np.stack([a, np.real(z2 * np.conj(z1) ** 2), a**2, np.abs(z2) ** 2], axis=1))
        done += m
        block_id += 1
    x = np.concatenate(vals)
    names = ("c2", "c3", "c4", "c2_2t")
    se = jackknife_se(x)
    return {k: McResult(x[:, i].mean(), se[i], len(x)) for i, k in enumerate(names)}


def mc_frame_potential(U, cfg: McConfig, k: int = 1) -> McResult:
    """Pair-sampled ``E |tr(G1†U†G1 G2†UG2)|^{2k}``.

    Each block reuses one ``G1`` against ``cfg.block`` fresh ``G2``; the SE is
    computed from the block means, which are independent.
    """
    if k != 1:
        raise ValueError("only k = 1 is supported")
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    if d > 16:
        raise ValueError("mc_frame_potential supports d <= 16")
    n_blocks = max(2, -(-cfg.n_samples // cfg.block))
    means = np.empty(n_blocks)
    for b in range(n_blocks):
        rng = substream(cfg.seed, b)
        g1 = sample_haar_unitaries(d, 1, rng)[0]
        v1d = g1.conj().T @ U.conj().T @ g1
        g2 = sample_haar_unitaries(d, cfg.block, rng)
        v2 = np.conj(np.swapaxes(g2, 1, 2)) @ U @ g2
        tr = np.einsum("ij,nji->n", v1d, v2)
        means[b] = np.mean(np.abs(tr) ** (2 * k))
    return McResult(means.mean(), means.std(ddof=1) / np.sqrt(n_blocks), n_blocks * cfg.block)


@dataclass(frozen=True)
class TypicalityResult:
    """Observed frequencies of ``|c̃a - mean| ≥ δ`` and the sample moments."""

    delta: float
    freq_c2: float
    freq_c4: float
    mean_ct2: float
    mean_ct4: float
    n_samples: int


def empirical_typicality(spec: EnsembleSpec, t: float, delta: float, cfg: McConfig, mean=None):
    """Fraction of sampled spectra whose ``c̃2`` (``c̃4``) deviates by ``≥ δ``.

    ``mean`` may supply the reference ``(c̃2, c̃4)`` ensemble averages; by
    default the sample means are used. ``delta`` may be an array.
    """
    x = _sample_c(spec, [t], cfg)[:, :, 0]
    d = spec.d
    ct2 = x[:, 0] / d**2
    ct4 = x[:, 2] / d**4
    m2, m4 = (ct2.mean(), ct4.mean()) if mean is None else mean
    deltas = np.atleast_1d(np.asarray(delta, dtype=float))
    if np.any(deltas <= 0):
        raise ValueError("delta must be positive")
    out = [
        TypicalityResult(
            float(dl),
            float(np.mean(np.abs(ct2 - m2) >= dl)),
            float(np.mean(np.abs(ct4 - m4) >= dl)),
            float(m2),
            float(m4),
            cfg.n_samples,
        )
        for dl in deltas
    ]
    return out[0] if np.ndim(delta) == 0 else out


# ------------------------------------------------------- brute-force sums


def _index_tuples(d: int, n: int, chunk: int = 2**18):
    it = itertools.product(range(d), repeat=n)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def naive_nls_average(kind, which: str, d: int, tau: float) -> complex:
    """Stosszahlansatz average by summing over all ``d^n`` index tuples.

    For a tuple ``(i_1..i_n)`` with slot weights ``w``, the phase is
    ``Σ_a M_a s_a`` with ``M_a = Σ_{m: i_m > a} w_m``, so its average is
    ``Π_a g(M_a τ)``.
    """
    kind = EnsembleKind.parse(kind)
    if kind not in NLS_KINDS:
        raise ValueError(f"{kind} is not an NLS ensemble")
    w = np.array(SLOT_WEIGHTS[which])
    n = len(w)
    span = int(np.abs(w).sum())
    gvals = {m: complex(characteristic_function(kind, m * tau)) for m in range(-span, span + 1)}
    gaps = np.arange(d - 1)
    acc = KahanSum((), complex)
    for idx in _index_tuples(d, n):
        # M[t, a] for every tuple t and gap a
        M = ((idx[:, :, None] > gaps[None, None, :]) * w[None, :, None]).sum(axis=1)
        val = np.ones(len(idx), dtype=complex)
        for m, g in gvals.items():
            if m:
                val *= g ** (M == m).sum(axis=1)
        acc.add(val.sum())
    return complex(acc.total)


def naive_gde_average(which: str, d: int, t: float) -> float:
    """GDE average by summing ``Π_blocks exp(-(W_b t)² / 8)`` over all tuples."""
    w = np.array(SLOT_WEIGHTS[which])
    n = len(w)
    acc = KahanSum((), float)
    for idx in _index_tuples(d, n):
        total = np.zeros(len(idx))
        for level in range(d):
            wb = ((idx == level) * w).sum(axis=1)
            total += wb**2
        acc.add(np.exp(-total * t**2 / 8).sum())
    return float(acc.total)
