"""Verification suites shared by ``isotwirl verify`` and the acceptance tests.

Each suite returns a list of :class:`Check` records: a named comparison of
an observed discrepancy against a tolerance.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import probes as P
from .ensembles import EnsembleKind, EnsembleSpec, Spectrum
from .formfactors import (
    FormFactors,
    empirical_form_factors,
    ensemble_form_factors,
    gue_c2,
    gue_c3,
    gue_c4,
)
from .oracle import McConfig, empirical_typicality, mc_ensemble_c, mc_isospectral_twirl, sample_haar_unitary
from .permgroup import Permutation, weingarten
from .series import log_grid
from .twirl import r2k, r2k_from_spectrum, to_matrix, twirl_dense

__all__ = [
    "Check",
    "SUITES",
    "weingarten_checks",
    "twirl_mc_checks",
    "formfactor_mc_checks",
    "probe_oracle_checks",
    "typicality_checks",
    "run_suite",
    "report",
]

SUITES = ("weingarten", "twirl-mc", "formfactor-mc", "probe-oracle", "typicality")


@dataclass(frozen=True)
class Check:
    """One comparison: ``passed`` iff ``observed <= tolerance``."""

    suite: str
    name: str
    tolerance: float
    observed: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.observed) and self.observed <= self.tolerance)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def report(checks) -> dict:
    """JSON-ready summary with an overall verdict."""
    checks = list(checks)
    return {"passed": all(c.passed for c in checks), "checks": [c.to_dict() for c in checks]}


# -------------------------------------------------------------- weingarten


def weingarten_checks(ns=(2, 4), ds=(4, 8), tol: float = 1e-10) -> list[Check]:
    """``max |Σ_σ Wg(π,σ) Ω_{κσ} − δ_{κπ}|`` for each ``(n, d)``."""
    out = []
    for n in ns:
        for d in ds:
            t0 = time.perf_counter()
            res = weingarten(n, d).delta_residual()
            out.append(Check("weingarten", f"n={n},d={d}", tol, res, time.perf_counter() - t0))
    return out


# ---------------------------------------------------------------- twirl-mc


def _unitary_energies(U: np.ndarray) -> np.ndarray:
    # U = exp(-iE) at t = 1
    return -np.angle(np.linalg.eigvals(U))


def twirl_mc_checks(d: int, k: int, samples: int = 10_000, seed: int = 7,
                    n_se: float = 4.0) -> list[Check]:
    """Elementwise ``|MC − symbolic| / SE`` for one fixed Haar-random ``U``."""
    t0 = time.perf_counter()
    U = sample_haar_unitary(d, np.random.default_rng([seed, d, k]))
    mc = mc_isospectral_twirl(U, k, McConfig(n_samples=samples, seed=seed, d=d))
    exact = to_matrix(r2k_from_spectrum(_unitary_energies(U), 1.0, k))
    diff = np.abs(mc.mean - exact)
    se = mc.se
    # entries with zero spread are deterministic and must match exactly
    z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))
    return [Check("twirl-mc", f"d={d},k={k},n={samples}", n_se, float(z.max()),
                  time.perf_counter() - t0)]


# ----------------------------------------------------------- formfactor-mc


_MC_FIELDS = {"c2": "c2", "c3": "c3", "c4": "c4"}


def _averaged_ff(kind: EnsembleKind, d: int, t, approx: str) -> FormFactors:
    if kind is EnsembleKind.GUE and approx != "box":
        return FormFactors(t, gue_c2(d, t, approx), gue_c3(d, t, approx), gue_c4(d, t, approx),
                           gue_c2(d, 2 * t, approx), d)
    return ensemble_form_factors(kind, d, t)


def formfactor_mc_checks(kind, d: int, samples: int, seed: int = 0, points: int = 30,
                         quantities=("c2",), n_se: float = 3.0, approx: str = "box",
                         t_min: float = 0.1, t_max: float | None = None) -> list[Check]:
    """Max ``|closed form − sample mean| / SE`` over a log grid, per quantity."""
    kind = EnsembleKind.parse(kind)
    t0 = time.perf_counter()
    t = log_grid(t_min, 10.0 * d if t_max is None else t_max, points)
    mc = mc_ensemble_c(EnsembleSpec(kind, d), t, McConfig(n_samples=samples, seed=seed, d=d))
    ff = _averaged_ff(kind, d, t, approx)
    out = []
    secs = time.perf_counter() - t0
    for q in quantities:
        closed = np.real(np.asarray(getattr(ff, q)))
        r = mc[_MC_FIELDS[q]]
        z = np.abs(closed - r.mean) / r.se
        out.append(Check("formfactor-mc", f"{kind.value} {q} d={d} n={samples}", n_se,
                         float(z.max()), secs))
    return out


# ------------------------------------------------------------ probe-oracle


def _kron(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


def _pure(n: int, rng) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def _mixed(n: int, rng) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    r = g @ g.conj().T
    return r / np.trace(r)


def _swap_factor(da: int, db: int, which: int) -> np.ndarray:
    # on (A⊗B)⊗(A⊗B): swap the A factors (which=0) or the B factors (which=1)
    d = da * db
    a1, b1, a2, b2 = np.indices((da, db, da, db)).reshape(4, -1)
    src = (a2, b1, a1, b2) if which == 0 else (a1, b2, a2, b1)
    rows = np.ravel_multi_index(src, (da, db, da, db))
    m = np.zeros((d * d, d * d))
    m[rows, np.arange(d * d)] = 1.0
    return m


def _reduced_purity(rho: np.ndarray, da: int, db: int, part: str) -> float:
    t = rho.reshape(da, db, da, db)
    r = np.einsum("ijkj->ik", t) if part == "A" else np.einsum("ijil->jl", t)
    return float(np.trace(r @ r).real)


def _pauli_pair(d: int):
    # Z on the first qubit, X on the last
    n = int(round(math.log2(d)))
    if 2**n != d or n < 2:
        raise ValueError("probe-oracle needs d a power of two >= 4")
    i2, z, x = np.eye(2), np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])
    return _kron(z, *[i2] * (n - 1)), _kron(*[i2] * (n - 1), x)


def _equilibration_twirl(energies: np.ndarray, t: float):
    # twirl of U⊗U⊗U†⊗U† + Σ Π_i⊗Π_j⊗Π_i⊗Π_j − 2 Σ U⊗Π_j⊗U†⊗Π_j (all diagonal)
    d = len(energies)
    u = np.exp(-1j * energies * t)
    eye = np.eye(d)
    y = _kron(u[None], u[None], u.conj()[None], u.conj()[None])[0]
    y = y + sum(_kron(eye[i][None], eye[j][None], eye[i][None], eye[j][None])[0]
                for i in range(d) for j in range(d))
    y = y - 2 * sum(_kron(u[None], eye[j][None], u.conj()[None], eye[j][None])[0] for j in range(d))
    return twirl_dense(np.diag(y), 2, d)


def probe_oracle_checks(d: int, seed: int = 1, tol: float = 1e-8) -> list[Check]:
    """Every closed-form probe against :func:`probes.generic_probe` at dimension ``d``.

    Form factors come from a random spectrum so that the comparison also
    covers the frame potential and the convergence distance, whose dense
    references need the spectrum itself. ``dA = 2`` and ``dB = d/2``.
    """
    rng = np.random.default_rng([seed, d])
    g = P.generic_probe
    pm = lambda cycles, n=4: Permutation.from_cycles(cycles, n)
    da, db = 2, d // 2
    energies, t = rng.normal(size=d), 0.9
    spectrum = Spectrum(energies, EnsembleSpec(EnsembleKind.GDE, d))
    ff = empirical_form_factors(spectrum, t)
    r2op, r4op = r2k(ff, 1), r2k(ff, 2)
    results: dict[str, float] = {}
    shared: dict[str, float] = {}
    timing: dict[str, float] = {}

    def rec(name, closed, dense):
        err = abs(complex(closed) - complex(dense)) / max(1.0, abs(complex(dense)))
        results[name] = max(results.get(name, 0.0), err)

    def timed(name, fn):
        t0 = time.perf_counter()
        fn()
        timing[name] = timing.get(name, 0.0) + time.perf_counter() - t0

    psi = np.kron(_pure(da, rng), _pure(db, rng))
    rho = _mixed(d, rng)
    swap_a, swap_b = _swap_factor(da, db, 0), _swap_factor(da, db, 1)
    a_op, b_op = _pauli_pair(d)

    def frame():
        dense = np.sum(np.abs(to_matrix(r2k_from_spectrum(energies, t, 1))) ** 2)
        rec("frame-potential", P.frame_potential_k1(ff), dense)

    def echoes():
        rec("loschmidt1", P.loschmidt1(ff), d * g(r2op, pm("(12)", 2), _kron(psi, psi)))
        amat = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rec("otoc2", P.otoc2(ff, np.trace(amat), np.linalg.norm(amat) ** 2),
            g(r2op, pm("(12)", 2), _kron(amat.conj().T, amat)))
        rec("otoc4", P.otoc4_pauli(ff), g(r4op, pm("(1423)"), _kron(b_op, b_op, a_op, a_op)))
        rec("loschmidt2", P.loschmidt2_pauli(ff), g(r4op, pm("(14)(23)"), _kron(a_op, a_op, a_op, a_op)))

    def entanglement():
        pure_sc = P.SceneParams(d=d, dA=da, dB=db)
        pur = d * d * g(r4op, pm("(13)(24)"), _kron(psi, psi, swap_a)).real
        rec("entanglement", P.entanglement_bound(ff, pure_sc), -math.log(pur))
        mixed_sc = P.SceneParams(d=d, dA=da, dB=db, purity_psi=float(np.trace(rho @ rho).real),
                                 purity_A=_reduced_purity(rho, da, db, "A"),
                                 purity_B=_reduced_purity(rho, da, db, "B"))
        pa = d * d * g(r4op, pm("(13)(24)"), _kron(rho, rho, swap_a)).real
        pb = d * d * g(r4op, pm("(13)(24)"), _kron(rho, rho, swap_b)).real
        rec("entanglement-mixed", P.entanglement_purity(ff, mixed_sc), pa)
        rec("mutual-information", P.mutual_information_bound(ff, mixed_sc),
            math.log(mixed_sc.purity_psi) - math.log(pa) - math.log(pb))
        shared["purity"] = pur

    def tmi():
        x1 = g(r4op, pm("(13)(24)"), _kron(swap_a, swap_a)).real
        x2 = g(r4op, pm("(13)(24)"), _kron(swap_a, swap_b)).real
        rec("tmi", P.tmi_bound(ff, P.SceneParams(d=d, dC=da, dD=db)),
            math.log2(d) + math.log2(x1) + math.log2(x2))

    def coherence():
        eye = np.eye(d)
        obs = sum(_kron(np.diag(eye[i]), np.diag(eye[i]), psi, psi) for i in range(d))
        deph = float(np.sum(np.diag(psi).real ** 2))
        rec("coherence", P.coherence(ff, P.SceneParams(d=d, deph_purity=deph)),
            1.0 - d * d * g(r4op, pm("(13)(24)"), obs).real)

    def wyd():
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        x = x + x.conj().T
        eta = 0.3
        w, v = np.linalg.eigh(rho)
        ra, rb = (v * w ** (1 - eta)) @ v.conj().T, (v * w**eta) @ v.conj().T
        dense = (d * g(r2op, pm("(12)", 2), _kron(x @ x, rho))
                 - d * g(r4op, pm("(1423)"), _kron(x, x, ra, rb)))
        rec("wyd", P.wyd_skew(ff, x, rho, eta), dense.real)

    def convergence():
        theta = _equilibration_twirl(energies, t)
        dense = d * d * g(theta, pm("(13)(24)"), _kron(psi, psi, swap_a)).real
        rec("convergence", P.convergence_f(ff, P.SceneParams(d=d, dA=da, dB=db)), dense)

    def battery():
        h0 = np.diag(rng.normal(size=d))
        ps = np.diag(np.eye(d)[0])
        e0, eht, tr2 = h0[0, 0], np.trace(h0) / d, np.trace(h0 @ h0)
        sc = P.SceneParams(d=d, E0=e0, E_HT=eht, trH0sq=tr2)
        x = d * g(r2op, pm("(12)", 2), _kron(ps, h0)).real
        rec("work", P.work(ff), (e0 - x) / (e0 - eht))
        x2 = d * d * g(r4op, pm("(13)(24)"), _kron(ps, ps, h0, h0)).real
        rec("work-fluct", P.work_fluctuations(ff, sc), (x2 - x * x) / sc.energy_variance)
        # free-energy bounds combine the work with the entanglement purity
        lo, hi = P.free_energy_bounds(ff, P.SceneParams(d=d, dA=da, dB=db))
        w = (e0 - x) / (e0 - eht)
        rec("free-energy-upper", hi, w + math.log(shared["purity"]))
        rec("free-energy-lower", lo, w - math.log(da))

    for name, fn in (("frame", frame), ("echoes", echoes), ("entanglement", entanglement),
                     ("tmi", tmi), ("coherence", coherence), ("wyd", wyd),
                     ("convergence", convergence), ("battery", battery)):
        timed(name, fn)
    secs = sum(timing.values())
    return [Check("probe-oracle", f"{k} d={d}", tol, v, secs) for k, v in results.items()]


# -------------------------------------------------------------- typicality


def typicality_checks(d: int = 64, kinds=("GDE", "POISSON", "GUE"), times=(1.0, 10.0, 100.0),
                      deltas=(0.005, 0.01, 0.02, 0.05, 0.1), samples: int = 1000,
                      seed: int = 3, approx: str = "semicircle") -> list[Check]:
    """Observed deviation frequencies minus their Chebyshev bounds (must be ``<= 0``).

    Deviations are measured from the analytic ensemble means, the reference
    of the Chebyshev statements. GUE moments use ``approx``: the box forms
    can give ``c̄4 < c̄2²``, a negative variance that voids the bound.
    """
    out = []
    for kind in kinds:
        spec = EnsembleSpec(kind, d)
        for t in times:
            t0 = time.perf_counter()
            ff = _averaged_ff(spec.kind, d, t, approx)
            mean = (float(ff.ct2), float(ff.ct4))
            res = empirical_typicality(spec, t, np.array(deltas), McConfig(samples, seed, d), mean=mean)
            secs = time.perf_counter() - t0
            for r in res:
                b = P.typicality_bounds(ff, r.delta)
                gap = max(r.freq_c2 - float(b["chebyshev_c2"]), r.freq_c4 - float(b["chebyshev_c4"]))
                out.append(Check("typicality", f"{spec.kind.value} t={t:g} delta={r.delta:g}",
                                 0.0, gap, secs))
    return out


# ------------------------------------------------------------------ runner


def run_suite(suite: str, d: int | None = None, k: int | None = None,
              samples: int | None = None, seed: int | None = None) -> list[Check]:
    """Run one named suite with CLI-style overrides."""
    if suite == "weingarten":
        return weingarten_checks(ds=(d,) if d else (4, 8))
    if suite == "twirl-mc":
        pairs = [(d, k or 1)] if d else [(2, 1), (3, 1), (4, 1), (4, 2)]
        return [c for dd, kk in pairs
                for c in twirl_mc_checks(dd, kk, samples or 10_000, 7 if seed is None else seed)]
    if suite == "formfactor-mc":
        return formfactor_mc_checks("GDE", d or 64, samples or 200, seed or 0,
                                    quantities=("c2", "c3", "c4"))
    if suite == "probe-oracle":
        return [c for dd in ((d,) if d else (4, 8)) for c in probe_oracle_checks(dd, seed or 1)]
    if suite == "typicality":
        return typicality_checks(d or 64, samples=samples or 1000, seed=3 if seed is None else seed)
    raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
