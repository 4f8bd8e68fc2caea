"""The nine acceptance criteria, one test each, with pinned tolerances."""
import math
import time

import numpy as np
from scipy import stats

from isotwirl import probes as P
from isotwirl.formfactors import FormFactors, ensemble_form_factors, equilibration_time, nls_c3, nls_c4
from isotwirl.oracle import naive_nls_average
from isotwirl.series import ProbeSeries
from isotwirl.verify import (
    formfactor_mc_checks,
    probe_oracle_checks,
    twirl_mc_checks,
    typicality_checks,
    weingarten_checks,
)

KINDS = ("GUE", "GDE", "POISSON", "WD_GOE", "WD_GUE")


def worst(checks):
    bad = [c for c in checks if not c.passed]
    top = max(checks, key=lambda c: c.observed / c.tolerance if c.tolerance else c.observed)
    return bad, top


def test_criterion_1_weingarten(verdict):
    t0 = time.perf_counter()
    checks = weingarten_checks(ns=(2, 4), ds=(4, 8), tol=1e-10)
    secs = time.perf_counter() - t0
    res = max(c.observed for c in checks)
    verdict(1, all(c.passed for c in checks) and secs < 1.0,
            f"max residual {res:.1e} (< 1e-10), {secs:.2f} s (< 1 s)")


def test_criterion_2_twirl_vs_mc(verdict):
    t0 = time.perf_counter()
    checks = [c for d, k in ((2, 1), (3, 1), (4, 1), (4, 2))
              for c in twirl_mc_checks(d, k, samples=10_000, seed=7, n_se=4.0)]
    secs = time.perf_counter() - t0
    z = ", ".join(f"{c.name.split(',n=')[0]}: {c.observed:.2f}" for c in checks)
    verdict(2, all(c.passed for c in checks) and secs < 120,
            f"max |MC-symbolic|/SE {z} (< 4), {secs:.0f} s (< 120 s)")


def test_criterion_3_formfactors_vs_sampling(verdict):
    t0 = time.perf_counter()
    checks = (formfactor_mc_checks("GDE", 64, 200, seed=0, quantities=("c2", "c3", "c4"))
              + formfactor_mc_checks("GUE", 256, 400, seed=0, points=50)
              + formfactor_mc_checks("POISSON", 64, 400, seed=0, quantities=("c2", "c4")))
    secs = time.perf_counter() - t0
    bad, _ = worst(checks)
    z = ", ".join(f"{c.name.split(' d=')[0]} {c.observed:.2f}" for c in checks)
    # informational only: the opt-in semicircle form on the same samples
    semi = formfactor_mc_checks("GUE", 256, 400, seed=0, points=50, approx="semicircle")[0]
    verdict(3, not bad and secs < 600,
            f"max z {z} (< 3), {secs:.0f} s (< 600 s); GUE box form as specified "
            f"(semicircle form would give {semi.observed:.2f})")


def test_criterion_4_nls_sums(verdict):
    t0 = time.perf_counter()
    err = 0.0
    for kind in ("POISSON", "WD_GOE", "WD_GUE"):
        for d in (3, 8, 17, 32):
            for tau in (0.05, 0.7, 3.0):
                err = max(err,
                          abs(nls_c3(kind, d, tau) - naive_nls_average(kind, "c3", d, tau)),
                          abs(nls_c4(kind, d, tau) - naive_nls_average(kind, "c4", d, tau)))
    secs = time.perf_counter() - t0
    verdict(4, err < 1e-8 and secs < 60, f"max |recurrence-naive| {err:.1e} (< 1e-8), {secs:.0f} s (< 60 s)")


def test_criterion_5_asymptotic_collapse(verdict):
    d = 2**8
    t = np.geomspace(20 * d, 200 * d, 400)
    dev = {}
    for kind in KINDS:
        ff = ensemble_form_factors(kind, d, t)
        dev[kind] = max(abs(np.mean(ff.ct2) * d - 1),
                        abs(np.mean(ff.ct4) * d**3 / (2 * d - 1) - 1))
    worst_kind = max(dev, key=dev.get)
    verdict(5, max(dev.values()) < 0.05,
            f"max relative deviation {dev[worst_kind]:.3f} ({worst_kind}) (< 0.05)")


def test_criterion_6_probe_oracle(verdict):
    t0 = time.perf_counter()
    checks = probe_oracle_checks(4) + probe_oracle_checks(8)
    secs = time.perf_counter() - t0
    _, top = worst(checks)
    verdict(6, all(c.passed for c in checks) and secs < 120,
            f"{len(checks)} probes, max relative error {top.observed:.1e} ({top.name}) (< 1e-8), "
            f"{secs:.0f} s (< 120 s)")


def test_criterion_7_spot_checks(verdict):
    d = 2**10
    t = np.geomspace(0.1, 10 * d, 4000)
    late_t = np.geomspace(20 * d, 200 * d, 200)
    sc = P.SceneParams(d=d)
    gue = ensemble_form_factors("GUE", d, t)
    gue_late = ensemble_form_factors("GUE", d, late_t)
    fp = P.frame_potential_k1(gue)
    window = (t > d ** (1 / 3)) & (t < d)
    parts = {
        "FP plateau": abs(np.mean(P.frame_potential_k1(gue_late)) - 3) <= 0.1,
        "FP Haar window": abs(fp[window].min() - 1) <= 0.05,
        "TMI plateau": abs(np.mean(P.tmi_bound(gue_late, sc)) - (2 - math.log2(d))) <= 0.1,
        "OTOC4 GUE negative": P.otoc4_pauli(gue).min() < 0,
        "work(0)": P.work(FormFactors.identity(d)) == 0.0,
        "work plateau": abs(np.mean(P.work(gue_late)) - 1) <= 1e-3,
        "coherence plateau": abs(np.mean(P.coherence(gue_late, sc)) - (1 - 2 / d)) <= 1e-6,
    }
    for kind in ("POISSON", "GDE"):
        o = P.otoc4_pauli(ensemble_form_factors(kind, d, t))
        parts[f"OTOC4 {kind} >= 0"] = o.min() >= -1e-9 * np.abs(o).max()
    failed = [k for k, ok in parts.items() if not ok]
    verdict(7, not failed, f"{len(parts)} checks at d=2^10" + (f"; failed: {failed}" if failed else ""))


def _eq_times(kind, ds):
    out = []
    for d in ds:
        t = np.geomspace(0.01, 20 * d, 4000)
        ff = ensemble_form_factors(kind, d, t)
        # enter and stay in the band [0, 2/d] around the plateau 1/d
        out.append(equilibration_time(ProbeSeries("c2", kind, d, t, ff.ct2), 1 / d, 1 / d))
    return np.array(out)


def test_criterion_8_timescales(verdict):
    ds = 2 ** np.arange(6, 13)
    tp = _eq_times("POISSON", ds)
    slope = stats.linregress(np.log(ds), np.log(tp)).slope
    tg = _eq_times("GDE", ds)
    r2 = stats.linregress(np.sqrt(np.log(ds)), tg).rvalue ** 2
    verdict(8, abs(slope - 0.5) <= 0.1 and r2 > 0.9,
            f"Poisson log-log slope {slope:.3f} (0.5 +- 0.1), GDE sqrt(log d) fit R^2 {r2:.4f} (> 0.9)")


def test_criterion_9_typicality(verdict):
    checks = typicality_checks(d=64, samples=1000, seed=3)
    _, top = worst(checks)
    verdict(9, all(c.passed for c in checks),
            f"{len(checks)} (ensemble, t, delta) points, max freq - bound {top.observed:.1e} (<= 0); "
            "GUE moments from the semicircle form")
