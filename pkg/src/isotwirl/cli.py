"""Command-line front end: ``isotwirl {formfactor,probe,verify,fit-decay,sample}``.

Exit codes: 0 ok, 1 usage or parameter error, 2 verification failure, 3 IO error.
Identical arguments give byte-identical output files.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from . import probes as P
from .ensembles import EnsembleKind, EnsembleSpec, sample_spectrum
from .formfactors import FormFactors, ensemble_form_factors, gue_c2, gue_c3, gue_c4
from .oracle import McConfig, mc_ensemble_c
from .series import ProbeSeries, log_grid, write_csv, write_json

__all__ = ["main", "build_parser", "RunConfig", "fluctuation_decay_time", "fit_decay",
           "probe_series", "formfactor_series"]

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3
QUANTITIES = ("c2", "c3", "c4", "c2_2t")
# fluctuation-decay analysis: swing threshold (bits); (step, window) per ensemble
DECAY_SWING = 0.1
DECAY_GRID = {EnsembleKind.GUE: (0.01, 40.0)}
DECAY_GRID_DEFAULT = (0.05, 120.0)


class UsageError(Exception):
    """Bad command-line arguments (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    """Parsed options of one command."""

    command: str
    ensembles: list = field(default_factory=list)
    d: int = 4096
    t_min: float = 0.1
    t_max: float | None = None
    n_points: int = 200
    seed: int = 0
    n_samples: int = 0
    out: str | None = None
    fmt: str = "csv"
    emit_plot_script: bool = False

    def grid(self) -> np.ndarray:
        t_max = 10.0 * self.d if self.t_max is None else self.t_max
        return log_grid(self.t_min, t_max, self.n_points, include_zero=True)


# ----------------------------------------------------------------- helpers


def _parse_list(text: str) -> list[str]:
    return [s for s in (x.strip() for x in text.split(",")) if s]


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in _parse_list(text)]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _warn_power_of_two(d: int) -> None:
    if d & (d - 1):
        print(f"warning: d={d} is not a power of two", file=sys.stderr)


def _render(series, meta: dict, fmt: str) -> str:
    buf = io.StringIO()
    (write_json if fmt == "json" else write_csv)(series, buf, meta)
    return buf.getvalue()


def _gnuplot(data_path: str, title: str, ylabel: str, logy: bool = True) -> str:
    lines = [
        "# gnuplot script",
        'set datafile separator ","',
        "set key autotitle columnhead",
        "set logscale x",
        *(["set logscale y"] if logy else []),
        'set xlabel "t"',
        f'set ylabel "{ylabel}"',
        f'set title "{title}"',
        f'plot "{data_path}" using 1:2 with lines',
    ]
    return "\n".join(lines) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def _ensemble_path(out: str | None, ensemble: str, many: bool) -> str | None:
    if out is None or not many:
        return out
    p = Path(out)
    return str(p.with_name(f"{p.stem}_{ensemble.lower()}{p.suffix}"))


def _emit(cfg: RunConfig, series: list[ProbeSeries], meta: dict, path: str | None,
          ylabel: str, logy: bool) -> None:
    _write(path, _render(series, meta, cfg.fmt))
    if cfg.emit_plot_script:
        if path is None:
            raise UsageError("--plot needs --out")
        if cfg.fmt != "csv":
            raise UsageError("--plot needs --format csv")
        title = f"{series[0].quantity} {series[0].ensemble} d={series[0].d}"
        _write(str(Path(path).with_suffix(".gp")), _gnuplot(Path(path).name, title, ylabel, logy))


# -------------------------------------------------------------- formfactor


def _averaged(kind: EnsembleKind, d: int, t: np.ndarray, approx: str) -> FormFactors:
    if kind is EnsembleKind.GUE and approx != "box":
        return FormFactors(t, gue_c2(d, t, approx), gue_c3(d, t, approx), gue_c4(d, t, approx),
                           gue_c2(d, 2 * t, approx), d)
    return ensemble_form_factors(kind, d, t)


def _tilde(ff: FormFactors, quantity: str) -> np.ndarray:
    d = float(ff.d)
    power = {"c2": 2, "c3": 3, "c4": 4, "c2_2t": 2}[quantity]
    return np.real(np.asarray(getattr(ff, quantity))) / d**power


def formfactor_series(kind, d: int, t, quantity: str = "c2", approx: str = "box",
                      n_samples: int = 0, seed: int = 0) -> ProbeSeries:
    """Ensemble-averaged ``c̃`` (``Re c̃3``) with optional MC mean and SE columns."""
    kind = EnsembleKind.parse(kind)
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    t = np.asarray(t, dtype=float)
    ff = _averaged(kind, d, t, approx)
    extra = {}
    if n_samples:
        mc = mc_ensemble_c(EnsembleSpec(kind, d), t, McConfig(n_samples=n_samples, seed=seed, d=d))
        power = {"c2": 2, "c3": 3, "c4": 4, "c2_2t": 2}[quantity]
        extra = {
            "mc_mean": mc[quantity].mean / float(d) ** power,
            "se": mc[quantity].se / float(d) ** power,
            "n_samples": np.full(len(t), float(n_samples)),
        }
    return ProbeSeries(quantity, kind.value, d, t, _tilde(ff, quantity),
                       params={"approx": approx}, extra=extra)


def cmd_formfactor(args) -> int:
    cfg = _config(args, "formfactor")
    kind = EnsembleKind.parse(args.ensemble)
    if args.mc and kind is EnsembleKind.HAAR:
        raise UsageError("--mc needs a spectral ensemble")
    s = formfactor_series(kind, cfg.d, cfg.grid(), args.quantity, args.approx, cfg.n_samples, cfg.seed)
    meta = _meta(cfg, ensemble=kind.value, quantity=args.quantity, approx=args.approx)
    _emit(cfg, [s], meta, cfg.out, f"{args.quantity} / d^a", logy=args.quantity != "c3")
    return EXIT_OK


# ------------------------------------------------------------------- probe


_LINEAR_PROBES = {"tmi", "mutual-information", "entanglement", "free-energy", "otoc4", "work",
                  "coherence"}


def _scene(args, d: int) -> P.SceneParams:
    kw = {
        "dA": args.da, "dB": args.db, "dC": args.dc, "dD": args.dd,
        "purity_A": args.purity_a, "purity_B": args.purity_b, "beta_eps": args.eps,
    }
    kw = {k: v for k, v in kw.items() if v is not None}
    if args.purity is not None:
        kw["purity_psi"] = args.purity
    if args.deph_purity is not None:
        kw["deph_purity"] = args.deph_purity
    if args.h is not None:
        return P.SceneParams.battery(d, args.h, **kw)
    return P.SceneParams(d=d, **kw)


def probe_series(probe: str, kind, d: int, t, params: P.SceneParams,
                 trA: complex = 0.0, norm2A_sq: float | None = None) -> ProbeSeries:
    """Ensemble-averaged probe on the grid ``t``."""
    if probe not in P.PROBES:
        raise ValueError(f"unknown probe {probe!r}")
    kind = EnsembleKind.parse(kind)
    t = np.asarray(t, dtype=float)
    ff = ensemble_form_factors(kind, d, t)
    extra = {}
    if probe == "frame-potential":
        val = P.frame_potential_k1(ff)
        extra["lower_bound"] = P.frame_potential_bound(ff)
    elif probe == "loschmidt1":
        val = P.loschmidt1(ff)
    elif probe == "otoc2":
        val = P.otoc2(ff, trA, float(d) if norm2A_sq is None else norm2A_sq)
    elif probe == "otoc4":
        val = P.otoc4_pauli(ff)
    elif probe == "loschmidt2":
        val = P.loschmidt2_pauli(ff)
    elif probe == "entanglement":
        val = P.entanglement_bound(ff, params)
    elif probe == "mutual-information":
        val = P.mutual_information_bound(ff, params)
    elif probe == "tmi":
        val = P.tmi_bound(ff, params)
    elif probe == "coherence":
        val = P.coherence(ff, params)
    elif probe == "convergence":
        val = P.convergence_f(ff, params)
    elif probe == "work":
        val = P.work(ff)
    elif probe == "work-fluct":
        val = P.work_fluctuations(ff, params)
    else:
        lower, val = P.free_energy_bounds(ff, params)
        extra["lower"] = np.asarray(lower)
    p = {k: getattr(params, k) for k in ("dA", "dB", "dC", "dD", "purity_psi", "purity_A",
                                          "purity_B", "deph_purity", "E0", "E_HT", "trH0sq", "beta_eps")}
    return ProbeSeries(probe, kind.value, d, t, np.real(np.asarray(val)), params=p,
                       extra={k: np.real(np.asarray(v)) for k, v in extra.items()})


def cmd_probe(args) -> int:
    cfg = _config(args, "probe")
    params = _scene(args, cfg.d)
    kinds = [EnsembleKind.parse(e) for e in cfg.ensembles]
    grid = cfg.grid()
    many = len(kinds) > 1
    for kind in kinds:
        s = probe_series(args.name, kind, cfg.d, grid, params, complex(args.tra), args.norm2a)
        meta = _meta(cfg, ensemble=kind.value, probe=args.name,
                     **{k: s.params[k] for k in sorted(s.params)})
        _emit(cfg, [s], meta, _ensemble_path(cfg.out, kind.value, many), args.name,
              logy=args.name not in _LINEAR_PROBES)
    return EXIT_OK


# ------------------------------------------------------------------ verify


def cmd_verify(args) -> int:
    from .verify import report, run_suite

    checks = run_suite(args.suite, d=args.d, k=args.k, samples=args.samples, seed=args.seed)
    doc = report(checks)
    doc["suite"] = args.suite
    # wall-clock timings would break byte-identical output
    for c in doc["checks"]:
        c.pop("seconds")
    _write(args.out, json.dumps(doc, indent=1) + "\n")
    return EXIT_OK if doc["passed"] else EXIT_VERIFY


# --------------------------------------------------------------- fit-decay


def fluctuation_decay_time(t, values, swing: float = DECAY_SWING) -> float:
    """Time of the last oscillation whose peak-to-trough swing exceeds ``swing``.

    Oscillations are read off consecutive local extrema of ``values``; a
    series without such swings (e.g. monotone) gives ``t[0]``.
    """
    t = np.asarray(t, dtype=float)
    v = np.real(np.asarray(values, dtype=float))
    slope = np.sign(np.diff(v))
    turns = np.nonzero(slope[1:] * slope[:-1] < 0)[0] + 1
    if len(turns) < 2:
        return float(t[0])
    big = np.nonzero(np.abs(np.diff(v[turns])) > swing)[0]
    return float(t[turns[big[-1] + 1]]) if len(big) else float(t[0])


def fit_decay(ds, times) -> dict:
    """Least squares ``t_fluct = a + b log2 d``."""
    ds = np.asarray(ds, dtype=float)
    times = np.asarray(times, dtype=float)
    if len(np.unique(ds)) < 4:
        raise ValueError("need at least 4 distinct d values")
    x = np.log2(ds)
    if np.ptp(times) == 0:
        return {"a": float(times[0]), "b": 0.0, "r2": 1.0, "b_stderr": 0.0}
    fit = stats.linregress(x, times)
    return {"a": float(fit.intercept), "b": float(fit.slope), "r2": float(fit.rvalue**2),
            "b_stderr": float(fit.stderr)}


def _tmi_decay_time(kind, d: int, dc: int | None, t_max: float | None, swing: float) -> float:
    step, window = DECAY_GRID.get(kind, DECAY_GRID_DEFAULT)
    t = np.arange(step, window if t_max is None else t_max, step)
    params = P.SceneParams(d=d, dC=dc) if dc else P.SceneParams(d=d)
    vals = np.concatenate([
        np.atleast_1d(P.tmi_bound(ensemble_form_factors(kind, d, chunk), params))
        for chunk in np.array_split(t, max(1, len(t) // 500))
    ])
    return fluctuation_decay_time(t, vals, swing)


def cmd_fit_decay(args) -> int:
    if args.times:
        pairs = [p.split(":") for p in _parse_list(args.times)]
        try:
            ds = [int(a) for a, _ in pairs]
            times = [float(b) for _, b in pairs]
        except ValueError:
            raise UsageError("--times expects d:t pairs") from None
    else:
        ds = _parse_ints(args.ds)
        kind = EnsembleKind.parse(args.ensemble)
        times = [_tmi_decay_time(kind, d, args.dc, args.tmax, args.swing) for d in ds]
    res = fit_decay(ds, times)
    doc = {"ensemble": None if args.times else EnsembleKind.parse(args.ensemble).value,
           "swing": args.swing, "d": ds, "t_fluct": times, **res}
    _write(args.out, json.dumps(doc, indent=1) + "\n")
    return EXIT_OK


# ------------------------------------------------------------------ sample


def cmd_sample(args) -> int:
    kind = EnsembleKind.parse(args.ensemble)
    _warn_power_of_two(args.d)
    sp = sample_spectrum(EnsembleSpec(kind, args.d), args.seed)
    text = sp.to_json() + "\n" if args.format == "json" else sp.to_csv()
    _write(args.out, text)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _meta(cfg: RunConfig, **extra) -> dict:
    t_max = 10.0 * cfg.d if cfg.t_max is None else cfg.t_max
    meta = {"isotwirl": __version__, "command": cfg.command, "d": cfg.d, "t_min": cfg.t_min,
            "t_max": t_max, "points": cfg.n_points, "seed": cfg.seed, "mc": cfg.n_samples}
    meta.update(extra)
    return meta


def _config(args, command: str) -> RunConfig:
    ens = _parse_list(args.ensembles) if getattr(args, "ensembles", None) else [args.ensemble]
    if args.d < 2:
        raise UsageError("--d must be >= 2")
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    _warn_power_of_two(args.d)
    return RunConfig(command, ens, args.d, args.tmin, args.tmax, args.points, args.seed,
                     getattr(args, "mc", 0) or 0, args.out, args.format, args.plot)


def _add_common(p: argparse.ArgumentParser, d_default: int = 4096) -> None:
    p.add_argument("--d", type=int, default=d_default, help="Hilbert-space dimension")
    p.add_argument("--points", type=int, default=200, help="log-grid points (t=0 is added)")
    p.add_argument("--tmin", type=float, default=0.1)
    p.add_argument("--tmax", type=float, default=None, help="default 10*d")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot", action="store_true", help="write a gnuplot script next to --out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isotwirl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"isotwirl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ff = sub.add_parser("formfactor", help="ensemble-averaged spectral form factors")
    ff.add_argument("--ensemble", default="gue")
    ff.add_argument("--quantity", choices=QUANTITIES, default="c2")
    ff.add_argument("--approx", choices=("box", "semicircle"), default="box",
                    help="GUE density approximation")
    ff.add_argument("--mc", type=int, default=0, help="add MC mean/SE columns from N spectra")
    _add_common(ff)
    ff.set_defaults(func=cmd_formfactor)

    pr = sub.add_parser("probe", help="ensemble-averaged chaos probe")
    pr.add_argument("name", choices=P.PROBES)
    pr.add_argument("--ensembles", "--ensemble", dest="ensembles", default="gue,gde,poisson")
    pr.add_argument("--da", type=int)
    pr.add_argument("--db", type=int)
    pr.add_argument("--dc", type=int)
    pr.add_argument("--dd", type=int)
    pr.add_argument("--purity", type=float, help="tr psi^2 of the initial state")
    pr.add_argument("--purity-a", type=float)
    pr.add_argument("--purity-b", type=float)
    pr.add_argument("--deph-purity", type=float, help="sum_i <i|psi|i>^2 (coherence)")
    pr.add_argument("--h", type=float, help="battery parameter (work-fluct)")
    pr.add_argument("--eps", type=float, help="beta*epsilon (free-energy)")
    pr.add_argument("--tra", type=complex, default=0.0, help="tr A (otoc2)")
    pr.add_argument("--norm2a", type=float, help="||A||_2^2 (otoc2, default d)")
    _add_common(pr)
    pr.set_defaults(func=cmd_probe)

    from .verify import SUITES

    ve = sub.add_parser("verify", help="run a verification suite, JSON report")
    ve.add_argument("suite", choices=SUITES)
    ve.add_argument("--d", type=int)
    ve.add_argument("--k", type=int, choices=(1, 2))
    ve.add_argument("--samples", type=int)
    ve.add_argument("--seed", type=int)
    ve.add_argument("--out", default=None)
    ve.set_defaults(func=cmd_verify)

    fd = sub.add_parser("fit-decay", help="fit t_fluct = a + b log2 d of TMI oscillations")
    fd.add_argument("--ensemble", default="gue")
    fd.add_argument("--ds", default="256,1024,4096,16384", help="comma-separated dimensions")
    fd.add_argument("--dc", type=int, help="dim of C (default sqrt d)")
    fd.add_argument("--times", help="skip the TMI: comma-separated d:t_fluct pairs")
    fd.add_argument("--swing", type=float, default=DECAY_SWING, help="oscillation threshold (bits)")
    fd.add_argument("--tmax", type=float)
    fd.add_argument("--out", default=None)
    fd.set_defaults(func=cmd_fit_decay)

    sa = sub.add_parser("sample", help="draw one spectrum")
    sa.add_argument("--ensemble", default="gue")
    sa.add_argument("--d", type=int, default=64)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--out", default=None)
    sa.add_argument("--format", choices=("csv", "json"), default="csv")
    sa.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            warnings.simplefilter("always", P.ClampWarning)
            return args.func(args)
    except UsageError as exc:
        print(f"isotwirl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"isotwirl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"isotwirl: io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
