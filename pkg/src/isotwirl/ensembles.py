"""Random spectra: GUE, GDE and nearest-level-spacing (NLS) ensembles.

NLS spectra are built by the stosszahlansatz, ``E_1 = 0`` and
``E_{a+1} = E_a + s_a`` with i.i.d. unit-mean spacings. Their largest
eigenvalue is O(d), so they carry ``time_rescale = 1/d``; form factors
evaluate them at ``t/d`` to share the time axis of GUE/GDE.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "EnsembleKind",
    "EnsembleSpec",
    "Spectrum",
    "NLS_KINDS",
    "substream",
    "sample_spectrum",
    "spacing_pdf",
    "characteristic_function",
]


class EnsembleKind(str, enum.Enum):
    GUE = "GUE"
    GDE = "GDE"
    POISSON = "POISSON"
    WD_GOE = "WD_GOE"
    WD_GUE = "WD_GUE"
    HAAR = "HAAR"

    @classmethod
    def parse(cls, value) -> "EnsembleKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "_")
        aliases = {"P": "POISSON", "WDO": "WD_GOE", "WDU": "WD_GUE", "WDGOE": "WD_GOE", "WDGUE": "WD_GUE"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown ensemble {value!r}") from None


NLS_KINDS = frozenset({EnsembleKind.POISSON, EnsembleKind.WD_GOE, EnsembleKind.WD_GUE})


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    d: int

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind.parse(self.kind))
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def is_nls(self) -> bool:
        return self.kind in NLS_KINDS


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues of one sampled Hamiltonian."""

    energies: np.ndarray
    source: EnsembleSpec
    seed: int | None = None

    def __post_init__(self):
        e = np.array(self.energies, dtype=float)
        if e.ndim != 1 or len(e) != self.source.d:
            raise ValueError("energies must be a 1-d array of length d")
        if np.any(np.diff(e) < 0):
            e = np.sort(e)
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    @property
    def d(self) -> int:
        return self.source.d

    @property
    def time_rescale(self) -> float:
        return 1.0 / self.d if self.source.is_nls else 1.0

    def to_csv(self) -> str:
        """``# kind=..``/``# d=..``/``# seed=..`` header, then one energy per line."""
        lines = [f"# kind={self.source.kind.value}", f"# d={self.d}", f"# seed={self.seed}", "energy"]
        lines += [repr(float(e)) for e in self.energies]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        meta, energies = {}, []
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            elif line and line != "energy":
                energies.append(float(line))
        seed = meta.get("seed", "None")
        return cls(np.array(energies), EnsembleSpec(meta["kind"], int(meta["d"])),
                   None if seed == "None" else int(seed))

    def to_json(self) -> str:
        return json.dumps({"kind": self.source.kind.value, "d": self.d, "seed": self.seed,
                           "energies": [float(e) for e in self.energies]})

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        doc = json.loads(text)
        return cls(np.array(doc["energies"], dtype=float), EnsembleSpec(doc["kind"], doc["d"]), doc["seed"])


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for stream ``index`` derived from ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def _as_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), (None if rng is None else int(rng))


def _gue_eigenvalues(d: int, rng: np.random.Generator) -> np.ndarray:
    # off-diagonal E|H_ij|^2 = 1/d, diagonal variance 1/d: support [-2, 2]
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)
    h = (g + g.conj().T) / np.sqrt(2)
    return np.linalg.eigvalsh(h)


def _sample_spacings(kind: EnsembleKind, n: int, rng: np.random.Generator) -> np.ndarray:
    if kind is EnsembleKind.POISSON:
        return rng.exponential(1.0, n)
    if kind is EnsembleKind.WD_GOE:
        return rng.rayleigh(np.sqrt(2 / np.pi), n)
    if kind is EnsembleKind.WD_GUE:
        # Maxwell law with scale sqrt(pi/8) has mean one
        return np.sqrt(rng.chisquare(3, n)) * np.sqrt(np.pi / 8)
    raise ValueError(f"{kind} has no spacing law")


def sample_spectrum(spec: EnsembleSpec, rng=None) -> Spectrum:
    """Draw one spectrum from ``spec``.

    Parameters
    ----------
    spec : EnsembleSpec
    rng : numpy Generator, int seed or None
    """
    gen, seed = _as_rng(rng)
    d = spec.d
    kind = spec.kind
    if kind is EnsembleKind.HAAR:
        raise ValueError("HAAR has no spectral density; use oracle.sample_haar_unitary")
    if kind is EnsembleKind.GUE:
        e = _gue_eigenvalues(d, gen)
    elif kind is EnsembleKind.GDE:
        e = np.sort(gen.normal(0.0, 0.5, d))
    else:
        e = np.concatenate([[0.0], np.cumsum(_sample_spacings(kind, d - 1, gen))])
    return Spectrum(energies=e, source=spec, seed=seed)


def spacing_pdf(kind, s):
    """Nearest-level-spacing density (unit mean)."""
    kind = EnsembleKind.parse(kind)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("spacing must be non-negative")
    if kind is EnsembleKind.POISSON:
        out = np.exp(-s)
    elif kind is EnsembleKind.WD_GOE:
        out = 0.5 * np.pi * s * np.exp(-np.pi * s**2 / 4)
    elif kind is EnsembleKind.WD_GUE:
        out = 32 / np.pi**2 * s**2 * np.exp(-4 * s**2 / np.pi)
    else:
        raise ValueError(f"{kind} has no spacing law")
    return out[()] if out.ndim == 0 else out


def _scaled_erfi(x):
    # exp(-x^2) erfi(x) = 2/sqrt(pi) * D(x), stable for large x
    return 2 / np.sqrt(np.pi) * special.dawsn(x)


def characteristic_function(kind, t):
    """``g(t) = ∫_0^∞ e^{ist} P(s) ds`` for an NLS spacing law.

    Defined for real ``t`` of either sign, ``g(-t) = conj(g(t))``.
    """
    kind = EnsembleKind.parse(kind)
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    if kind is EnsembleKind.POISSON:
        g = 1j / (1j + a)
    elif kind is EnsembleKind.WD_GOE:
        x = a / np.sqrt(np.pi)
        g = 1 - a * _scaled_erfi(x) + 1j * a * np.exp(-(x**2))
    elif kind is EnsembleKind.WD_GUE:
        x = np.sqrt(np.pi) * a / 4
        q = np.pi * a**2 - 8
        g = 0.125j * (4 * a - q * _scaled_erfi(x) + 1j * q * np.exp(-(x**2)))
    else:
        raise ValueError(f"{kind} has no characteristic function")
    g = np.where(t < 0, np.conj(g), g)
    return g[()] if g.ndim == 0 else g
