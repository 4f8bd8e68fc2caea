"""Time series container and CSV/JSON serialization."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ProbeSeries", "log_grid", "write_csv", "write_json", "read_csv"]


def log_grid(t_min: float, t_max: float, n_points: int, include_zero: bool = False) -> np.ndarray:
    """Logarithmic time grid, optionally preceded by ``t = 0``."""
    if t_min <= 0 or t_max <= t_min or n_points < 2:
        raise ValueError("need 0 < t_min < t_max and n_points >= 2")
    t = np.geomspace(t_min, t_max, int(n_points))
    return np.concatenate([[0.0], t]) if include_zero else t


@dataclass
class ProbeSeries:
    """Values of one quantity on a time grid, with provenance."""

    quantity: str
    ensemble: str
    d: int
    t: np.ndarray
    values: np.ndarray
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values)
        if self.t.shape != self.values.shape[:1]:
            raise ValueError("t and values must have the same length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series values must be finite")

    @property
    def grid(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), np.real(self.values).tolist()))

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t": self.t, "value": np.real(self.values)}
        cols.update({k: np.asarray(v) for k, v in self.extra.items()})
        return cols


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(series_list, fh, meta: dict | None = None) -> None:
    """Long-format CSV: t, value, ensemble, d, quantity (+ extra columns)."""
    series_list = list(series_list)
    for k, v in (meta or {}).items():
        fh.write(f"# {k}={v}\n")
    extra = []
    for s in series_list:
        for k in s.extra:
            if k not in extra:
                extra.append(k)
    fh.write(",".join(["t", "value", "ensemble", "d", "quantity", *extra]) + "\n")
    for s in series_list:
        vals = np.real(s.values)
        for i, t in enumerate(s.t):
            row = [_fmt(float(t)), _fmt(float(vals[i])), s.ensemble, str(s.d), s.quantity]
            row += [_fmt(float(np.real(s.extra[k][i]))) if k in s.extra else "" for k in extra]
            fh.write(",".join(row) + "\n")


def write_json(series_list, fh, meta: dict | None = None) -> None:
    doc = {"meta": dict(meta or {}), "series": []}
    for s in series_list:
        doc["series"].append(
            {
                "quantity": s.quantity,
                "ensemble": s.ensemble,
                "d": s.d,
                "params": s.params,
                "t": s.t.tolist(),
                "value": np.real(s.values).tolist(),
                **{k: np.real(np.asarray(v)).tolist() for k, v in s.extra.items()},
            }
        )
    json.dump(doc, fh, indent=1, sort_keys=False)
    fh.write("\n")


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse a CSV written by :func:`write_csv` into (meta, rows)."""
    meta, rows, header = {}, [], None
    for line in io.StringIO(text):
        line = line.rstrip("\n")
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append(dict(zip(header, line.split(","))))
    return meta, rows
