"""CSV readers and writers for the supported data kinds.

Files are UTF-8, comma separated, one observation per row. Blank lines and
lines starting with ``#`` are ignored. Every parse error names the 1-based
line it occurred on.
"""
from dataclasses import dataclass
import math

import numpy as np

from .axial import canonical_axis
from .bookstein import bookstein_coords
from .errors import DataError, DegenerateTetradError

UNIT_RTOL = 1e-6

DIRECTION_CONVENTIONS = ("latlon_deg", "xyz")


@dataclass(frozen=True)
class Dataset:
    kind: str
    records: object
    source: str
    lines: tuple = ()

    @property
    def count(self):
        return len(self.records[0]) if self.kind == "paired_tetrads" else len(self.records)


def _read_rows(path, arity):
    """``(line number, floats)`` for each data row; ``arity`` is an int or a predicate."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            ok = arity(len(fields)) if callable(arity) else len(fields) == arity
            if not ok:
                want = "a valid number of" if callable(arity) else str(arity)
                raise DataError(f"expected {want} fields, got {len(fields)}", line=lineno)
            try:
                vals = [float(f) for f in fields]
            except ValueError:
                raise DataError(f"non-numeric field in {line!r}", line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError("non-finite value", line=lineno)
            rows.append((lineno, vals))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def latlon_to_xyz(lat_deg, lon_deg):
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    return np.stack(
        [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)], axis=-1
    )


def xyz_to_latlon(x):
    x = np.asarray(x, dtype=float)
    lat = np.degrees(np.arcsin(np.clip(x[..., 2], -1.0, 1.0)))
    lon = np.degrees(np.arctan2(x[..., 1], x[..., 0]))
    return lat, lon


def _unit_rows(rows):
    out = []
    for lineno, vals in rows:
        v = np.array(vals)
        r = np.linalg.norm(v)
        if abs(r - 1.0) > UNIT_RTOL:
            raise DataError(f"vector norm {r:.9g} is not within {UNIT_RTOL} of 1", line=lineno)
        out.append(v / r)
    return np.array(out)


def parse_directions(path, convention="latlon_deg"):
    """Unit vectors in R^3 from ``lat,lon`` (degrees) or ``x,y,z`` rows.

    ``lat,lon`` maps to ``(cos lat cos lon, cos lat sin lon, sin lat)``.
    ``x,y,z`` rows are renormalized when their norm is within 1e-6 of 1 and
    rejected otherwise.
    """
    if convention == "latlon_deg":
        rows = _read_rows(path, 2)
        for lineno, (lat, _) in rows:
            if abs(lat) > 90:
                raise DataError(f"latitude {lat} outside [-90, 90]", line=lineno)
        X = latlon_to_xyz(*np.array([v for _, v in rows]).T)
    elif convention == "xyz":
        rows = _read_rows(path, 3)
        X = _unit_rows(rows)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return Dataset("directions", X, str(path), tuple(n for n, _ in rows))


def parse_axes(path):
    """Axis representatives (any dimension N >= 2), canonical sign applied."""
    rows = _read_rows(path, lambda m: m >= 2)
    widths = {len(v) for _, v in rows}
    if len(widths) != 1:
        lineno = next(n for n, v in rows if len(v) != len(rows[0][1]))
        raise DataError("rows have different lengths", line=lineno)
    return Dataset("axes", canonical_axis(_unit_rows(rows)), str(path), tuple(n for n, _ in rows))


def parse_planar_landmarks(path, k):
    """Rows ``x1,y1,...,xk,yk`` as ``k`` complex landmarks each."""
    rows = _read_rows(path, 2 * k)
    out = []
    for lineno, vals in rows:
        v = np.array(vals)
        z = v[0::2] + 1j * v[1::2]
        if np.max(np.abs(z - z[0])) <= 1e-12 * max(np.max(np.abs(z)), 1.0):
            raise DataError("all landmarks in the row are identical", line=lineno)
        out.append(z)
    return Dataset("planar_landmarks", np.array(out), str(path), tuple(n for n, _ in rows))


def parse_tetrads(path):
    """Rows of 12 numbers: four landmarks times three coordinates."""
    rows = _read_rows(path, 12)
    T = np.array([v for _, v in rows]).reshape(-1, 4, 3)
    for (lineno, _), t in zip(rows, T):
        try:
            bookstein_coords(t)
        except DegenerateTetradError as exc:
            raise DegenerateTetradError(f"degenerate tetrad: {exc}", line=lineno) from None
    return Dataset("tetrads", T, str(path), tuple(n for n, _ in rows))


def parse_paired_tetrads(path_before, path_after):
    b = parse_tetrads(path_before)
    a = parse_tetrads(path_after)
    if b.count != a.count:
        raise DataError(
            f"paired files differ in length ({b.count} rows in {path_before}, "
            f"{a.count} in {path_after})"
        )
    return Dataset("paired_tetrads", (b.records, a.records), f"{path_before},{path_after}")


def _write_rows(path, rows, header=None):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for r in rows:
            fh.write(",".join(repr(float(x)) for x in r) + "\n")


def write_directions(path, X, convention="latlon_deg"):
    X = np.atleast_2d(X)
    if convention == "latlon_deg":
        lat, lon = xyz_to_latlon(X)
        _write_rows(path, np.column_stack([lat, lon]), "lat_deg,lon_deg")
    elif convention == "xyz":
        _write_rows(path, X, "x,y,z")
    else:
        raise ValueError(f"unknown convention {convention!r}")


def write_axes(path, X):
    _write_rows(path, np.atleast_2d(X))


def write_planar_landmarks(path, Z):
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    out = np.empty((len(Z), 2 * Z.shape[1]))
    out[:, 0::2] = Z.real
    out[:, 1::2] = Z.imag
    _write_rows(path, out)


def write_tetrads(path, T):
    T = np.asarray(T, dtype=float).reshape(-1, 12)
    _write_rows(path, T)


def load(kind, path, **kw):
    """Dispatch to the parser for ``kind``."""
    parsers = {
        "directions": parse_directions,
        "axes": parse_axes,
        "planar_landmarks": parse_planar_landmarks,
        "tetrads": parse_tetrads,
    }
    if kind not in parsers:
        raise ValueError(f"unknown dataset kind {kind!r}")
    return parsers[kind](path, **kw)
