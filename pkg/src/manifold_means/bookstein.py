"""Bookstein coordinates of tetrads in R^3 and the paired shape-change test.

Landmarks 1 and 2 are sent to ``(-1/2, 0, 0)`` and ``(1/2, 0, 0)``, landmark
3 into the upper half of the xy-plane; the five remaining coordinates of
landmarks 3 and 4 are the shape coordinates. Inference uses the flat metric
on these coordinates.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateTetradError
from .frechet import flat_sample, paired_test

A_RTOL = 1e-12
B_RTOL = 1e-18


def as_tetrads(t):
    t = np.asarray(t, dtype=float)
    if t.shape[-2:] != (4, 3):
        t = t.reshape(t.shape[:-1] + (4, 3))
    return t


def tetrad_scale(t):
    """RMS distance of the four landmarks from their centroid."""
    t = as_tetrads(t)
    c = t - t.mean(axis=-2, keepdims=True)
    return np.sqrt(np.mean(np.sum(c**2, axis=-1), axis=-1))


def centered_w(t):
    """``w[r, i] = x_i^r - (x_1^r + x_2^r) / 2`` for landmarks ``i = 2, 3, 4``.

    Returned with coordinate index ``r`` on the rows and landmark on the
    columns, so column 0 is landmark 2.
    """
    t = as_tetrads(t)
    mid = 0.5 * (t[..., 0, :] + t[..., 1, :])
    return np.swapaxes(t[..., 1:, :] - mid[..., None, :], -1, -2)


def _coords_one(t, index=None):
    w = centered_w(t)
    w2, w3, w4 = w[:, 0], w[:, 1], w[:, 2]
    scale = float(tetrad_scale(t))
    a = 2.0 * float(w2 @ w2)
    if a <= A_RTOL * scale**2 or scale == 0:
        raise DegenerateTetradError(
            "landmarks 1 and 2 coincide", line=None if index is None else index + 1
        )
    cross = np.cross(w2, w3)
    b = float(cross @ cross)
    if b <= B_RTOL * scale**4:
        raise DegenerateTetradError(
            "landmarks 1, 2, 3 are collinear", line=None if index is None else index + 1
        )
    v1 = float(w2 @ w3) / a
    v2 = math.sqrt(b) / a
    v3 = float(w2 @ w4) / a
    v4 = (float(w2 @ w2) * float(w3 @ w4) - float(w2 @ w3) * float(w2 @ w4)) / (a * math.sqrt(b))
    v5 = float(np.linalg.det(np.column_stack([w2, w3, w4]))) / math.sqrt(2.0 * a * b)
    return np.array([v1, v2, v3, v4, v5])


def bookstein_coords(t):
    """Five similarity-invariant shape coordinates of each tetrad.

    With ``a = 2 |w_2|^2`` and ``b = |w_2 x w_3|^2``::

        v1 = w_2 . w_3 / a
        v2 = sqrt(b) / a
        v3 = w_2 . w_4 / a
        v4 = (|w_2|^2 (w_3 . w_4) - (w_2 . w_3)(w_2 . w_4)) / (a sqrt(b))
        v5 = det(w_2, w_3, w_4) / sqrt(2 a b)

    Raises
    ------
    DegenerateTetradError
        If landmarks 1 and 2 coincide or 1, 2, 3 are collinear (relative to
        the tetrad's RMS size). For a batch the offending row is reported.
    """
    t = as_tetrads(t)
    if t.ndim == 2:
        return _coords_one(t)
    return np.stack([_coords_one(x, i) for i, x in enumerate(t)])


def tetrad_from_coords(v):
    """A tetrad whose Bookstein coordinates are ``v`` (inverse up to similarity)."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [v[0], v[1], 0.0], [v[2], v[3], v[4]]]
    )


@dataclass
class ShapeChangeResult:
    statistic: float
    p_clt: float
    p_boot: float
    gamma: np.ndarray
    per_coordinate_intervals: list
    level: float
    bonferroni_note: str
    degenerate_count: int
    B: int
    seed: int


def paired_shape_change_test(before, after, plan, level=0.95):
    """Paired test for a change of mean Bookstein shape between two visits.

    The per-coordinate intervals are equal-tail percentile intervals of the
    bootstrap differences ``gamma*`` at ``level`` each, not simultaneously.
    """
    vb = bookstein_coords(before)
    va = bookstein_coords(after)
    if len(vb) != len(va):
        raise ValueError(f"paired samples differ in length ({len(vb)} vs {len(va)})")
    res = paired_test(flat_sample(vb), flat_sample(va), plan)
    q = len(res.gamma)
    note = (
        f"intervals are {level:.0%} marginal; for simultaneous {level:.0%} coverage use "
        f"per-coordinate level {1 - (1 - level) / q:.4f} (Bonferroni over {q} coordinates)"
    )
    return ShapeChangeResult(
        statistic=res.statistic,
        p_clt=res.p_clt,
        p_boot=res.p_boot,
        gamma=res.gamma,
        per_coordinate_intervals=res.intervals(level),
        level=level,
        bonferroni_note=note,
        degenerate_count=res.distribution.degenerate_count,
        B=plan.B,
        seed=plan.seed,
    )
