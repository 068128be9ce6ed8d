"""Geometry of the unit sphere S^d in R^(d+1).

Exponential and logarithm maps, the S^2 tangent frame away from the poles,
logarithmic coordinates, the Hessian of the squared geodesic distance in
those coordinates, and the closed form extrinsic covariance for the
inclusion embedding.
"""
import math

import numpy as np

from .errors import CutLocusError, DataError, FocalMeanError
from .manifold import Chart

UNIT_TOL = 1e-12
ANTIPODAL_TOL = 1e-9
POLE_TOL = 1e-18
SERIES_CUTOFF = 1e-4


def as_unit(p, tol=UNIT_TOL):
    """Return ``p`` as a float array after checking ``||p|| = 1``."""
    p = np.asarray(p, dtype=float)
    err = np.max(np.abs(np.linalg.norm(p, axis=-1) - 1.0))
    if err > tol:
        raise DataError(f"point is not on the unit sphere (| ||p|| - 1 | = {err:.2e})")
    return p


def normalize(x):
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def exp_map(p, v):
    """``Exp_p(v) = cos(|v|) p + sin(|v|) v / |v|``, with ``Exp_p(0) = p``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    t = np.linalg.norm(v, axis=-1, keepdims=True)
    # np.sinc(x) = sin(pi x) / (pi x), exact at 0
    return np.cos(t) * p + np.sinc(t / np.pi) * v


def log_map(p, x):
    """Inverse of :func:`exp_map` off the cut locus ``{-p}``.

    The returned tangent vector has norm equal to the geodesic distance.
    Broadcasts over leading axes of ``x``.
    """
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    c = np.sum(x * p, axis=-1, keepdims=True)
    if np.any(c < -1.0 + ANTIPODAL_TOL):
        raise CutLocusError("logarithm requested at an antipodal point")
    w = x - c * p
    s = np.linalg.norm(w, axis=-1, keepdims=True)
    theta = np.arctan2(s, c)
    # theta / sin(theta) -> 1 as s -> 0
    scale = np.where(s > 1e-300, theta / np.where(s > 1e-300, s, 1.0), 1.0)
    return scale * w


def distance(p, x):
    """Great circle distance, broadcasting over leading axes of ``x``."""
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    c = np.sum(x * p, axis=-1)
    s = np.linalg.norm(x - c[..., None] * p, axis=-1)
    return np.arctan2(s, c)


def tangent_frame_s2(p):
    """Orthonormal frame ``(e1(p), e2(p))`` of ``T_p S^2`` off the poles.

    ``e1 = (-p2, p1, 0) / s`` and ``e2 = (-p1 p3 / s, -p2 p3 / s, s)`` with
    ``s = sqrt(p1**2 + p2**2)``. Returned as the rows of a 2x3 array.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError("tangent_frame_s2 needs a point of S^2")
    s2 = p[0] ** 2 + p[1] ** 2
    if s2 <= POLE_TOL:
        raise DataError("the S^2 frame is undefined at the poles")
    s = math.sqrt(s2)
    e1 = np.array([-p[1], p[0], 0.0]) / s
    e2 = np.array([-p[0] * p[2] / s, -p[1] * p[2] / s, s])
    return np.stack([e1, e2])


def completion_frame(p):
    """Some orthonormal basis of ``p``'s orthogonal complement, as rows."""
    p = np.asarray(p, dtype=float)
    Q, _ = np.linalg.qr(np.column_stack([p, np.eye(p.size)]))
    return Q[:, 1:].T


def tangent_frame(p):
    """Tangent frame at ``p``: the S^2 frame where it is defined, else a completion."""
    p = np.asarray(p, dtype=float)
    if p.shape == (3,) and p[0] ** 2 + p[1] ** 2 > POLE_TOL:
        return tangent_frame_s2(p)
    return completion_frame(p)


def log_coords(p, x, frame=None):
    """Coordinates ``u^r = e_r(p) . Log_p x``; ``||u||`` is the geodesic distance."""
    if frame is None:
        frame = tangent_frame(p)
    return log_map(p, x) @ np.asarray(frame).T


def from_log_coords(p, u, frame=None):
    if frame is None:
        frame = tangent_frame(p)
    return exp_map(p, np.asarray(u, dtype=float) @ np.asarray(frame))


def log_chart(p, frame=None):
    """Chart ``phi = Log_p`` expressed in the frame at ``p``."""
    p = as_unit(p)
    frame = tangent_frame(p) if frame is None else np.asarray(frame)
    return Chart(
        identifier=f"log@{np.array2string(p, precision=6, separator=',')}",
        to_coords=lambda x: log_coords(p, x, frame),
        from_coords=lambda u: from_log_coords(p, u, frame),
        base_point=p,
        dim=frame.shape[0],
    )


def _cot_terms(t):
    """``(1 - t/tan t) / t**2`` and ``t / tan t``, series-evaluated near 0."""
    t = np.asarray(t, dtype=float)
    small = t < SERIES_CUTOFF
    ts = np.where(small, 1.0, t)
    tcot = np.where(small, 1.0 - t**2 / 3.0 - t**4 / 45.0, ts / np.tan(ts))
    radial = np.where(small, 1.0 / 3.0 + t**2 / 45.0, (1.0 - tcot) / ts**2)
    return radial, tcot


def hessian(u):
    """Hessian in ``theta`` at 0 of ``rho^2(x, Exp_p(theta))`` for ``x`` at coords ``u``.

    ``2 u u^T / |u|^2 (1 - |u| / tan|u|) + 2 I |u| / tan|u|``; works in any
    dimension and broadcasts over a leading sample axis.
    """
    u = np.asarray(u, dtype=float)
    t = np.linalg.norm(u, axis=-1)
    if np.any(t >= math.pi):
        raise ValueError("Hessian formula needs |u| < pi")
    radial, tcot = _cot_terms(t)
    d = u.shape[-1]
    outer = u[..., :, None] * u[..., None, :]
    return 2.0 * radial[..., None, None] * outer + 2.0 * tcot[..., None, None] * np.eye(d)


def hessian_entry(u, r, s):
    """Entry ``(r, s)`` (0-based) of :func:`hessian`."""
    return float(hessian(u)[r, s])


def lambda_hat(coords):
    """Average Hessian over the charted sample."""
    return np.mean(hessian(np.atleast_2d(coords)), axis=0)


def squared_distance_model(u, theta):
    """Second-order model of ``rho^2(x, Exp_p(theta))`` with ``x = Exp_p(u)``.

    Its Hessian at ``theta = 0`` is exactly :func:`hessian`; used as a
    finite-difference oracle.
    """
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    t = np.linalg.norm(u)
    arg = math.cos(t) + np.sinc(t / math.pi) * float(u @ theta) - 0.5 * float(theta @ theta) * math.cos(t)
    return math.acos(max(-1.0, min(1.0, arg))) ** 2


def sphere_extrinsic_cov(sample, mu, frame=None):
    """Closed form extrinsic covariance for the inclusion ``S^d -> R^(d+1)``.

    ``|mu|^-2`` times the mean outer product of the tangential components
    ``X . e_a(mu / |mu|)``.
    """
    X = np.asarray(sample, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = float(np.linalg.norm(mu))
    if r <= 1e-12:
        raise FocalMeanError("mean vector is zero: every point is a nearest point", gap=r)
    if frame is None:
        frame = tangent_frame(mu / r)
    T = X @ np.asarray(frame).T
    return T.T @ T / len(X) / r**2
