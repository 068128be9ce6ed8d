"""Extrinsic means for a closed embedding ``j: M -> R^k``.

An :class:`Embedding` maps manifold points to real ambient coordinate
vectors and projects ambient vectors back to their nearest embedded point.
On top of that this module builds the plug-in extrinsic covariance
``G = A S A^T`` (``S`` the ambient covariance, ``A`` the tangential part of
the differential of the projection at the ambient mean), the two studentized
T statistics, chi-square regions and their bootstrap analogues.

Ambient coordinates are always taken in an orthonormal basis, so dot
products of coordinate vectors are the ambient inner product.
"""
from dataclasses import dataclass

import numpy as np

from . import sphere
from .errors import FocalMeanError
from .frechet import (
    BootstrapDistribution,
    ZERO_TOL,
    _distribution,
    run_replicates,
)
from .stat_kernel import chi2_quantile, chi2_sf, empirical_cov, inv_sqrt_pd, polar_orthonormalize


@dataclass(frozen=True)
class Projection:
    """Nearest-point projection of an ambient vector.

    ``frame`` holds ``dim`` orthonormal tangent vectors at ``embedded`` as rows.
    """

    point: np.ndarray
    embedded: np.ndarray
    frame: np.ndarray
    gap: float


class Embedding:
    """Interface shared by the concrete embeddings.

    Subclasses set ``dim``, ``ambient_dim`` and ``conformal_factor`` (the
    constant ``c`` with ``|dj(v)|^2 = c |v|^2``) and implement ``embed``,
    ``projection`` and ``tangent_project``. ``d_project`` defaults to
    central differences.
    """

    dim: int
    ambient_dim: int
    conformal_factor: float = 1.0

    def embed(self, points):
        raise NotImplementedError

    def projection(self, y):
        raise NotImplementedError

    def tangent_project(self, q, v):
        """Orthogonal projection of ambient vectors ``v`` onto ``T_q j(M)``."""
        raise NotImplementedError

    def d_project(self, y, H):
        return numeric_d_project(self, y, H)

    def canonical(self, point):
        return np.asarray(point)


def numeric_d_project(embedding, y, H, h=None):
    """Central-difference differential of the projection at ``y`` along rows of ``H``."""
    y = np.asarray(y, dtype=float)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if h is None:
        h = 1e-6 * (1.0 + np.linalg.norm(y))
    out = np.empty_like(H)
    for i, direction in enumerate(H):
        plus = embedding.projection(y + h * direction).embedded
        minus = embedding.projection(y - h * direction).embedded
        out[i] = (plus - minus) / (2 * h)
    return out


class SphereEmbedding(Embedding):
    """Inclusion ``S^d -> R^(d+1)``; the projection is radial."""

    conformal_factor = 1.0

    def __init__(self, d=2):
        self.dim = d
        self.ambient_dim = d + 1

    def embed(self, points):
        return np.atleast_2d(np.asarray(points, dtype=float))

    def projection(self, y):
        y = np.asarray(y, dtype=float)
        r = float(np.linalg.norm(y))
        if r <= 1e-12:
            raise FocalMeanError("mean vector is zero: every point is a nearest point", gap=r)
        p = y / r
        return Projection(p, p, sphere.tangent_frame(p), r)

    def tangent_project(self, q, v):
        v = np.asarray(v, dtype=float)
        return v - np.outer(v @ q, q).reshape(v.shape)

    def d_project(self, y, H):
        y = np.asarray(y, dtype=float)
        H = np.atleast_2d(np.asarray(H, dtype=float))
        r = np.linalg.norm(y)
        p = y / r
        return (H - np.outer(H @ p, p)) / r


class ScaledEmbedding(Embedding):
    """``s * j`` for a base embedding ``j``: every ambient length scales by ``s``."""

    def __init__(self, base, s):
        if s <= 0:
            raise ValueError("scale must be positive")
        self.base = base
        self.s = float(s)
        self.dim = base.dim
        self.ambient_dim = base.ambient_dim
        self.conformal_factor = base.conformal_factor * self.s**2

    def embed(self, points):
        return self.s * self.base.embed(points)

    def projection(self, y):
        pr = self.base.projection(np.asarray(y) / self.s)
        return Projection(pr.point, self.s * pr.embedded, pr.frame, self.s * pr.gap)

    def tangent_project(self, q, v):
        return self.base.tangent_project(np.asarray(q) / self.s, v)

    def d_project(self, y, H):
        return self.base.d_project(np.asarray(y) / self.s, H)

    def canonical(self, point):
        return self.base.canonical(point)


@dataclass(frozen=True)
class ExtrinsicSummary:
    n: int
    ambient_mean: np.ndarray
    projected_mean: np.ndarray
    mean_point: np.ndarray
    frame: np.ndarray
    s_hat: np.ndarray
    g_hat: np.ndarray
    nonfocal_gap: float


def tangential_jacobian(embedding, y, frame, numeric=False):
    """``A[a, b] = d P(y)(E_b) . e_a`` for the ambient basis vectors ``E_b``."""
    I = np.eye(embedding.ambient_dim)
    J = numeric_d_project(embedding, y, I) if numeric else embedding.d_project(y, I)
    return frame @ J.T


def extrinsic_cov(sample, embedding, summary=None, numeric=False):
    """Plug-in extrinsic covariance ``A S A^T`` (divisor ``n`` in ``S``)."""
    Y = embedding.embed(sample)
    y = Y.mean(axis=0)
    if summary is None:
        pr = embedding.projection(y)
        frame = pr.frame
    else:
        frame = summary.frame
    A = tangential_jacobian(embedding, y, frame, numeric=numeric)
    G = A @ empirical_cov(Y) @ A.T
    return 0.5 * (G + G.T)


def extrinsic_mean(sample, embedding):
    Y = embedding.embed(sample)
    y = Y.mean(axis=0)
    pr = embedding.projection(y)
    S = empirical_cov(Y)
    A = tangential_jacobian(embedding, y, pr.frame)
    G = A @ S @ A.T
    return ExtrinsicSummary(
        n=len(Y),
        ambient_mean=y,
        projected_mean=embedding.embed(pr.point)[0],
        mean_point=pr.point,
        frame=pr.frame,
        s_hat=S,
        g_hat=0.5 * (G + G.T),
        nonfocal_gap=pr.gap,
    )


def complete_frame(embedding, q, frame):
    """Tangent frame at the embedded point ``q`` aligned with ``frame``.

    The rows of ``frame`` are projected onto ``T_q`` and replaced by the
    nearest orthonormal set (polar factor), so a rotation of the input frame
    within its tangent space rotates the output frame the same way.
    """
    return polar_orthonormalize(embedding.tangent_project(q, np.asarray(frame)))


def _studentized(n, g_hat, t):
    if np.max(np.abs(t)) <= ZERO_TOL:
        return 0.0
    R = inv_sqrt_pd(g_hat)
    z = R @ t
    return float(n * z @ z)


def t_stat_population_frame(summary, embedding, hypothesized, g_hat=None):
    """``n |G^-1/2 tan_q(P(ybar) - q)|^2`` with ``q = j(hypothesized)``.

    The tangential component is taken in the frame at ``q`` completed from
    the sample frame, so its basis matches the one ``G`` is expressed in.
    """
    q = embedding.embed(hypothesized)[0]
    F = complete_frame(embedding, q, summary.frame)
    t = F @ (summary.projected_mean - q)
    return _studentized(summary.n, summary.g_hat if g_hat is None else g_hat, t)


def t_stat_sample_frame(summary, embedding, hypothesized, g_hat=None):
    """``n |G^-1/2 tan_{P(ybar)}(P(ybar) - j(hypothesized))|^2``."""
    q = embedding.embed(hypothesized)[0]
    t = summary.frame @ (summary.projected_mean - q)
    return _studentized(summary.n, summary.g_hat if g_hat is None else g_hat, t)


def t_stat_nonpivotal(summary, embedding, hypothesized):
    """``n |tan_{P(ybar)}(P(ybar) - j(hypothesized))|^2`` without studentization."""
    q = embedding.embed(hypothesized)[0]
    t = summary.frame @ (summary.projected_mean - q)
    return float(summary.n * t @ t)


_STATISTICS = {
    "population-frame": t_stat_population_frame,
    "sample-frame": t_stat_sample_frame,
}


@dataclass(frozen=True)
class ExtrinsicRegion:
    """``{v : T(v) <= threshold}`` for one of the extrinsic statistics."""

    summary: ExtrinsicSummary
    embedding: Embedding
    variant: str
    threshold: float
    level: float

    def statistic(self, v):
        if self.variant == "nonpivotal":
            return t_stat_nonpivotal(self.summary, self.embedding, v)
        return _STATISTICS[self.variant](self.summary, self.embedding, v)

    def contains(self, v):
        return self.statistic(v) <= self.threshold

    def p_value(self, v):
        if self.variant == "nonpivotal":
            raise ValueError("the nonpivotal statistic has no chi-square reference")
        return chi2_sf(self.embedding.dim, self.statistic(v))


def extrinsic_region(sample, embedding, level=0.95, variant="sample-frame", summary=None):
    if variant not in _STATISTICS:
        raise ValueError(f"unknown variant {variant!r}")
    summary = extrinsic_mean(sample, embedding) if summary is None else summary
    inv_sqrt_pd(summary.g_hat)  # fails early on a singular G
    return ExtrinsicRegion(summary, embedding, variant, chi2_quantile(embedding.dim, level), level)


BOOTSTRAP_VARIANTS = {
    "pivotal": "population-frame",
    "sample-frame": "sample-frame",
    "nonpivotal": "nonpivotal",
}


@dataclass(frozen=True)
class ExtrinsicBootstrap:
    threshold: float
    region: ExtrinsicRegion
    distribution: BootstrapDistribution

    @property
    def degenerate_count(self):
        return self.distribution.degenerate_count


def bootstrap_extrinsic(sample, embedding, plan, level=0.95, variant="pivotal"):
    """Bootstrap calibration of an extrinsic region.

    ``pivotal`` studentizes each replicate by its own ``G*`` with the
    tangential part taken at the original projected mean (frame completed
    from the replicate frame), ``sample-frame`` takes it in the replicate's
    own frame, and ``nonpivotal`` uses the unstudentized squared length of
    ``tan_{P(ybar)}(P(ybar*) - P(ybar))``.
    """
    if variant not in BOOTSTRAP_VARIANTS:
        raise ValueError(f"unknown bootstrap variant {variant!r}")
    X = np.asarray(sample)
    if plan.n != len(X):
        raise ValueError("plan size does not match the sample")
    base = extrinsic_mean(X, embedding)
    center = base.mean_point

    def stat(idx):
        rs = extrinsic_mean(X[idx], embedding)
        if variant == "pivotal":
            return t_stat_population_frame(rs, embedding, center)
        if variant == "sample-frame":
            return t_stat_sample_frame(rs, embedding, center)
        t = base.frame @ (rs.projected_mean - base.projected_mean)
        return float(base.n * t @ t)

    vals, bad = run_replicates(plan, stat)
    dist = _distribution(vals, plan, bad)
    threshold = dist.quantile(level)
    region = ExtrinsicRegion(base, embedding, BOOTSTRAP_VARIANTS[variant], threshold, level)
    return ExtrinsicBootstrap(threshold, region, dist)
