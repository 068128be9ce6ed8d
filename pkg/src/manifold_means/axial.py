"""Axial statistics on RP^(N-1) through the Veronese-Whitney map ``[x] -> x x^T``.

Symmetric matrices are given real coordinates by :func:`svec` (diagonal
entries, then ``sqrt(2)`` times the upper off-diagonal entries), which is an
isometry for the Frobenius inner product.
"""
from dataclasses import dataclass

import numpy as np

from .errors import FocalMeanError
from .extrinsic import Embedding, Projection
from .stat_kernel import chi2_sf, pd_inverse, polar_orthonormalize, sym_eigen

FOCAL_RTOL = 1e-9


def canonical_axis(x):
    """Representative of ``[x]`` whose largest-magnitude component is positive.

    Ties in magnitude go to the lowest index. Broadcasts over leading axes.
    """
    x = np.asarray(x, dtype=float)
    idx = np.argmax(np.abs(x), axis=-1)
    lead = np.take_along_axis(x, idx[..., None], axis=-1)
    return np.where(lead < 0, -x, x)


def as_axes(x, tol=1e-12):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    err = np.max(np.abs(np.linalg.norm(x, axis=-1) - 1.0))
    if err > tol:
        raise ValueError(f"axis representatives must be unit vectors (deviation {err:.2e})")
    return canonical_axis(x)


def svec(M):
    M = np.asarray(M, dtype=float)
    N = M.shape[-1]
    iu = np.triu_indices(N, 1)
    return np.concatenate(
        [np.diagonal(M, axis1=-2, axis2=-1), np.sqrt(2.0) * M[..., iu[0], iu[1]]], axis=-1
    )


def unsvec(v, N):
    v = np.asarray(v, dtype=float)
    M = np.zeros(v.shape[:-1] + (N, N))
    d = np.arange(N)
    M[..., d, d] = v[..., :N]
    iu = np.triu_indices(N, 1)
    off = v[..., N:] / np.sqrt(2.0)
    M[..., iu[0], iu[1]] = off
    M[..., iu[1], iu[0]] = off
    return M


def veronese_rp(a):
    """``x x^T``; broadcasts over a leading sample axis."""
    x = np.asarray(a, dtype=float)
    return x[..., :, None] * x[..., None, :]


@dataclass(frozen=True)
class AxialProjection:
    axis: np.ndarray
    gap: float
    eigen: object


def rp_project(A):
    """Nearest point of the Veronese image: the top eigenvector of ``A``.

    Raises
    ------
    FocalMeanError
        If the two largest eigenvalues differ by at most ``1e-9 max(eta_N, 1)``.
    """
    eig = sym_eigen(A)
    w = eig.eigenvalues
    gap = eig.gap
    if gap <= FOCAL_RTOL * max(w[-1], 1.0):
        raise FocalMeanError(f"top eigenvalue is not simple (gap {gap:.3e})", gap=gap)
    return AxialProjection(canonical_axis(eig.top), gap, eig)


def _tangent_matrices(m, others):
    """``(m_a m^T + m m_a^T) / sqrt(2)`` for each row ``m_a`` of ``others``."""
    outer = others[:, :, None] * m[None, None, :]
    return (outer + np.swapaxes(outer, 1, 2)) / np.sqrt(2.0)


class VeroneseRP(Embedding):
    """Veronese-Whitney embedding of RP^(N-1) into symmetric N x N matrices."""

    conformal_factor = 2.0

    def __init__(self, N=3):
        self.N = N
        self.dim = N - 1
        self.ambient_dim = N * (N + 1) // 2

    def embed(self, points):
        return svec(veronese_rp(np.atleast_2d(points)))

    def canonical(self, point):
        return canonical_axis(point)

    def projection(self, y):
        pr = rp_project(unsvec(y, self.N))
        V = pr.eigen.eigenvectors
        frame = svec(_tangent_matrices(V[:, -1], V[:, :-1].T))
        return Projection(pr.axis, svec(veronese_rp(pr.axis)), frame, pr.gap)

    def d_project(self, y, H):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        pr = rp_project(unsvec(y, self.N))
        w, V = pr.eigen.eigenvalues, pr.eigen.eigenvectors
        m, others = V[:, -1], V[:, :-1]
        Hm = unsvec(H, self.N)
        coef = np.einsum("na,rnk,k->ra", others, Hm, m) / (w[-1] - w[:-1])
        # d(m m^T) = dm m^T + m dm^T with dm = sum_a coef_a m_a
        dm = coef @ others.T
        dP = dm[:, :, None] * m[None, None, :]
        return svec(dP + np.swapaxes(dP, 1, 2))

    def tangent_project(self, q, v):
        Q = unsvec(q, self.N)
        P = Q / np.trace(Q)
        V = unsvec(v, self.N)
        I = np.eye(self.N)
        T = (I - P) @ V @ P
        return svec(T + np.swapaxes(T, -1, -2))


@dataclass(frozen=True)
class AxialSummary:
    n: int
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap: float
    g: np.ndarray


def axial_summary(sample):
    """Eigen-data of ``K = n^-1 sum X_r X_r^T`` and the closed form extrinsic covariance."""
    X = np.atleast_2d(np.asarray(sample, dtype=float))
    K = X.T @ X / len(X)
    pr = rp_project(K)
    w, V = pr.eigen.eigenvalues, pr.eigen.eigenvectors
    # (m_a . X_r) / (eta_N - eta_a), weighted by (m_N . X_r)
    lead = X @ V[:, -1]
    comp = (X @ V[:, :-1]) / (w[-1] - w[:-1]) * lead[:, None]
    G = comp.T @ comp / len(X)
    return AxialSummary(len(X), pr.axis, w, V, pr.gap, 0.5 * (G + G.T))


def rp_extrinsic_cov(sample):
    """``G_ab = n^-1 (eta_N - eta_a)^-1 (eta_N - eta_b)^-1 sum_r (m_a.X_r)(m_b.X_r)(m_N.X_r)^2``.

    Expressed in the ascending eigenbasis ``m_1, ..., m_(N-1)`` of ``K``.
    """
    return axial_summary(sample).g


def complete_axis_frame(hypothesized, others):
    """Orthonormal basis of ``nu``'s complement nearest the projected columns of ``others``."""
    nu = np.asarray(hypothesized, dtype=float)
    return polar_orthonormalize(others - np.outer(nu, nu @ others))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p: float


def rp_t_stat(sample, hypothesized):
    """``n c^T G^-1 c`` with ``c_a = nu_a . m``, asymptotically chi-square(N - 1).

    ``nu_a`` complete ``nu`` to an orthonormal basis aligned with the sample
    eigenvectors ``m_a``, matching the basis ``G`` is expressed in.
    """
    s = axial_summary(sample)
    nu = np.asarray(hypothesized, dtype=float)
    nu = nu / np.linalg.norm(nu)
    frame = complete_axis_frame(nu, s.eigenvectors[:, :-1])
    m = s.eigenvectors[:, -1]
    c = frame.T @ m
    df = len(nu) - 1
    if np.max(np.abs(c)) <= 1e-14:
        return ChiSquareResult(0.0, df, 1.0)
    Ginv = pd_inverse(s.g, "axial extrinsic covariance")
    stat = float(s.n * c @ Ginv @ c)
    return ChiSquareResult(stat, df, chi2_sf(df, stat))
