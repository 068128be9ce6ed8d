"""Planar shapes of k landmarks as points of CP^(k-2).

Landmark configurations are reduced to unit vectors in C^(k-1) by the
Helmert submatrix; the Procrustes (extrinsic) mean is the top eigenvector of
``K = n^-1 sum z z*``. Hermitian matrices get real coordinates through
:func:`hvec` (diagonal, then ``sqrt(2)`` times real and imaginary parts of
the upper triangle), an isometry for ``U . V = Re Tr(U V*)``.
"""
from dataclasses import dataclass
import math

import numpy as np

from .axial import ChiSquareResult
from .errors import DataError, FocalMeanError
from .extrinsic import Embedding, Projection
from .frechet import ZERO_TOL, _distribution, run_replicates
from .stat_kernel import (
    chi2_sf,
    herm_eigen,
    lower_quantile,
    pd_inverse,
    polar_orthonormalize,
    upper_quantile,
)

FOCAL_RTOL = 1e-9
PHASE_TOL = 1e-12


def helmert_submatrix(k):
    """``(k-1) x k`` Helmert rows: orthonormal, each orthogonal to ``(1, ..., 1)``."""
    H = np.zeros((k - 1, k))
    for j in range(1, k):
        c = 1.0 / math.sqrt(j * (j + 1))
        H[j - 1, :j] = -c
        H[j - 1, j] = j * c
    return H


def canonical_phase(z):
    """Rotate the phase so the last coordinate of modulus > 1e-12 is real positive."""
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1, z.shape[-1])
    out = np.empty_like(flat)
    for i, row in enumerate(flat):
        nz = np.flatnonzero(np.abs(row) > PHASE_TOL)
        if nz.size == 0:
            raise DataError("zero vector has no phase")
        lead = row[nz[-1]]
        out[i] = row * (np.conj(lead) / abs(lead))
        out[i, nz[-1]] = abs(lead)
    return out.reshape(z.shape)


def preshape_from_landmarks(config, identification="helmert"):
    """Unit representative in C^(k-1) of the shape of ``k`` complex landmarks.

    ``identification='helmert'`` multiplies by the Helmert submatrix.
    ``'centered'`` keeps the first ``k - 1`` centred landmarks instead (the
    last one is minus the sum of the others); it is not an isometry but
    reproduces displays built that way.
    """
    c = np.asarray(config, dtype=complex)
    if c.ndim == 1:
        return preshape_from_landmarks(c[None], identification)[0]
    k = c.shape[-1]
    if k < 3:
        raise DataError("need at least 3 landmarks")
    if identification == "helmert":
        z = c @ helmert_submatrix(k).T
    elif identification == "centered":
        z = (c - c.mean(axis=-1, keepdims=True))[:, :-1]
    else:
        raise ValueError(f"unknown identification {identification!r}")
    r = np.linalg.norm(z, axis=-1)
    scale = np.maximum(np.max(np.abs(c), axis=-1), 1.0)
    bad = np.flatnonzero(r <= 1e-12 * scale)
    if bad.size:
        raise DataError(f"configuration {bad[0]} has all landmarks identical")
    return canonical_phase(z / r[:, None])


def as_shapes(z, tol=1e-12):
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    err = np.max(np.abs(np.linalg.norm(z, axis=-1) - 1.0))
    if err > tol:
        raise ValueError(f"shape representatives must be unit vectors (deviation {err:.2e})")
    return canonical_phase(z)


def hvec(M):
    M = np.asarray(M, dtype=complex)
    N = M.shape[-1]
    iu = np.triu_indices(N, 1)
    up = M[..., iu[0], iu[1]]
    return np.concatenate(
        [np.diagonal(M, axis1=-2, axis2=-1).real, np.sqrt(2.0) * up.real, np.sqrt(2.0) * up.imag],
        axis=-1,
    )


def unhvec(v, N):
    v = np.asarray(v, dtype=float)
    M = np.zeros(v.shape[:-1] + (N, N), dtype=complex)
    d = np.arange(N)
    M[..., d, d] = v[..., :N]
    iu = np.triu_indices(N, 1)
    p = len(iu[0])
    off = (v[..., N:N + p] + 1j * v[..., N + p:]) / np.sqrt(2.0)
    M[..., iu[0], iu[1]] = off
    M[..., iu[1], iu[0]] = np.conj(off)
    return M


def veronese_cp(z):
    z = np.asarray(z, dtype=complex)
    return z[..., :, None] * np.conj(z[..., None, :])


@dataclass(frozen=True)
class ProcrustesMean:
    mean: np.ndarray
    K: np.ndarray
    eigengap: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _cp_project(K):
    eig = herm_eigen(K)
    w = eig.eigenvalues
    gap = eig.gap
    if gap <= FOCAL_RTOL * max(w[-1], 1.0):
        raise FocalMeanError(f"top eigenvalue of K is not simple (gap {gap:.3e})", gap=gap)
    V = eig.eigenvectors.copy()
    m = canonical_phase(V[:, -1])
    V[:, -1] = m
    return m, gap, w, V


def procrustes_mean(shapes):
    Z = np.atleast_2d(np.asarray(shapes, dtype=complex))
    K = Z.T @ Z.conj() / len(Z)
    m, gap, w, V = _cp_project(K)
    return ProcrustesMean(m, K, gap, w, V)


def _complex_tangent(V, Z):
    """``(m_a* z_r)(z_r* m)`` for each sample row ``z_r`` and each ``a < top``."""
    m, others = V[:, -1], V[:, :-1]
    a = Z @ others.conj()
    b = np.conj(Z @ m.conj())
    return a * b[:, None]


def cp_extrinsic_cov(shapes, pm=None):
    """Complex Hermitian ``(k-2) x (k-2)`` extrinsic covariance.

    ``G_ab = n^-1 (eta_top - eta_a)^-1 (eta_top - eta_b)^-1
    sum_r (m_a . Z_r)(m_b . Z_r)* |m_top . Z_r|^2`` with ``m . Z = m* Z``.
    """
    Z = np.atleast_2d(np.asarray(shapes, dtype=complex))
    pm = procrustes_mean(Z) if pm is None else pm
    w = pm.eigenvalues
    xi = _complex_tangent(pm.eigenvectors, Z) / (w[-1] - w[:-1])
    G = xi.T @ xi.conj() / len(Z)
    return 0.5 * (G + G.conj().T)


class VeroneseCP(Embedding):
    """Veronese-Whitney map ``[z] -> z z*`` of CP^(K-1) into K x K Hermitian matrices.

    Tangent frame at ``m m*``: ``(m_a m* + m m_a*) / sqrt(2)`` for each
    remaining eigenvector, followed by ``i (m_a m* - m m_a*) / sqrt(2)``.
    """

    conformal_factor = 2.0

    def __init__(self, K=2):
        self.K = K
        self.dim = 2 * (K - 1)
        self.ambient_dim = K * K

    def embed(self, points):
        return hvec(veronese_cp(np.atleast_2d(np.asarray(points, dtype=complex))))

    def canonical(self, point):
        return canonical_phase(point)

    def projection(self, y):
        m, gap, _, V = _cp_project(unhvec(y, self.K))
        others = V[:, :-1].T
        A = others[:, :, None] * np.conj(m)[None, None, :]
        B = m[None, :, None] * np.conj(others)[:, None, :]
        frame = np.concatenate([hvec((A + B) / np.sqrt(2.0)), hvec(1j * (A - B) / np.sqrt(2.0))])
        return Projection(m, hvec(veronese_cp(m)), frame, gap)

    def d_project(self, y, H):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        m, _, w, V = _cp_project(unhvec(y, self.K))
        others = V[:, :-1]
        Hm = unhvec(H, self.K)
        coef = np.einsum("na,rnk,k->ra", others.conj(), Hm, m) / (w[-1] - w[:-1])
        dm = coef @ others.T
        dP = dm[:, :, None] * np.conj(m)[None, None, :]
        return hvec(dP + np.conj(np.swapaxes(dP, 1, 2)))

    def tangent_project(self, q, v):
        Q = unhvec(q, self.K)
        P = Q / np.trace(Q).real
        V = unhvec(v, self.K)
        T = (np.eye(self.K) - P) @ V @ P
        return hvec(T + np.conj(np.swapaxes(T, -1, -2)))


def realify(G):
    """Real form ``[[Re G, -Im G], [Im G, Re G]]`` of a complex matrix."""
    G = np.asarray(G, dtype=complex)
    return np.block([[G.real, -G.imag], [G.imag, G.real]])


def complex_from_generic(G_real):
    """Complex covariance implied by the generic real covariance in the frame above.

    For real tangent coordinates ``sqrt(2) (Re xi, Im xi)`` the generic form is
    ``2 [[P, Q], [R, S]]`` and the complex covariance ``E xi xi*`` is
    ``P + S + i (R - Q)``; this holds on every sample.
    """
    G_real = np.asarray(G_real, dtype=float)
    h = G_real.shape[0] // 2
    P, Q = G_real[:h, :h], G_real[:h, h:]
    R, S = G_real[h:, :h], G_real[h:, h:]
    return 0.5 * ((P + S) + 1j * (R - Q))


def circularize(shapes, mean=None):
    """Augment a sample with its image under ``z -> (i (I - m m*) + m m*) z``.

    The map fixes the mean axis and rotates every tangent coefficient by
    ``i``, so the tangent pseudo-covariance of the augmented sample vanishes.
    """
    Z = np.atleast_2d(np.asarray(shapes, dtype=complex))
    m = procrustes_mean(Z).mean if mean is None else np.asarray(mean, dtype=complex)
    P = np.outer(m, m.conj())
    U = 1j * (np.eye(len(m)) - P) + P
    return np.concatenate([Z, Z @ U.T])


def complete_complex_frame(nu, others):
    """Orthonormal basis of ``nu``'s complex complement nearest the projected columns of ``others``."""
    nu = np.asarray(nu, dtype=complex)
    return polar_orthonormalize(others - np.outer(nu, nu.conj() @ others))


def _hermitian_stat(n, v, G):
    if np.max(np.abs(v)) <= ZERO_TOL:
        return 0.0
    # factor 2: with real tangent coordinates sqrt(2) (Re v, Im v) the
    # studentized squared length is 2 v* G^-1 v
    return float(2.0 * n * np.real(v.conj() @ pd_inverse(G, "complex extrinsic covariance") @ v))


def cp_t_stat(shapes, hypothesized):
    """Procrustes-mean test statistic, asymptotically chi-square(2k - 4).

    ``2 n v* G^-1 v`` with ``v_a = nu_a* m``, where ``nu_a`` complete the
    hypothesized ``nu`` to a unitary basis aligned with the sample
    eigenvectors and ``G`` is :func:`cp_extrinsic_cov`.
    """
    Z = np.atleast_2d(np.asarray(shapes, dtype=complex))
    pm = procrustes_mean(Z)
    nu = np.asarray(hypothesized, dtype=complex)
    nu = nu / np.linalg.norm(nu)
    frame = complete_complex_frame(nu, pm.eigenvectors[:, :-1])
    v = frame.conj().T @ pm.mean
    df = 2 * (len(nu) - 1)
    stat = _hermitian_stat(len(Z), v, cp_extrinsic_cov(Z, pm))
    return ChiSquareResult(stat, df, chi2_sf(df, stat))


def cp_bootstrap_test(shapes, plan):
    """Bootstrap distribution of the Procrustes-mean statistic about the sample mean.

    Each replicate uses its own eigen-data and covariance and the tangent
    coefficients ``v*_a = (m*_a)* m`` of the original mean ``m``.
    """
    Z = np.atleast_2d(np.asarray(shapes, dtype=complex))
    if plan.n != len(Z):
        raise ValueError("plan size does not match the sample")
    m = procrustes_mean(Z).mean

    def stat(idx):
        Zs = Z[idx]
        pm = procrustes_mean(Zs)
        v = pm.eigenvectors[:, :-1].conj().T @ m
        return _hermitian_stat(len(Zs), v, cp_extrinsic_cov(Zs, pm))

    vals, bad = run_replicates(plan, stat)
    return _distribution(vals, plan, bad)


def affine_coords(shape):
    """``(z^1 / z^(k-1), ..., z^(k-2) / z^(k-1))``."""
    z = np.asarray(shape, dtype=complex)
    last = z[..., -1]
    if np.any(np.abs(last) <= 1e-12):
        raise DataError("shape lies on the hyperplane at infinity (last coordinate is 0)")
    return z[..., :-1] / last[..., None]


def shape_from_affine(w):
    w = np.asarray(w, dtype=complex)
    z = np.concatenate([w, np.ones(w.shape[:-1] + (1,))], axis=-1)
    return canonical_phase(z / np.linalg.norm(z, axis=-1, keepdims=True))


@dataclass(frozen=True)
class ComplexInterval:
    lo: complex
    hi: complex

    def contains(self, w):
        return (self.lo.real <= w.real <= self.hi.real) and (self.lo.imag <= w.imag <= self.hi.imag)


@dataclass(frozen=True)
class SimultaneousIntervals:
    intervals: list
    per_margin_level: float
    degenerate_count: int
    center: np.ndarray


def simultaneous_complex_intervals(shapes, plan, level=0.95):
    """Bonferroni rectangles for the affine coordinates of the Procrustes mean.

    Each of the ``2(k-2)`` real margins gets an equal-tail percentile
    interval of coverage ``1 - (1 - level) / (2(k-2))`` from the bootstrap
    replicate means.
    """
    Z = np.atleast_2d(np.asarray(shapes, dtype=complex))
    if plan.n != len(Z):
        raise ValueError("plan size does not match the sample")
    center = affine_coords(procrustes_mean(Z).mean)
    vals, bad = run_replicates(plan, lambda idx: affine_coords(procrustes_mean(Z[idx]).mean))
    W = np.array(vals)
    q = len(center)
    per = 1.0 - (1.0 - level) / (2 * q)
    a = (1.0 + per) / 2.0
    out = []
    for j in range(q):
        re, im = W[:, j].real, W[:, j].imag
        lo = complex(lower_quantile(re, a), lower_quantile(im, a))
        hi = complex(upper_quantile(re, a), upper_quantile(im, a))
        out.append(ComplexInterval(lo, hi))
    return SimultaneousIntervals(out, per, bad, center)
