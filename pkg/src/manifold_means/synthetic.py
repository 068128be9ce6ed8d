"""Synthetic samples with known population means.

Used by the test suite and to generate the fixture files shipped with the
package. Every generator takes a ``numpy.random.Generator``.
"""
import numpy as np

from . import sphere
from .bookstein import tetrad_from_coords
from .planar import canonical_phase


def sphere_tangent_gaussian(rng, mu, n, scales=(0.15, 0.08)):
    """``Exp_mu`` of centred Gaussian tangent vectors with per-axis ``scales``.

    The law is symmetric under ``u -> -u`` in the tangent plane, so ``mu`` is
    both its intrinsic and its extrinsic mean.
    """
    mu = sphere.as_unit(mu)
    F = sphere.tangent_frame(mu)
    u = rng.standard_normal((n, F.shape[0])) * np.asarray(scales)
    return sphere.exp_map(mu, u @ F)


def sphere_cap_uniform(rng, mu, n, radius):
    """Points at geodesic distance ``U(0, radius)`` from ``mu`` in uniform directions."""
    mu = sphere.as_unit(mu)
    F = sphere.completion_frame(mu)
    dirs = rng.standard_normal((n, F.shape[0]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    t = radius * rng.uniform(0.0, 1.0, size=(n, 1))
    return sphere.exp_map(mu, t * dirs @ F)


def axial_sample(rng, axis, n, scales=(0.1, 0.05)):
    """Axes scattered about ``axis`` by a symmetric tangent Gaussian, random signs."""
    X = sphere_tangent_gaussian(rng, axis, n, scales)
    return X * rng.choice([-1.0, 1.0], size=(n, 1))


def random_unitary(rng, K):
    A = rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))
    Q, R = np.linalg.qr(A)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_special_unitary(rng, K):
    U = random_unitary(rng, K)
    return U / np.linalg.det(U) ** (1.0 / K)


def random_rotation(rng, N):
    Q, R = np.linalg.qr(rng.standard_normal((N, N)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def cp_sample(rng, K, n, scale=0.1, circular=True, mean=None):
    """Planar shapes in C^K concentrated about ``mean`` (default ``e_K``).

    Tangent coefficients are complex Gaussian: circular (independent real and
    imaginary parts of equal variance) when ``circular``, otherwise with
    unequal variances so the pseudo-covariance does not vanish. Each draw
    gets a random phase.
    """
    re = rng.standard_normal((n, K - 1))
    im = rng.standard_normal((n, K - 1))
    if circular:
        t = scale * (re + 1j * im) / np.sqrt(2.0)
    else:
        t = scale * (1.4 * re + 0.5j * im) / np.sqrt(2.0)
    z = np.concatenate([t, np.ones((n, 1))], axis=1)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    if mean is not None:
        # unitary Q with Q e_K = mean
        m = np.asarray(mean, dtype=complex)
        Q, _ = np.linalg.qr(np.column_stack([m, np.eye(K)[:, :-1]]))
        Q[:, 0] *= np.vdot(Q[:, 0], m)
        z = z @ np.roll(Q, -1, axis=1).T
    return canonical_phase(z * np.exp(2j * np.pi * rng.uniform(size=(n, 1))))


def planar_configurations(rng, base, n, sigma=0.05):
    """Noisy similarity-transformed copies of a base configuration of complex landmarks."""
    base = np.asarray(base, dtype=complex)
    noise = sigma * (rng.standard_normal((n, base.size)) + 1j * rng.standard_normal((n, base.size)))
    rot = np.exp(2j * np.pi * rng.uniform(size=(n, 1))) * rng.uniform(0.5, 2.0, size=(n, 1))
    shift = rng.standard_normal((n, 1)) + 1j * rng.standard_normal((n, 1))
    return rot * (base + noise) + shift


REFERENCE_V = np.array([0.1, 0.6, -0.05, 0.3, 0.45])


def tetrads_from_coords(rng, V, similarity=True):
    """Tetrads realizing Bookstein coordinates ``V``, optionally similarity transformed."""
    out = []
    for v in np.atleast_2d(V):
        t = tetrad_from_coords(v)
        if similarity:
            R = random_rotation(rng, 3)
            s = rng.uniform(0.5, 3.0)
            c = rng.standard_normal(3)
            t = s * t @ R.T + c
        out.append(t)
    return np.array(out)


def exchangeable_tetrad_pairs(rng, n, sigma_subject=0.04, sigma_eye=0.02, shift=None):
    """``(before, after)`` tetrads sharing a per-subject shape plus i.i.d. noise per eye.

    ``shift`` (a 5-vector) is added to the Bookstein coordinates of ``after``.
    """
    base = REFERENCE_V + sigma_subject * rng.standard_normal((n, 5))
    vb = base + sigma_eye * rng.standard_normal((n, 5))
    va = base + sigma_eye * rng.standard_normal((n, 5))
    if shift is not None:
        va = va + np.asarray(shift)
    return tetrads_from_coords(rng, vb), tetrads_from_coords(rng, va)
