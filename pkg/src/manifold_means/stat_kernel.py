"""Numeric primitives shared by every estimator.

Symmetric and Hermitian eigendecompositions, the inverse square root of a
positive definite matrix, chi-square quantiles, bootstrap resampling plans
and the order-statistic quantile convention used for all bootstrap
thresholds.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from .errors import ConvergenceError, NotSymmetricError, SingularCovarianceError

SYMMETRY_RTOL = 1e-12
# min eigenvalue <= SINGULAR_RTOL * max eigenvalue means "singular"
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues in ascending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def top(self):
        return self.eigenvectors[:, -1]

    @property
    def gap(self):
        """Difference between the two largest eigenvalues."""
        if self.eigenvalues.size < 2:
            return math.inf
        return float(self.eigenvalues[-1] - self.eigenvalues[-2])


def _check_square(M):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M


def _asymmetry(M):
    scale = max(np.max(np.abs(M)), 1.0)
    return np.max(np.abs(M - M.conj().T)) / scale


def _eigh(M):
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver did not converge: {exc}") from exc
    return EigenResult(w, V)


def sym_eigen(M):
    """Eigendecomposition of a real symmetric matrix, eigenvalues ascending."""
    M = _check_square(np.asarray(M, dtype=float))
    if _asymmetry(M) > SYMMETRY_RTOL:
        raise NotSymmetricError("matrix is not symmetric")
    return _eigh(0.5 * (M + M.T))


def herm_eigen(M):
    """Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending."""
    M = _check_square(np.asarray(M, dtype=complex))
    if _asymmetry(M) > SYMMETRY_RTOL:
        raise NotSymmetricError("matrix is not Hermitian")
    return _eigh(0.5 * (M + M.conj().T))


def check_positive_definite(eigenvalues, what="matrix"):
    w = np.asarray(eigenvalues)
    top = w[-1]
    if top <= 0 or w[0] <= SINGULAR_RTOL * top:
        raise SingularCovarianceError(
            f"{what} is singular or not positive definite "
            f"(eigenvalue range [{w[0]:.3e}, {top:.3e}])"
        )


def inv_sqrt_pd(M):
    """Symmetric inverse square root ``R`` with ``R @ M @ R == I``.

    Raises
    ------
    SingularCovarianceError
        If the smallest eigenvalue is at most ``1e-12`` times the largest.
    """
    eig = sym_eigen(M)
    check_positive_definite(eig.eigenvalues)
    V = eig.eigenvectors
    return (V / np.sqrt(eig.eigenvalues)) @ V.T


def pd_inverse(M, what="matrix"):
    """Inverse of a symmetric or Hermitian positive definite matrix."""
    M = np.asarray(M)
    eig = herm_eigen(M) if np.iscomplexobj(M) else sym_eigen(M)
    check_positive_definite(eig.eigenvalues, what)
    V = eig.eigenvectors
    return (V / eig.eigenvalues) @ V.conj().T


def polar_orthonormalize(V):
    """Closest matrix with orthonormal rows: the polar factor ``U W*`` of ``V = U S W*``.

    Unlike Gram-Schmidt the result commutes with any unitary change of the
    input rows, ``polar(O V) = O polar(V)``.
    """
    U, _, Wh = np.linalg.svd(np.asarray(V), full_matrices=False)
    return U @ Wh


def chi2_quantile(df, p):
    """Quantile of the chi-square distribution with ``df`` degrees of freedom."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if df < 1 or int(df) != df:
        raise ValueError(f"degrees of freedom must be a positive integer, got {df}")
    return float(stats.chi2.ppf(p, int(df)))


def chi2_sf(df, x):
    """Upper tail probability of chi-square(df) at ``x``."""
    return float(stats.chi2.sf(x, int(df)))


@dataclass(frozen=True, eq=False)
class ResamplePlan:
    """Bootstrap indices: ``indices[r]`` is replicate ``r``, drawn with replacement.

    Replicate ``r`` is generated from its own stream keyed on ``(seed, r)``,
    so it does not depend on ``B`` or on the order replicates are evaluated.
    """

    seed: int
    B: int
    n: int
    indices: np.ndarray

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return self.B


def replicate_indices(seed, r, n):
    rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), r]))
    return rng.integers(0, n, size=n)


def resample_plan(seed, B, n):
    if B < 1 or n < 1:
        raise ValueError(f"need B >= 1 and n >= 1, got B={B}, n={n}")
    idx = np.stack([replicate_indices(int(seed), r, n) for r in range(B)])
    idx.setflags(write=False)
    return ResamplePlan(int(seed), int(B), int(n), idx)


def upper_quantile(values, level):
    """Order statistic at 1-based index ``ceil(level * B)`` of the sorted values."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values to take a quantile of")
    k = min(max(math.ceil(level * v.size - 1e-9), 1), v.size)
    return float(v[k - 1])


def lower_quantile(values, level):
    """Mirror image of :func:`upper_quantile`: the ``1 - level`` lower point."""
    return -upper_quantile(-np.asarray(values, dtype=float), level)


def empirical_cov(values):
    """Covariance with divisor ``n`` of the rows of ``values``.

    For complex rows the ``(a, b)`` entry is the mean of ``d_a * conj(d_b)``.
    """
    X = np.asarray(values)
    X = X.reshape(len(X), -1)
    D = X - X.mean(axis=0)
    return D.T @ D.conj() / len(X)
