"""Manifold-agnostic pieces: charts, the Fréchet function and Karcher means.

Points are numpy arrays; a sample is an array whose first axis indexes
observations. Geometry enters only through ``exp_map``/``log_map``/``distance``
callables, which must broadcast over the leading sample axis of their second
argument.
"""
from dataclasses import dataclass, field
from typing import Callable
import math

import numpy as np

from .errors import ConvergenceError

KARCHER_TOL = 1e-10
KARCHER_MAX_ITER = 1000


@dataclass(frozen=True)
class Chart:
    """Coordinate chart ``(U, phi)`` centred at ``base_point``.

    ``to_coords`` maps manifold points (leading sample axis allowed) to
    ``d``-vectors, ``from_coords`` inverts it.
    """

    identifier: str
    to_coords: Callable
    from_coords: Callable
    base_point: np.ndarray
    dim: int


@dataclass
class KarcherResult:
    point: np.ndarray
    n_iter: int
    tangent_norm: float
    frechet_history: list = field(default_factory=list)

    @property
    def frechet_value(self):
        return self.frechet_history[-1]


def frechet_value(sample, p, distance):
    """Mean squared distance from ``p`` to the sample points."""
    d = np.asarray(distance(p, np.asarray(sample)), dtype=float)
    return float(np.mean(d**2))


def intrinsic_mean(sample, exp_map, log_map, init, tol=KARCHER_TOL,
                   max_iter=KARCHER_MAX_ITER):
    """Karcher mean by tangent-mean fixed point iteration.

    Each step moves ``p`` to ``Exp_p(mean_i Log_p x_i)``. A step that would
    raise the Fréchet function is halved until it does not, so the recorded
    ``frechet_history`` is nonincreasing up to rounding once steps shrink
    below ``sqrt(eps)``.

    Raises
    ------
    ConvergenceError
        If the tangent mean is still at least ``tol`` after ``max_iter`` steps.
    CutLocusError
        Propagated from ``log_map`` when a sample point is antipodal to an
        iterate.
    """
    X = np.asarray(sample, dtype=float)
    p = np.asarray(init, dtype=float)

    def fval(q):
        logs = log_map(q, X)
        return float(np.mean(np.sum(logs**2, axis=-1))), logs

    F, logs = fval(p)
    history = [F]
    for it in range(max_iter):
        v = logs.mean(axis=0)
        step = float(np.linalg.norm(v))
        if step < tol:
            return KarcherResult(p, it, step, history)
        t = 1.0
        while True:
            q = exp_map(p, t * v)
            Fq, logs_q = fval(q)
            # below ~sqrt(eps) the decrease step**2 is not resolvable in F
            if Fq <= F or step**2 < 1e-13 * max(F, 1e-300) or t < 2.0**-30:
                break
            t *= 0.5
        p, F, logs = q, Fq, logs_q
        history.append(F)
    step = float(np.linalg.norm(logs.mean(axis=0)))
    if step < tol:
        return KarcherResult(p, max_iter, step, history)
    raise ConvergenceError(
        f"Karcher iteration did not converge in {max_iter} steps "
        f"(tangent mean norm {step:.3e})"
    )


@dataclass(frozen=True)
class SupportRadius:
    r: float
    bound: float
    ok: bool


def support_radius_check(sample, center, curvature_sup, distance):
    """Report whether the sample lies in a ball of radius ``< pi / (4K)``.

    ``curvature_sup`` is ``K**2``, the supremum of sectional curvatures (0 if
    nonpositive, in which case the bound is infinite).
    """
    d = np.atleast_1d(np.asarray(distance(center, np.asarray(sample)), dtype=float))
    r = float(d.max()) if d.size else 0.0
    if curvature_sup <= 0:
        return SupportRadius(r, math.inf, True)
    bound = math.pi / (4.0 * math.sqrt(curvature_sup))
    return SupportRadius(r, bound, r < bound)
