"""Inference for Fréchet means in a coordinate chart.

A :class:`ChartedSample` is a sample expressed in chart coordinates together
with the chart's *metric model*, which knows how to compute the sample
Fréchet mean in the chart, the gradient ``Psi(u; theta)`` of the squared
distance and its Jacobian. From these the plug-in covariance
``Gamma = Lambda^-1 C Lambda^-T`` follows, and with it the chi-square
region, the percentile and pivotal bootstrap regions and the paired
two-sample test.

Two metric models are provided: :class:`FlatMetric` (Euclidean distance in
the chart, e.g. Bookstein coordinates) and :class:`SphereLogMetric`
(geodesic distance on S^d in logarithmic coordinates about a base point).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import sphere
from .errors import (
    BootstrapDegeneracyError,
    DegeneracyError,
    SingularCovarianceError,
)
from .manifold import intrinsic_mean
from .stat_kernel import (
    SINGULAR_RTOL,
    chi2_quantile,
    chi2_sf,
    empirical_cov,
    lower_quantile,
    pd_inverse,
    upper_quantile,
)

MAX_DEGENERATE_FRACTION = 0.2
ZERO_TOL = 1e-14


class FlatMetric:
    """Squared Euclidean distance in the chart: ``Psi = -2 (u - theta)``, ``Lambda = 2 I``."""

    chart_id = "flat"

    def mean(self, coords):
        return np.mean(coords, axis=0)

    def psi(self, coords, theta):
        return -2.0 * (np.asarray(coords) - theta)

    def hessians(self, coords, theta):
        n, d = np.shape(coords)
        return np.broadcast_to(2.0 * np.eye(d), (n, d, d))


class SphereLogMetric:
    """Geodesic distance on S^d in coordinates ``Log_p`` w.r.t. a fixed tangent frame.

    At ``theta = 0`` the Hessians use the closed form of
    :func:`sphere.hessian`; elsewhere they are central differences of the
    analytic gradient.
    """

    def __init__(self, base_point, frame=None):
        self.base_point = sphere.as_unit(base_point)
        self.frame = sphere.tangent_frame(self.base_point) if frame is None else np.asarray(frame)
        self.chart_id = sphere.log_chart(self.base_point, self.frame).identifier

    def to_coords(self, x):
        return sphere.log_coords(self.base_point, x, self.frame)

    def from_coords(self, u):
        return sphere.from_log_coords(self.base_point, u, self.frame)

    def mean(self, coords, tol=1e-12):
        X = self.from_coords(coords)
        init = sphere.normalize(X.mean(axis=0))
        m = intrinsic_mean(X, sphere.exp_map, sphere.log_map, init, tol=tol).point
        return self.to_coords(m)

    def _exp_differential(self, theta):
        """Columns ``d Exp_p(w)[e_r]`` for ``w = theta . frame``."""
        p = self.base_point
        w = np.asarray(theta, dtype=float) @ self.frame
        t = float(np.linalg.norm(w))
        if t < 1e-12:
            return self.frame.T.copy()
        wh = w / t
        E = self.frame.T
        along = wh @ E
        radial = np.outer(-math.sin(t) * p + math.cos(t) * wh, along)
        perp = (math.sin(t) / t) * (E - np.outer(wh, along))
        return radial + perp

    def psi(self, coords, theta):
        theta = np.asarray(theta, dtype=float)
        q = self.from_coords(theta)
        X = self.from_coords(coords)
        J = self._exp_differential(theta)
        return -2.0 * sphere.log_map(q, X) @ J

    def hessians(self, coords, theta, h=1e-6):
        theta = np.asarray(theta, dtype=float)
        if np.linalg.norm(theta) <= 1e-8:
            return sphere.hessian(coords)
        d = theta.size
        cols = []
        for r in range(d):
            e = np.zeros(d)
            e[r] = h
            cols.append((self.psi(coords, theta + e) - self.psi(coords, theta - e)) / (2 * h))
        H = np.stack(cols, axis=-1)
        return 0.5 * (H + np.swapaxes(H, -1, -2))


@dataclass(frozen=True)
class ChartedSample:
    coords: np.ndarray
    metric: object
    mean_coords: np.ndarray

    @property
    def n(self):
        return len(self.coords)

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def chart_id(self):
        return self.metric.chart_id

    def resample(self, idx):
        return chart_sample(self.coords[idx], self.metric)


def chart_sample(coords, metric, mean_coords=None):
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if len(coords) == 0:
        raise ValueError("empty sample")
    if mean_coords is None:
        mean_coords = metric.mean(coords)
    return ChartedSample(coords, metric, np.asarray(mean_coords, dtype=float))


def flat_sample(coords):
    return chart_sample(coords, FlatMetric())


def sphere_sample(points, base_point=None, frame=None):
    """Chart a spherical sample by ``Log`` at ``base_point`` (default: its intrinsic mean)."""
    X = sphere.as_unit(points, tol=1e-9)
    if base_point is None:
        init = sphere.normalize(X.mean(axis=0))
        base_point = intrinsic_mean(X, sphere.exp_map, sphere.log_map, init).point
    metric = SphereLogMetric(base_point, frame)
    return chart_sample(metric.to_coords(X), metric)


@dataclass(frozen=True)
class CovarianceTriple:
    lambda_hat: np.ndarray
    c_hat: np.ndarray
    gamma_hat: np.ndarray


def c_hat(psi_values):
    """Covariance (divisor ``n``) of the gradient values."""
    return empirical_cov(np.atleast_2d(psi_values))


def _check_invertible(L, what):
    w = np.abs(np.linalg.eigvals(L))
    if w.max() <= 0 or w.min() <= SINGULAR_RTOL * w.max():
        raise SingularCovarianceError(f"{what} is singular")


def gamma_hat(lambda_hat, c_hat):
    """``Lambda^-1 C Lambda^-T``, symmetrised after a 1e-10 asymmetry check."""
    L = np.asarray(lambda_hat, dtype=float)
    _check_invertible(L, "Hessian estimate")
    Linv = np.linalg.inv(L)
    G = Linv @ np.asarray(c_hat, dtype=float) @ Linv.T
    scale = max(np.max(np.abs(G)), 1e-300)
    if np.max(np.abs(G - G.T)) > 1e-10 * scale:
        raise ValueError("Gamma estimate is not symmetric")
    return 0.5 * (G + G.T)


def covariance_triple(cs):
    psi = cs.metric.psi(cs.coords, cs.mean_coords)
    L = np.mean(cs.metric.hessians(cs.coords, cs.mean_coords), axis=0)
    C = c_hat(psi)
    return CovarianceTriple(L, C, gamma_hat(L, C))


@dataclass(frozen=True)
class ConfidenceRegion:
    """``{v : n (center - v)^T form (center - v) <= threshold}`` in chart coordinates."""

    center: np.ndarray
    form: np.ndarray
    threshold: float
    level: float
    n: int
    chart_id: str
    method: str = "clt"

    def statistic(self, v):
        D = np.asarray(v, dtype=float) - self.center
        return self.n * np.einsum("...i,ij,...j->...", D, self.form, D)

    def contains(self, v):
        return self.statistic(v) <= self.threshold

    def boundary(self, points=100):
        return region_boundary_polyline(self, points)


def clt_region(cs, cov, level=0.95):
    form = pd_inverse(cov.gamma_hat, "Gamma estimate")
    return ConfidenceRegion(
        center=cs.mean_coords.copy(),
        form=form,
        threshold=chi2_quantile(cs.dim, level),
        level=level,
        n=cs.n,
        chart_id=cs.chart_id,
    )


def region_boundary_polyline(region, points=100):
    """``points`` boundary samples of a 2-d region, uniform in angle."""
    if region.center.size != 2:
        raise ValueError("boundary polylines are only defined for 2-d regions")
    # form = R R with R symmetric: v - c = sqrt(t / n) R^-1 (cos, sin)
    w, V = np.linalg.eigh(region.form)
    R_inv = (V / np.sqrt(w)) @ V.T
    phi = 2 * np.pi * np.arange(points) / points
    circle = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    radius = math.sqrt(region.threshold / region.n)
    return region.center + radius * circle @ R_inv.T


@dataclass(frozen=True)
class BootstrapDistribution:
    values: np.ndarray
    B: int
    seed: int
    degenerate_count: int

    def quantile(self, level):
        return upper_quantile(self.values, level)


def run_replicates(plan, fn, max_degenerate_fraction=MAX_DEGENERATE_FRACTION):
    """Evaluate ``fn(idx)`` for every replicate, skipping degenerate ones.

    Returns ``(results, degenerate_count)`` with results in replicate order.
    """
    results, bad = [], 0
    for idx in plan.indices:
        try:
            results.append(fn(idx))
        except DegeneracyError:
            bad += 1
    if not results or bad > max_degenerate_fraction * plan.B:
        raise BootstrapDegeneracyError(
            f"{bad} of {plan.B} bootstrap replicates were degenerate",
            degenerate_count=bad,
            B=plan.B,
        )
    return results, bad


def _distribution(values, plan, bad):
    v = np.sort(np.asarray(values, dtype=float))
    v.setflags(write=False)
    return BootstrapDistribution(v, plan.B, plan.seed, bad)


@dataclass(frozen=True)
class PercentileRegion:
    """Ball ``{v : |center - v| <= radius}`` in chart coordinates."""

    center: np.ndarray
    radius: float
    level: float
    distribution: BootstrapDistribution

    def contains(self, v):
        return np.linalg.norm(np.asarray(v) - self.center, axis=-1) <= self.radius


def percentile_bootstrap_region(cs, plan, level=0.95):
    if plan.n != cs.n:
        raise ValueError("plan size does not match the sample")

    def deviation(idx):
        return float(np.linalg.norm(cs.resample(idx).mean_coords - cs.mean_coords))

    vals, bad = run_replicates(plan, deviation, max_degenerate_fraction=1.0)
    dist = _distribution(vals, plan, bad)
    return PercentileRegion(cs.mean_coords.copy(), dist.quantile(level), level, dist)


def pivot_statistic(n, deviation, gamma):
    """``n d^T Gamma^-1 d``; zero for a zero deviation even if ``Gamma`` is singular."""
    if np.max(np.abs(deviation)) <= ZERO_TOL:
        return 0.0
    return float(n * deviation @ pd_inverse(gamma, "replicate Gamma") @ deviation)


def pivotal_bootstrap_distribution(cs, plan):
    """Bootstrap values of ``n (mu* - mu)^T Gamma*^-1 (mu* - mu)``."""
    if plan.n != cs.n:
        raise ValueError("plan size does not match the sample")

    def stat(idx):
        rs = cs.resample(idx)
        dev = rs.mean_coords - cs.mean_coords
        if np.max(np.abs(dev)) <= ZERO_TOL:
            return 0.0
        return pivot_statistic(cs.n, dev, covariance_triple(rs).gamma_hat)

    vals, bad = run_replicates(plan, stat)
    return _distribution(vals, plan, bad)


def pivotal_bootstrap_region(cs, plan, level=0.95, cov=None):
    cov = covariance_triple(cs) if cov is None else cov
    dist = pivotal_bootstrap_distribution(cs, plan)
    region = ConfidenceRegion(
        center=cs.mean_coords.copy(),
        form=pd_inverse(cov.gamma_hat, "Gamma estimate"),
        threshold=dist.quantile(level),
        level=level,
        n=cs.n,
        chart_id=cs.chart_id,
        method="pivotal",
    )
    return region, dist


@dataclass
class PairedTestResult:
    statistic: float
    df: int
    p_clt: float
    p_boot: float
    gamma: np.ndarray
    gamma_hat: np.ndarray
    distribution: BootstrapDistribution
    gamma_star: np.ndarray = field(repr=False)

    def intervals(self, level=0.95):
        """Equal-tail percentile intervals for each component of ``mu - nu``."""
        a = (1.0 + level) / 2.0
        return [
            (lower_quantile(col, a), upper_quantile(col, a)) for col in self.gamma_star.T
        ]


def _paired_contrasts(xs, ys):
    Lx = np.mean(xs.metric.hessians(xs.coords, xs.mean_coords), axis=0)
    Ly = np.mean(ys.metric.hessians(ys.coords, ys.mean_coords), axis=0)
    _check_invertible(Lx, "Hessian estimate (first sample)")
    _check_invertible(Ly, "Hessian estimate (second sample)")
    px = xs.metric.psi(xs.coords, xs.mean_coords)
    py = ys.metric.psi(ys.coords, ys.mean_coords)
    return px @ np.linalg.inv(Lx).T - py @ np.linalg.inv(Ly).T


def _paired_stat(xs, ys):
    gamma = xs.mean_coords - ys.mean_coords
    contrasts = _paired_contrasts(xs, ys)
    G = empirical_cov(contrasts)
    if np.max(np.abs(gamma)) <= ZERO_TOL and np.max(np.abs(contrasts)) <= ZERO_TOL:
        return 0.0, gamma, G
    return pivot_statistic(xs.n, gamma, G), gamma, G


def paired_test(xs, ys, plan):
    """Test equality of Fréchet means for paired samples in a common chart.

    The statistic is ``n gamma^T Gamma^-1 gamma`` with ``gamma = mu_n - nu_n``
    and ``Gamma`` the covariance of ``Lambda_1^-1 Psi(X_i) - Lambda_2^-1 Psi(Y_i)``.
    ``p_boot`` is the fraction of bootstrap replicates (pairs resampled
    jointly) whose recentred statistic
    ``n (gamma* - gamma)^T Gamma*^-1 (gamma* - gamma)`` is at least the
    observed value.
    """
    if xs.n != ys.n:
        raise ValueError(f"paired samples differ in length ({xs.n} vs {ys.n})")
    if xs.chart_id != ys.chart_id:
        raise ValueError("paired samples must share a chart")
    if plan.n != xs.n:
        raise ValueError("plan size does not match the sample")
    t_obs, gamma, G = _paired_stat(xs, ys)
    d = xs.dim

    def replicate(idx):
        rx, ry = xs.resample(idx), ys.resample(idx)
        g_star = rx.mean_coords - ry.mean_coords
        dev = g_star - gamma
        if np.max(np.abs(dev)) <= ZERO_TOL:
            return 0.0, g_star
        return pivot_statistic(xs.n, dev, empirical_cov(_paired_contrasts(rx, ry))), g_star

    results, bad = run_replicates(plan, replicate)
    stats_ = np.array([r[0] for r in results])
    g_star = np.array([r[1] for r in results])
    dist = _distribution(stats_, plan, bad)
    return PairedTestResult(
        statistic=t_obs,
        df=d,
        p_clt=chi2_sf(d, t_obs),
        p_boot=float(np.mean(stats_ >= t_obs)),
        gamma=gamma,
        gamma_hat=G,
        distribution=dist,
        gamma_star=g_star,
    )
