import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_means import sphere
from manifold_means.errors import BootstrapDegeneracyError, SingularCovarianceError
from manifold_means.frechet import (
    ConfidenceRegion,
    CovarianceTriple,
    c_hat,
    clt_region,
    covariance_triple,
    flat_sample,
    gamma_hat,
    paired_test,
    percentile_bootstrap_region,
    pivotal_bootstrap_region,
    region_boundary_polyline,
    sphere_sample,
)
from manifold_means.stat_kernel import chi2_quantile, resample_plan
from manifold_means.synthetic import sphere_tangent_gaussian

CHI2_2_95 = 5.99146


def region(center, form, threshold, n):
    return ConfidenceRegion(np.asarray(center, float), np.asarray(form, float), threshold, 0.95, n, "flat")


def test_c_hat_cases(rng):
    assert np.allclose(c_hat(np.tile([1.0, 2.0], (5, 1))), 0)
    assert np.allclose(c_hat([[1.0, 0.0], [-1.0, 0.0]]), np.diag([1.0, 0.0]))
    P = rng.standard_normal((30, 3))
    m = P.mean(axis=0)
    oracle = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            oracle[i, j] = sum((p[i] - m[i]) * (p[j] - m[j]) for p in P) / len(P)
    assert np.allclose(c_hat(P), oracle, atol=1e-12)


def test_gamma_hat_cases(rng):
    C = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert np.allclose(gamma_hat(np.eye(2), C), C)
    assert np.allclose(gamma_hat(2 * np.eye(2), np.eye(2)), np.eye(2) / 4)
    L = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    A = rng.standard_normal((3, 3))
    C = A @ A.T
    G = gamma_hat(L, C)
    assert np.allclose(L @ G @ L.T, C, atol=1e-10)
    with pytest.raises(SingularCovarianceError):
        gamma_hat(np.diag([1.0, 0.0]), np.eye(2))


def test_covariance_triple_flat(rng):
    X = rng.standard_normal((40, 3))
    cov = covariance_triple(flat_sample(X))
    assert np.allclose(cov.lambda_hat, 2 * np.eye(3))
    assert np.allclose(cov.gamma_hat, np.cov(X.T, bias=True), atol=1e-12)
    assert np.allclose(np.linalg.inv(cov.lambda_hat) @ cov.c_hat @ np.linalg.inv(cov.lambda_hat).T, cov.gamma_hat)


def test_sphere_chart_psi_is_minus_two_u(rng):
    mu = sphere.normalize(np.array([0.2, 0.3, 0.9]))
    cs = sphere_sample(sphere_tangent_gaussian(rng, mu, 50, (0.2, 0.1)))
    assert np.allclose(cs.mean_coords, 0, atol=1e-10)
    psi = cs.metric.psi(cs.coords, cs.mean_coords)
    assert np.allclose(psi, -2 * cs.coords, atol=1e-10)
    cov = covariance_triple(cs)
    assert np.allclose(cov.lambda_hat, sphere.lambda_hat(cs.coords), atol=1e-10)


def test_sphere_chart_off_centre_psi_matches_finite_differences(rng):
    mu = sphere.normalize(np.array([0.2, 0.3, 0.9]))
    cs = sphere_sample(sphere_tangent_gaussian(rng, mu, 10, (0.2, 0.1)))
    theta = np.array([0.05, -0.03])
    h = 1e-6
    f = lambda th: np.sum(
        np.arccos(np.clip(cs.metric.from_coords(cs.coords) @ cs.metric.from_coords(th), -1, 1)) ** 2
    )
    grad = np.array([(f(theta + h * e) - f(theta - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(cs.metric.psi(cs.coords, theta).sum(axis=0), grad, atol=1e-6)


def test_clt_region_cases():
    cs = flat_sample(np.zeros((100, 2)))
    cov = CovarianceTriple(2 * np.eye(2), 4 * np.eye(2), np.eye(2))
    reg = clt_region(cs, cov, 0.95)
    assert reg.contains(reg.center)
    assert reg.threshold == pytest.approx(CHI2_2_95, abs=1e-4)
    v = np.array([math.sqrt(reg.threshold / 100), 0.0])
    assert reg.statistic(v) == pytest.approx(reg.threshold, abs=1e-9)
    assert reg.statistic(np.array([math.sqrt(0.0599146), 0])) == pytest.approx(CHI2_2_95, abs=1e-4)


def test_clt_region_axis_permutation(rng):
    X = rng.standard_normal((50, 2)) * [1.0, 0.3]
    cs, csp = flat_sample(X), flat_sample(X[:, ::-1])
    r, rp = clt_region(cs, covariance_triple(cs)), clt_region(csp, covariance_triple(csp))
    for v in rng.standard_normal((20, 2)) * 0.3:
        assert r.statistic(v) == pytest.approx(rp.statistic(v[::-1]), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_clt_region_linear_reparameterization(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 2)) * rng.uniform(0.1, 2, 2)
    L = rng.standard_normal((2, 2))
    if abs(np.linalg.det(L)) < 0.1:
        L = L + np.eye(2)
    cs, csl = flat_sample(X), flat_sample(X @ L.T)
    r, rl = clt_region(cs, covariance_triple(cs)), clt_region(csl, covariance_triple(csl))
    v = rng.standard_normal(2)
    assert abs(r.statistic(v) - rl.statistic(L @ v)) <= 1e-9 * max(1.0, r.statistic(v))


def test_boundary_polyline_cases():
    pts = region_boundary_polyline(region([0, 0], np.eye(2), 1.0, 1), 50)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    pts = region_boundary_polyline(region([0, 0], np.diag([4.0, 1.0]), 4.0, 1), 4)
    expected = {(1.0, 0.0), (0.0, 2.0), (-1.0, 0.0), (0.0, -2.0)}
    assert {tuple(np.round(p, 12) + 0.0) for p in pts} == expected
    with pytest.raises(ValueError):
        region_boundary_polyline(region([0, 0, 0], np.eye(3), 1.0, 1))


def test_boundary_polyline_plug_back(rng):
    A = rng.standard_normal((2, 2))
    reg = region(rng.standard_normal(2), A @ A.T + np.eye(2), 5.99, 37)
    pts = reg.boundary(100)
    assert np.allclose(reg.statistic(pts), reg.threshold, atol=1e-9)


def test_percentile_region_cases(rng):
    cs = flat_sample(np.tile([0.3, 0.4], (20, 1)))
    assert percentile_bootstrap_region(cs, resample_plan(1, 200, 20)).radius == 0.0
    cs = flat_sample(rng.standard_normal((40, 2)))
    plan = resample_plan(3, 300, 40)
    r90 = percentile_bootstrap_region(cs, plan, 0.90)
    r95 = percentile_bootstrap_region(cs, plan, 0.95)
    assert r90.radius <= r95.radius
    assert r95.contains(cs.mean_coords)
    assert r95.distribution.degenerate_count + len(r95.distribution.values) == 300


def test_pivotal_constant_sample():
    cs = flat_sample(np.tile([0.3, 0.4], (20, 1)))
    reg_cov = CovarianceTriple(2 * np.eye(2), np.eye(2), np.eye(2))
    reg, dist = pivotal_bootstrap_region(cs, resample_plan(1, 200, 20), cov=reg_cov)
    assert reg.threshold == 0.0
    assert np.all(dist.values == 0.0)


def test_pivotal_threshold_near_chi2(rng):
    cs = flat_sample(rng.standard_normal((200, 2)) * [1.0, 0.5])
    reg, dist = pivotal_bootstrap_region(cs, resample_plan(11, 500, 200))
    chi = chi2_quantile(2, 0.95)
    assert 0.5 * chi <= reg.threshold <= 2 * chi
    assert reg.contains(reg.center)
    assert np.all(np.diff(dist.values) >= 0)


def test_pivotal_sphere_chart(rng):
    mu = sphere.normalize(np.array([0.2, 0.3, 0.9]))
    cs = sphere_sample(sphere_tangent_gaussian(rng, mu, 100, (0.2, 0.1)))
    reg, dist = pivotal_bootstrap_region(cs, resample_plan(5, 200, 100))
    chi = chi2_quantile(2, 0.95)
    assert 0.5 * chi <= reg.threshold <= 2 * chi
    assert dist.degenerate_count == 0


def test_pivotal_order_canonicalization(rng):
    X = rng.standard_normal((60, 2))
    perm = X[rng.permutation(60)]
    canon = lambda A: A[np.lexsort(A.T[::-1])]
    plan = resample_plan(9, 200, 60)
    a, _ = pivotal_bootstrap_region(flat_sample(canon(X)), plan)
    b, _ = pivotal_bootstrap_region(flat_sample(canon(perm)), plan)
    assert a.threshold == b.threshold


def test_pivotal_degenerate_replicates_refused():
    # two distinct values in 1-d: many replicates see a single value and
    # have a singular Gamma* but a nonzero deviation
    X = np.array([[0.0]] * 9 + [[1.0]])
    cs = flat_sample(X)
    with pytest.raises(BootstrapDegeneracyError) as info:
        pivotal_bootstrap_region(cs, resample_plan(0, 200, 10))
    assert info.value.degenerate_count > 40


def test_pivotal_seed_determinism(rng):
    cs = flat_sample(rng.standard_normal((30, 2)))
    a = pivotal_bootstrap_region(cs, resample_plan(4, 150, 30))[1].values
    b = pivotal_bootstrap_region(cs, resample_plan(4, 150, 30))[1].values
    assert np.array_equal(a, b)


def test_paired_identical_pairs(rng):
    X = rng.standard_normal((25, 3))
    res = paired_test(flat_sample(X), flat_sample(X), resample_plan(2, 200, 25))
    assert res.statistic == 0.0
    assert np.allclose(res.gamma, 0)
    assert res.p_clt == 1.0
    assert res.p_boot == 1.0


def test_paired_flat_matches_hotelling_form(rng):
    X = rng.standard_normal((40, 2))
    Y = X + 0.3 + 0.5 * rng.standard_normal((40, 2))
    res = paired_test(flat_sample(X), flat_sample(Y), resample_plan(2, 200, 40))
    D = X - Y
    g = D.mean(axis=0)
    S = np.cov(D.T, bias=True)
    assert res.statistic == pytest.approx(40 * g @ np.linalg.solve(S, g), rel=1e-10)
    assert 0.0 <= res.p_boot <= 1.0
    assert res.df == 2
    lo, hi = zip(*res.intervals(0.95))
    assert np.all(np.array(lo) <= np.array(hi))


def test_paired_errors(rng):
    X = rng.standard_normal((10, 2))
    with pytest.raises(ValueError):
        paired_test(flat_sample(X), flat_sample(X[:9]), resample_plan(0, 100, 10))
    mu = sphere.normalize(np.array([0.0, 0.3, 1.0]))
    S = sphere_sample(sphere_tangent_gaussian(rng, mu, 10, (0.1, 0.1)))
    with pytest.raises(ValueError):
        paired_test(flat_sample(X), S, resample_plan(0, 100, 10))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_paired_p_boot_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((15, 2))
    Y = rng.standard_normal((15, 2))
    res = paired_test(flat_sample(X), flat_sample(Y), resample_plan(seed, 100, 15))
    assert 0.0 <= res.p_boot <= 1.0
    assert 0.0 <= res.p_clt <= 1.0


@pytest.mark.slow
def test_pivotal_threshold_converges_large_n(rng):
    n = 2000
    cs = flat_sample(rng.standard_normal((n, 2)) * [1.0, 0.4])
    reg, _ = pivotal_bootstrap_region(cs, resample_plan(8, 1000, n))
    chi = chi2_quantile(2, 0.95)
    assert abs(reg.threshold - chi) <= 0.15 * chi


@pytest.mark.slow
def test_percentile_region_coverage_on_cap():
    rng = np.random.default_rng(2024)
    mu = sphere.normalize(np.array([0.2, 0.3, 0.9]))
    hits = 0
    reps = 200
    for r in range(reps):
        X = sphere_tangent_gaussian(rng, mu, 100, (0.2, 0.1))
        cs = sphere_sample(X)
        reg = percentile_bootstrap_region(cs, resample_plan(r, 500, 100), 0.95)
        hits += bool(reg.contains(cs.metric.to_coords(mu)))
    assert 0.90 <= hits / reps <= 0.99
