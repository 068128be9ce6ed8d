import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_means.errors import BootstrapDegeneracyError, DataError, FocalMeanError
from manifold_means.extrinsic import extrinsic_cov, extrinsic_mean
from manifold_means.planar import (
    VeroneseCP,
    affine_coords,
    canonical_phase,
    circularize,
    complex_from_generic,
    cp_bootstrap_test,
    cp_extrinsic_cov,
    cp_t_stat,
    helmert_submatrix,
    preshape_from_landmarks,
    procrustes_mean,
    realify,
    shape_from_affine,
    simultaneous_complex_intervals,
)
from manifold_means.stat_kernel import chi2_quantile, resample_plan
from manifold_means.synthetic import cp_sample, planar_configurations, random_special_unitary

BASE = np.array([0.0, 1.0, 1.2 + 0.8j, 0.3 + 1.1j, -0.2 + 0.5j])


def test_helmert_rows():
    H = helmert_submatrix(5)
    assert np.allclose(H @ H.T, np.eye(4))
    assert np.allclose(H.sum(axis=1), 0)


def test_preshape_invariances(rng):
    z = preshape_from_landmarks(BASE)
    assert np.linalg.norm(z) == pytest.approx(1.0)
    assert abs(z[-1].imag) <= 1e-12 and z[-1].real > 0
    for _ in range(20):
        c = complex(*rng.standard_normal(2))
        s = rng.uniform(0.1, 10) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        assert np.allclose(preshape_from_landmarks(s * BASE + c), z, atol=1e-10)
    with pytest.raises(DataError):
        preshape_from_landmarks(np.full(4, 1 + 1j))


def test_centered_identification_invariances(rng):
    z = preshape_from_landmarks(BASE, identification="centered")
    assert z.shape == (4,)
    assert np.allclose(preshape_from_landmarks(3j * BASE + 2, identification="centered"), z)


def test_canonical_phase_skips_trailing_zero():
    z = canonical_phase(np.array([1j, 0.0]))
    assert np.allclose(z, [1, 0])


def test_procrustes_mean_cases(rng):
    z = preshape_from_landmarks(BASE)
    assert np.allclose(procrustes_mean(np.tile(z, (5, 1))).mean, z, atol=1e-12)
    Z = cp_sample(rng, 4, 30, 0.2)
    m = procrustes_mean(Z).mean
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, (30, 1)))
    assert np.allclose(procrustes_mean(Z * phases).mean, m, atol=1e-12)
    with pytest.raises(FocalMeanError):
        procrustes_mean(np.eye(2, dtype=complex))


def test_procrustes_recovers_base_shape(rng):
    Z = preshape_from_landmarks(planar_configurations(rng, BASE, 400, 0.02))
    m = procrustes_mean(Z).mean
    assert abs(np.vdot(m, preshape_from_landmarks(BASE))) >= 1 - 1e-4


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 4))
def test_procrustes_su_equivariance(seed, K):
    rng = np.random.default_rng(seed)
    Z = cp_sample(rng, K, 25, 0.3, circular=bool(seed % 2))
    U = random_special_unitary(rng, K)
    a = canonical_phase(U @ procrustes_mean(Z).mean)
    b = procrustes_mean(canonical_phase(Z @ U.T)).mean
    assert np.max(np.abs(a - b)) <= 1e-9


def test_cp_cov_cases(rng):
    one = np.zeros((6, 3), dtype=complex)
    one[:, 2] = 1
    assert np.allclose(cp_extrinsic_cov(one), 0)
    G = cp_extrinsic_cov(cp_sample(rng, 4, 50, 0.3, circular=False))
    assert np.allclose(G, G.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(G).min() >= -1e-14


def test_cp_cov_matches_generic_on_any_sample(rng):
    emb = VeroneseCP(3)
    for _ in range(5):
        Z = cp_sample(rng, 3, 20, 0.3, circular=False)
        G = cp_extrinsic_cov(Z)
        for numeric in (False, True):
            tol = 1e-10 if not numeric else 1e-6
            Gc = complex_from_generic(extrinsic_cov(Z, emb, numeric=numeric))
            assert np.max(np.abs(Gc - G)) <= tol * np.max(np.abs(G))


def test_realification_on_circular_samples(rng):
    emb = VeroneseCP(3)
    for _ in range(5):
        Z = circularize(cp_sample(rng, 3, 10, 0.3, circular=False))
        gen = extrinsic_cov(Z, emb)
        assert np.max(np.abs(realify(cp_extrinsic_cov(Z)) - gen)) <= 1e-8 * np.max(np.abs(gen))


def test_realification_fails_without_circularity(rng):
    # documents that the complex matrix drops the pseudo-covariance
    Z = cp_sample(rng, 3, 200, 0.3, circular=False)
    gen = extrinsic_cov(Z, VeroneseCP(3))
    assert np.max(np.abs(realify(cp_extrinsic_cov(Z)) - gen)) > 1e-3 * np.max(np.abs(gen))


def test_cp_t_stat_cases(rng):
    Z = cp_sample(rng, 3, 100, 0.2)
    m = procrustes_mean(Z).mean
    r = cp_t_stat(Z, m)
    assert r.statistic == 0.0 and r.df == 2 * (3 - 1)
    nu = canonical_phase(Z[0])
    t = cp_t_stat(Z, nu).statistic
    U = random_special_unitary(rng, 3)
    assert cp_t_stat(Z @ U.T, U @ nu).statistic == pytest.approx(t, rel=1e-8)
    assert cp_t_stat(Z, nu * 1j).statistic == pytest.approx(t, rel=1e-10)


def test_cp_t_stat_matches_generic_when_circular(rng):
    from manifold_means.extrinsic import t_stat_sample_frame

    Z = circularize(cp_sample(rng, 2, 200, 0.2))
    emb = VeroneseCP(2)
    s = extrinsic_mean(Z, emb)
    nu = canonical_phase(np.array([0.05 + 0.02j, 1.0]))
    a = cp_t_stat(Z, nu).statistic
    b = t_stat_sample_frame(s, emb, nu)
    assert abs(a - b) / b <= 0.05


def test_cp_bootstrap(rng):
    one = np.tile(preshape_from_landmarks(BASE[:4]), (20, 1))
    d = cp_bootstrap_test(one, resample_plan(0, 100, 20))
    assert np.all(d.values == 0)
    Z = cp_sample(rng, 4, 200, 0.2)
    plan = resample_plan(6, 500, 200)
    d1 = cp_bootstrap_test(Z, plan)
    chi = chi2_quantile(4, 0.95)
    assert 0.5 * chi <= d1.quantile(0.95) <= 2 * chi
    assert np.array_equal(d1.values, cp_bootstrap_test(Z, plan).values)


def test_affine_coords_cases(rng):
    assert np.allclose(affine_coords(np.array([0, 0, 1.0 + 0j])), 0)
    z = canonical_phase(cp_sample(rng, 4, 1, 0.5)[0])
    w = affine_coords(z)
    assert np.allclose(affine_coords(z * np.exp(0.7j)), w)
    assert np.allclose(shape_from_affine(w), z, atol=1e-10)
    with pytest.raises(DataError):
        affine_coords(np.array([1.0, 0.0]))


def test_simultaneous_intervals(rng):
    z = preshape_from_landmarks(BASE)
    res = simultaneous_complex_intervals(np.tile(z, (10, 1)), resample_plan(0, 100, 10))
    w = affine_coords(z)
    for iv, c in zip(res.intervals, w):
        assert iv.lo == pytest.approx(c) and iv.hi == pytest.approx(c)
    Z = preshape_from_landmarks(planar_configurations(rng, BASE, 60, 0.03))
    res = simultaneous_complex_intervals(Z, resample_plan(1, 300, 60), 0.95)
    assert res.per_margin_level == pytest.approx(1 - 0.05 / 6)
    assert len(res.intervals) == 3
    for iv, c in zip(res.intervals, res.center):
        assert iv.contains(c)
        assert iv.lo.real < iv.hi.real and iv.lo.imag < iv.hi.imag


def test_bootstrap_refuses_mostly_focal(rng):
    # two orthogonal shapes: many replicates are focal
    Z = np.array([[1, 0], [0, 1]] * 3, dtype=complex)
    with pytest.raises((BootstrapDegeneracyError, FocalMeanError)):
        cp_bootstrap_test(Z, resample_plan(0, 100, 6))
