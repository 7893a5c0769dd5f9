import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorcheck import metric as M
from lorcheck import nullcone as NC

from conftest import CATALOG_SAMPLES, sample_points


def test_identity_is_boundary():
    v = NC.classify_null_definiteness(np.eye(2))
    assert v.kind == NC.BOUNDARY and v.margin == 0.0


def test_two_point_cone_definite():
    v = NC.classify_null_definiteness(np.diag([1.0, 0.0]))
    assert v.kind == NC.ND and v.margin == 1.0
    for s in (1.0, -1.0):
        w = np.array([1.0, s])
        assert w @ NC.eta(2) @ np.diag([1.0, 0.0]) @ w == -1.0


def test_indefinite():
    assert NC.classify_null_definiteness(np.diag([0.0, 1.0])).kind == NC.INDEFINITE


def test_witness_is_normalized_null():
    rng = np.random.default_rng(0)
    for m in (2, 3, 4):
        A = rng.standard_normal((m, m))
        L = NC.eta(m) @ (A + A.T)
        v = NC.classify_null_definiteness(L)
        assert v.witness[0] == 1.0
        assert abs(NC.minkowski_inner(v.witness, v.witness)) < 1e-10
        assert NC.minkowski_inner(L @ v.witness, v.witness) == pytest.approx(-v.margin, abs=1e-12)


def test_rejects_non_symmetric():
    with pytest.raises(NC.NullConeError):
        NC.classify_null_definiteness(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_null_eigenvector_identity():
    x, lam = NC.find_null_eigenvector(np.eye(3))
    assert lam == pytest.approx(1.0)
    assert x[0] == 1.0 and abs(NC.minkowski_inner(x, x)) < 1e-12


def circle_profile_matrix():
    # <L(1, cos a, sin a), (1, cos a, sin a)> = -(1 - cos a)
    return np.array([[1.0, -0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]])


def test_null_eigenvector_from_profile():
    L = circle_profile_matrix()
    angles = np.linspace(0, 2 * np.pi, 4001)
    pts = np.stack([np.ones_like(angles), np.cos(angles), np.sin(angles)], axis=1)
    q = np.einsum("ki,ij,jl,kl->k", pts, NC.eta(3), L, pts)
    assert np.max(np.abs(q + (1 - np.cos(angles)))) < 1e-14
    assert angles[np.argmax(q)] == 0.0
    x, lam = NC.find_null_eigenvector(L)
    assert np.allclose(x, [1.0, 1.0, 0.0], atol=1e-7)
    assert np.linalg.norm(L @ x - lam * x) < 1e-8 * np.linalg.norm(L)
    assert lam == pytest.approx(0.5, abs=1e-8)


def test_null_eigenvector_requires_boundary():
    with pytest.raises(NC.NullConeError):
        NC.find_null_eigenvector(np.diag([1.0, 0.0]))


def random_eta_symmetric(rng, m):
    A = rng.standard_normal((m, m))
    return NC.eta(m) @ (A + A.T)


@given(st.integers(0, 10**6), st.integers(2, 4), st.floats(0.01, 100.0))
def test_homogeneity(seed, m, c):
    L = random_eta_symmetric(np.random.default_rng(seed), m)
    a = NC.classify_null_definiteness(L)
    b = NC.classify_null_definiteness(c * L)
    assert a.kind == b.kind or abs(a.margin) < 1e-6
    assert b.margin == pytest.approx(c * a.margin, rel=1e-6, abs=1e-9)


def boundary_matrix(rng, m):
    """Shift a random null negative-definite matrix until its null maximum touches 0."""
    L = random_eta_symmetric(rng, m)
    # <(L - s id) v, v> = <Lv, v> on the cone, so shift with a non-trivial form instead
    P = np.diag([1.0] + [0.0] * (m - 1))  # <Pv, v> = -1 on the normalized slice
    lo, hi = -50.0, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if NC.slice_maximum(L + mid * P)[0] > 0:
            lo = mid
        else:
            hi = mid
    return L + hi * P


@given(st.integers(0, 10**6), st.integers(2, 4))
def test_lemma_null_eigenvector_property(seed, m):
    L = boundary_matrix(np.random.default_rng(seed), m)
    assert NC.classify_null_definiteness(L).kind == NC.BOUNDARY
    x, lam = NC.find_null_eigenvector(L)
    assert np.linalg.norm(L @ x - lam * x) < 1e-6
    assert abs(NC.minkowski_inner(x, x)) < 1e-10


def test_two_dimensional_scan_is_exact():
    L = np.array([[2.0, 0.5], [-0.5, 1.0]])
    q = [np.array([1.0, s]) @ NC.eta(2) @ L @ np.array([1.0, s]) for s in (1.0, -1.0)]
    assert NC.slice_maximum(L)[0] == max(q)


def test_coordinate_frame_for_minkowski():
    fr = NC.build_orthonormal_frame(M.minkowski(2), np.zeros(3))
    assert np.array_equal(fr.vectors, np.eye(3))
    assert np.array_equal(fr.weights, [-1.0, 1.0, 1.0])


def test_scaled_frame():
    fr = NC.build_orthonormal_frame(M.scaled(M.minkowski(2), 4.0), np.zeros(3))
    assert np.allclose(fr.vectors, 0.5 * np.eye(3), atol=1e-15)


def test_frame_gram_on_catalog():
    for spec in CATALOG_SAMPLES:
        for p in sample_points(spec, 5, seed=8):
            g, _, _ = M.eval_metric(spec, p)
            fr = NC.build_orthonormal_frame(spec, p)
            assert np.max(np.abs(fr.gram(g) - np.diag(fr.weights))) < 1e-10


def test_frame_errors():
    with pytest.raises(NC.FrameError):
        NC.build_orthonormal_frame(M.minkowski(2), np.zeros(3), seed=[0.0, 1.0, 0.0])
    with pytest.raises(NC.FrameError):
        NC.orthonormal_frame(np.diag([-1.0, 0.0, 1.0]), [1.0, 0.0, 0.0])


def test_complement_frame():
    g = np.diag([-1.0, 1.0, 1.0, 1.0])
    radial = np.array([math.sinh(0.3), math.cosh(0.3), 0.0, 0.0])
    fr = NC.complement_frame(g, radial)
    assert fr.weights.tolist() == [-1.0, 1.0, 1.0]
    assert np.max(np.abs(fr.vectors @ g @ radial)) < 1e-14
    assert np.max(np.abs(fr.gram(g) - np.diag(fr.weights))) < 1e-14
