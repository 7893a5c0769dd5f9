import math

import numpy as np
import pytest

from lorcheck import geodesics as G
from lorcheck import metric as M
from lorcheck import nullcone as NC

from conftest import CATALOG_SAMPLES, FROZEN, sample_points, wide

HYP = wide("ultrastatic-hyperbolic")


def random_shots(spec, count, seed, scale=0.4):
    rng = np.random.default_rng(seed)
    pts = sample_points(spec, count, seed, margin=0.6)
    return pts, scale * rng.uniform(-1, 1, (count, spec.dim))


def test_minkowski_geodesic_is_a_line():
    spec = M.minkowski(2)
    p, v = np.array([0.1, -0.2, 0.3]), np.array([0.2, 0.4, -0.1])
    path = G.integrate_geodesic(spec, p, v, 1.0)
    assert np.max(np.abs(path.points - (p + path.s[:, None] * v))) < 1e-12
    assert np.all(np.diff(path.s) > 0)


def test_hyperbolic_spatial_line():
    path = G.integrate_geodesic(HYP, [0.0, -0.5, 0.3], [0.0, 1.0, 0.0], 1.2)
    assert np.max(np.abs(path.points[:, 2] - 0.3)) == 0.0
    assert np.max(np.abs(path.points[:, 1] - (-0.5 + path.s))) < 1e-12


@pytest.mark.parametrize("spec", CATALOG_SAMPLES, ids=lambda s: str(s.family)[:60])
def test_energy_conservation(spec):
    pts, vs = random_shots(spec, 50, 1, 0.2)
    for p, v in zip(pts, vs):
        path = G.integrate_geodesic(spec, p, v, 1.0)
        g, _, _ = M.metric_arrays(spec, path.points, order=1)
        e = np.einsum("si,sij,sj->s", path.tangents, g, path.tangents)
        assert np.max(np.abs(e - path.energy)) < 1e-8 * (1 + abs(path.energy))


def test_exp_examples():
    flat = M.minkowski(2)
    p, v = np.array([0.1, 0.2, 0.3]), np.array([0.3, -0.2, 0.1])
    assert np.allclose(G.exp_map(flat, p, v), p + v, atol=1e-14)
    assert np.array_equal(G.exp_map(HYP, p, np.zeros(3)), p)
    path = G.integrate_geodesic(HYP, p, v, 2.0)
    assert np.max(np.abs(G.exp_map(HYP, p, 2 * v) - path.end)) < 1e-10


@pytest.mark.parametrize("case", FROZEN["geodesics_hyperbolic"])
def test_endpoints_against_reference_integrator(case):
    path = G.integrate_geodesic(HYP, case["p"], case["v"], 1.0)
    assert np.max(np.abs(path.end - case["end"])) < 1e-10
    assert np.max(np.abs(path.tangents[-1] - case["end_velocity"])) < 1e-10


def test_domain_exit():
    spec = M.minkowski(2, T=1.0)
    path = G.integrate_geodesic(spec, [0.0, 0.0, 0.0], [0.0, 2.0, 0.0], 1.0)
    assert path.exited and np.all(spec.in_domain(path.points))
    with pytest.raises(G.DomainExitError):
        G.exp_map(spec, [0.0, 0.0, 0.0], [0.0, 2.0, 0.0])


def test_log_minkowski():
    flat = M.minkowski(2)
    p, q = np.array([0.1, 0.2, 0.3]), np.array([-0.2, 0.5, 0.1])
    assert np.max(np.abs(G.log_map(flat, p, q) - (q - p))) < 1e-13


def test_round_trip_hyperbolic():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = rng.uniform(-0.8, 0.8, 3)
        q = p + rng.uniform(-0.7, 0.7, 3)
        v = G.log_map(HYP, p, q)
        assert np.max(np.abs(G.exp_map(HYP, p, v) - q)) < 1e-8


def test_antipodal_sphere_pair_does_not_converge():
    sph = M.catalog("ultrastatic-spherical", 2, T=1.0, box=[(0.2, 2.9), (-2.0, 2.0)])
    p = np.array([0.0, math.pi / 2, -math.pi / 2])
    q = np.array([0.0, math.pi / 2, math.pi / 2])
    with pytest.raises(G.ShootingError) as info:
        G.log_map(sph, p, q)
    assert info.value.reason in ("conjugate", "non-convergence", "domain-exit")


def test_causal_examples():
    flat = M.minkowski(2, T=2.0, box=[(-2, 2), (-2, 2)])
    p = np.zeros(3)
    assert G.causal_classify(flat, p, [0.0, 1.0, 0.0]).kind == "spacelike"
    assert G.causal_classify(flat, p, [1.0, 0.0, 0.0]).kind == "timelike"
    assert G.causal_classify(flat, p, [1.0, 1.0, 0.0]).kind == "null"
    assert G.causal_type(1e-9, 1.0) == "null" and G.causal_type(-1e-7, 1.0) == "timelike"


def test_distance_examples():
    flat = M.minkowski(2, T=2.0, box=[(-2, 2), (-2, 2)])
    p = np.zeros(3)
    assert G.lorentzian_distance(flat, p, [0.3, 1.0, 0.0]) == pytest.approx(math.sqrt(0.91), abs=1e-12)
    assert G.lorentzian_distance(flat, p, [0.0, 1.0, 0.0]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(G.NotSpacelikeError):
        G.lorentzian_distance(flat, p, [0.5, 0.1, 0.0])


@pytest.mark.parametrize("case", FROZEN["distance_hyperbolic"])
def test_distance_against_closed_form(case):
    r = G.lorentzian_distance(HYP, case["p"], case["q"])
    assert r * r == pytest.approx(case["r2"], abs=1e-9)


def test_distance_homogeneity():
    p = np.array([0.1, 0.2, -0.1])
    for w0 in ([0.3, 1.0, 0.2], [-0.2, 0.1, 0.9]):
        ray = G.radial_ray(HYP, p, w0, 1.0)
        r = 0.9
        for c in (1.0, 0.5, 0.2):
            q = G.exp_map(HYP, p, c * r * ray.direction)
            assert G.lorentzian_distance(HYP, p, q) == pytest.approx(c * r, abs=1e-8)


def test_gauss_lemma_sample():
    p = np.array([0.0, 0.1, -0.1])
    for w0, r in (([0.2, 1.0, 0.3], 0.8), ([0.1, -0.4, 1.0], 0.5)):
        ray = G.radial_ray(HYP, p, w0, r)
        q = G.exp_map(HYP, p, r * ray.direction)
        h = 1e-4
        Q = np.concatenate([q + h * np.eye(3), q - h * np.eye(3)])
        r2, _ = G.distance_squared_batch(HYP, p, Q, V0=np.tile(r * ray.direction, (6, 1)))
        grad_r = (np.sqrt(r2[:3]) - np.sqrt(r2[3:])) / (2 * h)
        g, _, _ = M.eval_metric(HYP, q)
        assert abs(grad_r @ np.linalg.solve(g, grad_r) - 1.0) < 1e-4


def test_transport_minkowski_is_constant():
    flat = M.minkowski(2)
    path = G.integrate_geodesic(flat, [0.0, 0.0, 0.0], [0.3, 0.5, -0.2], 1.0)
    fr = NC.build_orthonormal_frame(flat, np.zeros(3))
    tf = G.parallel_transport_frame(flat, path, fr)
    assert np.max(np.abs(tf.vectors - np.eye(3)[None])) < 1e-14


@pytest.mark.parametrize("spec", CATALOG_SAMPLES[2:], ids=lambda s: str(s.family)[:60])
def test_transport_preserves_inner_products(spec):
    pts, vs = random_shots(spec, 50 if spec.dim_space == 2 else 10, 3, 0.3)
    for p, v in zip(pts, vs):
        path = G.integrate_geodesic(spec, p, v, 1.0)
        if path.exited:
            continue
        fr = NC.build_orthonormal_frame(spec, p)
        vecs = np.vstack([fr.vectors, v])
        tf = G.parallel_transport_frame(spec, path, NC.Frame(p, vecs, np.ones(len(vecs))))
        g, _, _ = M.metric_arrays(spec, tf.points, order=1)
        gram = np.einsum("sai,sij,sbj->sab", tf.vectors, g, tf.vectors)
        assert np.max(np.abs(gram - gram[0])) < 1e-8
        # the last transported vector is the tangent itself
        assert np.max(np.abs(tf.vectors[:, -1, :] - tf.tangents)) < 1e-8
