import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorcheck import expr as E
from lorcheck import geodesics as G
from lorcheck import metric as M
from lorcheck import nullcone as NC
from lorcheck import riccati as R

from conftest import FROZEN, random_nd_curve, wide

HYP = wide("ultrastatic-hyperbolic")


def const(B):
    B = np.asarray(B, dtype=float)
    return lambda t: B


def test_initial_condition_examples():
    assert np.array_equal(R.riccati_initial_condition(np.zeros((2, 2)), 1e-3), np.eye(2))
    L = R.riccati_initial_condition(np.diag([1.0, 0.0]), 0.1)
    assert np.allclose(L, np.diag([1 - 0.01 / 3, 1.0]), atol=1e-15)
    assert L[0, 0] == pytest.approx(0.9966667, abs=1e-7)
    with pytest.raises(ValueError):
        R.riccati_initial_condition(np.eye(2), 0.0)


def test_zero_curvature_keeps_identity():
    tr = R.integrate_riccati(const(np.zeros((3, 3))), 5.0)
    assert np.max(np.abs(tr.L - np.eye(3))) < 1e-9
    assert R.verify_comparison(tr).status == "boundary"


def test_t_cot_t():
    ts = np.linspace(0.01, 3.0, 300)
    tr = R.integrate_riccati(const(np.diag([1.0, 0.0])), 3.0, sample_times=ts)
    idx = [tr.at(t) for t in ts]
    assert np.max(np.abs(tr.L[idx, 0, 0] - ts / np.tan(ts))) < 1e-6
    assert np.max(np.abs(tr.L[idx, 1, 1] - 1.0)) < 1e-9
    assert np.max(np.abs(tr.L[idx, 0, 1])) < 1e-12
    assert np.max(np.abs(tr.null_min[idx] - (1 - ts / np.tan(ts)))) < 1e-6
    res = R.verify_comparison(tr)
    assert res.status == "pass" and res.first_t is None


def test_t_coth_t_fails_comparison():
    ts = np.linspace(0.01, 3.0, 300)
    tr = R.integrate_riccati(const(np.diag([-1.0, 0.0])), 3.0, sample_times=ts)
    idx = [tr.at(t) for t in ts]
    assert np.max(np.abs(tr.L[idx, 0, 0] - ts / np.tanh(ts))) < 1e-6
    assert np.max(np.abs(tr.L[idx, 1, 1] - 1.0)) < 1e-9
    res = R.verify_comparison(tr)
    assert res.status == "fail" and res.first_t <= tr.t[0] + 1e-15


@pytest.mark.parametrize("i", range(5))
def test_closed_form_values_frozen(i):
    cf = FROZEN["closed_forms"]
    t = cf["t"][i]
    tr = R.integrate_riccati(const(np.diag([-1.0, 0.0])), t, sample_times=[t])
    assert tr.L[tr.at(t), 0, 0] == pytest.approx(cf["t_coth_t"][i], abs=1e-6)
    if t < math.pi:
        tr = R.integrate_riccati(const(np.diag([1.0, 0.0])), t, sample_times=[t])
        assert tr.L[tr.at(t), 0, 0] == pytest.approx(cf["t_cot_t"][i], abs=1e-6)


def test_blowup_at_pi():
    tr = R.integrate_riccati(const(np.diag([1.0, 0.0])), 4.0)
    assert tr.blowup_t is not None and abs(tr.blowup_t - math.pi) < 1e-3
    assert tr.t[-1] < tr.blowup_t and np.max(np.abs(tr.L)) <= R.BLOWUP


def test_against_reference_integrator():
    case = FROZEN["riccati"][0]
    exprs = [[E.parse_metric_expression(s, names=["t"]) for s in row] for row in case["B"]]

    def B(t):
        return np.array([[float(E.evaluate(e, [t])) for e in row] for row in exprs])

    tr = R.integrate_riccati(B, case["t"][-1], sample_times=case["t"])
    for t, L in zip(case["t"], case["L"]):
        assert np.max(np.abs(tr.L[tr.at(t)] - np.reshape(L, (2, 2)))) < 1e-8


def test_bad_inputs():
    with pytest.raises(ValueError):
        R.integrate_riccati(const(np.eye(2)), 1.0, t0=2.0)

    def broken(t):
        raise ZeroDivisionError("nope")

    with pytest.raises(R.RiccatiError):
        R.integrate_riccati(broken, 1.0)
    with pytest.raises(ValueError):
        R.verify_comparison(R.RiccatiTrace(np.array([]), np.zeros((0, 2, 2)), np.array([]),
                                           np.zeros((0, 2)), np.zeros((0, 2, 2)), "abstract"))


def test_verify_tolerance_band():
    tr = R.RiccatiTrace(np.array([1.0, 2.0]), np.zeros((2, 2, 2)), np.array([1e-3, -1e-13]),
                        np.zeros((2, 2)), np.zeros((2, 2, 2)), "abstract")
    assert R.verify_comparison(tr).status == "boundary"
    assert str(R.verify_comparison(tr, tol=1e-14)) == "fail(2)"


@given(seed=st.integers(0, 2**32 - 1), m=st.sampled_from([2, 3]))
def test_comparison_property(seed, m):
    rng = np.random.default_rng(seed)
    B0, B1 = random_nd_curve(rng, m)
    for t in (0.0, 0.7, 1.3, 2.0):
        assert NC.classify_null_definiteness(B0 + t * B1).kind == NC.ND
    tr = R.integrate_riccati(lambda t: B0 + t * B1, 2.0)
    assert tr.blowup_t is None
    assert R.verify_comparison(tr).status == "pass"
    assert np.all(np.diff(tr.t) > 0)
    assert max(NC.eta_symmetry_residual(L) for L in tr.L) < 1e-7


@pytest.mark.parametrize("seed", range(5))
def test_taylor_jet(seed):
    rng = np.random.default_rng(100 + seed)
    B0, B1 = random_nd_curve(rng, 3)
    h = 0.01
    tr = R.integrate_riccati(lambda t: B0 + t * B1, 4 * h, sample_times=[h, 2 * h, 4 * h])
    L1, L2, L4 = (tr.L[tr.at(k * h)] for k in (1, 2, 4))
    I = np.eye(3)
    d1 = 2 * (L1 - I) / h - (L2 - I) / (2 * h)
    d2 = 2 * (L2 - 2 * L1 + I) / h**2 - (L4 - 2 * L2 + I) / (2 * h) ** 2
    assert np.max(np.abs(d1)) < 1e-4
    assert np.max(np.abs(d2 + 2.0 / 3.0 * B0)) < 1e-3


# ---------------------------------------------------------------------------
# frame Riccati


def test_frame_riccati_minkowski_identity():
    flat = M.minkowski(3, T=2.0, box=[(-2, 2)] * 3)
    p = np.zeros(4)
    ray = G.radial_ray(flat, p, [0.4, 1.0, 0.3, -0.2], 1.5)
    tr = R.integrate_frame_riccati(flat, ray)
    assert tr.source == "frame-geodesic"
    assert np.max(np.abs(tr.L - np.eye(3))) < 1e-8
    assert np.max(np.abs(tr.null_min)) < 1e-8


def test_frame_riccati_hyperbolic_spatial_ray():
    p = np.array([0.0, -0.5, 0.2])
    ray = G.radial_ray(HYP, p, [0.0, 1.0, 0.0], 1.2)
    rs = np.linspace(0.1, 1.2, 12)
    tr = R.integrate_frame_riccati(HYP, ray, sample_times=rs)
    w = tr.extras["weights"]
    spatial = int(np.flatnonzero(w > 0)[0])
    timelike = int(np.flatnonzero(w < 0)[0])
    for r in rs:
        S = tr.L[tr.at(r)]
        assert abs(S[spatial, spatial] - r / math.tanh(r)) < 1e-4
        assert abs(S[timelike, timelike] - 1.0) < 1e-8


def test_frame_riccati_ode_residual():
    p = np.array([0.1, 0.0, 0.3])
    ray = G.radial_ray(HYP, p, [0.3, 0.6, 0.8], 1.0)
    h = 0.01
    rs = np.round(np.arange(0.1, 1.0 + h / 2, h), 12)
    tr = R.integrate_frame_riccati(HYP, ray, sample_times=rs)
    S = np.array([tr.L[tr.at(r)] for r in rs])
    Rt = np.array([tr.B[tr.at(r)] for r in rs])
    for i in range(2, len(rs) - 2):
        dS = (-S[i + 2] + 8 * S[i + 1] - 8 * S[i - 1] + S[i - 2]) / (12 * h)
        r = rs[i]
        res = r * dS - S[i] + S[i] @ S[i] + r * r * Rt[i]
        assert np.max(np.abs(res)) < 1e-6


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("direction", [[0.0, 1.0, 0.4, -0.3], [0.5, -0.2, 1.0, 0.6]])
def test_frame_riccati_matches_abstract(dim, direction):
    spec = wide("ultrastatic-hyperbolic", dim)
    p = np.full(dim + 1, 0.1)
    ray = G.radial_ray(spec, p, direction[: dim + 1], 1.0)
    rs = [0.25, 0.5, 0.75, 1.0]
    tr = R.integrate_frame_riccati(spec, ray, sample_times=rs)
    Rt0 = tr.B[0]
    # locally symmetric: the parallel-frame curvature matrix is constant
    assert np.max(np.abs(tr.B - Rt0)) < 1e-8
    ab = R.integrate_riccati(const(Rt0), 1.0, sample_times=rs)
    for r in rs:
        assert np.max(np.abs(tr.L[tr.at(r)] - ab.L[ab.at(r)])) < 1e-6


def test_frame_riccati_rejects_bad_rays():
    with pytest.raises(TypeError):
        R.integrate_frame_riccati(HYP, None)
    ray = G.RadialRay(np.zeros(3), np.array([0.0, 2.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        R.integrate_frame_riccati(HYP, ray)
