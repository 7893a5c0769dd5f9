import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorcheck import hypotheses as H
from lorcheck import metric as M
from lorcheck import nullcone as NC
from lorcheck.curvature import riemann

from conftest import CATALOG_SAMPLES, FROZEN, sample_points


def R4(lo, a, b):
    return float(np.einsum("ijkl,i,j,k,l->", lo, a, b, a, b))


@pytest.mark.parametrize("n", [2, 3])
def test_verdict_matrix(n):
    flat = M.minkowski(n)
    hyp = M.catalog("ultrastatic-hyperbolic", n)
    sph = M.catalog("ultrastatic-spherical", n)
    h1, h1s = (H.scan_curvature_condition(flat, 3, strict=s) for s in (False, True))
    assert (h1.verdict, h1s.verdict) == ("pass", "fail") and abs(h1.sup_value) < 1e-12
    for s in (False, True):
        rep = H.scan_curvature_condition(hyp, 3, strict=s)
        assert rep.passed and rep.sup_value == pytest.approx(-1.0, abs=1e-3)
    rep = H.scan_curvature_condition(sph, 3)
    assert rep.verdict == "fail" and rep.sup_value == pytest.approx(1.0, abs=1e-3)
    assert rep.condition == H.H1 and rep.grid_size[0] == 3 ** (n + 1)


@pytest.mark.parametrize("spec", CATALOG_SAMPLES[2:], ids=lambda s: str(s.family)[:60])
def test_witness_reevaluates_to_sup(spec):
    rep = H.scan_curvature_condition(spec, 3)
    w = rep.witness
    g, _, _ = M.eval_metric(spec, w.point)
    assert abs(w.N @ g @ w.N) < 1e-10
    assert abs(w.N @ g @ w.v) < 1e-10
    assert w.v @ g @ w.v == pytest.approx(1.0, abs=1e-10)
    assert abs(H.curvature_at_witness(spec, w) - rep.sup_value) < 1e-12


@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-10, 10), which=st.sampled_from(range(2, 9)))
def test_quotient_invariance(seed, c, which):
    spec = CATALOG_SAMPLES[which]
    rng = np.random.default_rng(seed)
    p = sample_points(spec, 1, seed)[0]
    curv = riemann(spec, p)
    fr = NC.build_orthonormal_frame(spec, p)
    k = spec.dim_space
    n = rng.normal(size=k)
    n /= np.linalg.norm(n)
    u = rng.normal(size=k)
    u -= (u @ n) * n
    N = fr.vectors[0] + n @ fr.vectors[1:]
    v = u @ fr.vectors[1:]
    base = R4(curv.riemann_lo, N, v)
    assert abs(R4(curv.riemann_lo, N, v + c * N) - base) < 1e-9 * (1 + abs(base))


@pytest.mark.parametrize("name", ["minkowski", "ultrastatic-hyperbolic", "ultrastatic-spherical"])
def test_scale_invariance(name):
    spec = M.catalog(name, 2)
    big = M.scaled(spec, 4.0)
    for strict in (False, True):
        a = H.scan_curvature_condition(spec, 3, strict)
        b = H.scan_curvature_condition(big, 3, strict)
        assert a.verdict == b.verdict
        # unit null and spacelike vectors shrink by 1/2, R_lo grows by 4
        assert b.sup_value == pytest.approx(a.sup_value / 4.0, abs=1e-9)


def test_grid_resolution():
    spec = M.minkowski(2)
    assert H.resolve_grid(spec, 2).shape == (8, 3)
    pts = np.array([[0.0, 0.1, 0.2]])
    assert H.resolve_grid(spec, pts).shape == (1, 3)
    with pytest.raises(ValueError):
        H.resolve_grid(spec, 0)
    with pytest.raises(M.DomainError):
        H.resolve_grid(spec, [[5.0, 0.0, 0.0]])
    with pytest.raises(H.HypothesisError):
        H.scan_curvature_condition(M.minkowski(1), 3)


def test_C0_examples():
    assert H.estimate_C0(M.minkowski(2)) == 0.0
    for name in ("ultrastatic-hyperbolic", "ultrastatic-spherical", "ultrastatic-euclidean"):
        assert H.estimate_C0(M.catalog(name, 2)) == 0.0


def test_C0_conformal_against_dense_lattice():
    spec = M.conformal(M.minkowski(2, T=1.0), "0.05*exp(t)")
    coarse = H.estimate_C0(spec, 5)
    dense = H.estimate_C0(spec, 9, density=4096)
    assert coarse > 0
    assert coarse == pytest.approx(dense, abs=1e-3)
    assert coarse == pytest.approx(FROZEN["closed_forms"]["conformal_C0_0p05_exp_t_T1"], abs=1e-3)


def test_strictify_minkowski():
    res = H.strictify(M.minkowski(2, T=1.0), grid=5, margin=1.0)
    assert abs(res.C0) < 1e-9 and res.lam == 1.0
    assert res.C1 == pytest.approx(FROZEN["closed_forms"]["strictify_minkowski_C1"], abs=1e-12)
    assert res.delta == pytest.approx(0.183940, abs=1e-6)
    assert res.verified.condition == H.H1_STRICT and res.verified.passed
    assert res.notes == []
    assert "exp" in res.f_string


def test_strictify_delta_zero_leaves_metric_unchanged():
    res = H.strictify(M.minkowski(2, T=1.0), grid=3, delta=0.0)
    assert not res.verified.passed
    assert abs(res.verified.sup_value) < 1e-12
    assert any("outside" in note for note in res.notes)


def test_strictify_hyperbolic_and_spherical():
    hyp = M.catalog("ultrastatic-hyperbolic", 2)
    res = H.strictify(hyp, grid=3)
    assert res.verified.passed
    # unit vectors of e^{2f} g are e^{-f} times those of g, so the base value
    # alone would read e^{-2f} R; the conformal correction pushes below that
    f_max = res.delta * math.exp(res.lam * hyp.T)
    assert res.verified.sup_value < math.exp(-2 * f_max) * res.base_report.sup_value
    with pytest.raises(H.HypothesisError):
        H.strictify(M.catalog("ultrastatic-spherical", 2), grid=3)
    with pytest.raises(ValueError):
        H.strictify(hyp, margin=0.0)


def test_conformal_factor():
    f = H.conformal_factor(0.5, 2.0)
    from lorcheck import expr as E

    assert float(E.evaluate(f, [0.3])) == pytest.approx(0.5 * math.exp(0.6), abs=1e-15)


def test_kappa():
    res = H.strictify(M.minkowski(2, T=1.0), grid=5)
    k1 = H.estimate_kappa(res.metric, 5)
    assert k1 < 0 and k1 == H.estimate_kappa(res.metric, 5)
    hyp = M.catalog("ultrastatic-hyperbolic", 2)
    k2 = H.estimate_kappa(hyp, 3)
    assert k2 < -1e-3 and k2 == H.estimate_kappa(hyp, 3)
    with pytest.raises(H.KappaError) as info:
        H.estimate_kappa(M.minkowski(2), 3)
    assert info.value.witness is not None and abs(info.value.value) < 1e-12


def test_kappa_matches_direct_ratio():
    # at the witness, the normalized value equals R / (|N|^2 |v|^2) in the chart
    res = H.strictify(M.minkowski(2, T=1.0), grid=3)
    sup, wit, _, _ = H._scan(res.metric, 3, H.SCAN_DENSITY, H.REFINE_POINTS, euclid=True)
    direct = H.curvature_at_witness(res.metric, wit) / ((wit.N @ wit.N) * (wit.v @ wit.v))
    assert direct == pytest.approx(sup, rel=1e-9)


def test_perturbation_zero_h():
    res = H.strictify(M.minkowski(2, T=1.0), grid=3)
    zero = [["0"] * 3] * 3
    ps = H.perturbation_scan(res.metric, zero, [0.1, 1.0, -5.0], grid=3)
    assert all(r.passed for r in ps.verdicts)
    assert len({r.sup_value for r in ps.verdicts}) == 1
    assert ps.largest_passing == -5.0 and ps.warnings == []


def test_perturbation_cross_term():
    res = H.strictify(M.minkowski(2, T=1.0), grid=5)
    h = [["0", "1", "0"], ["1", "0", "0"], ["0", "0", "0"]]
    ps = H.perturbation_scan(res.metric, h, [0.01, 0.05, 50.0], grid=5)
    assert [r.verdict for r in ps.verdicts] == ["pass", "pass", "fail"]
    assert ps.largest_passing == 0.05 and ps.kappa < 0


def test_perturbation_flips_hyperbolic():
    hyp = M.catalog("ultrastatic-hyperbolic", 2)
    h = [["0", "0", "0"], ["0", "0", "0"], ["0", "0", "cos(x1)^2 - exp(2*x1)"]]
    ps = H.perturbation_scan(hyp, h, [0.1, 0.5, 0.9, 1.0], grid=5)
    assert [r.verdict for r in ps.verdicts] == ["pass", "fail", "fail", "fail"]
    assert ps.verdicts[-1].sup_value > 0
    assert ps.largest_passing == 0.1


def test_perturbation_signature_loss():
    h = [["0", "0", "0"], ["0", "-1", "0"], ["0", "0", "0"]]
    ps = H.perturbation_scan(M.catalog("ultrastatic-hyperbolic", 2), h, [0.5, 2.0], grid=3)
    assert ps.verdicts[0].passed
    assert ps.verdicts[1] is None and "signature" in ps.errors[1]
