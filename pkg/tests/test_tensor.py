import numpy as np
import pytest
import sympy as sp

from umbilic.jets import Jet, JetError
from umbilic.perturb import BidegreePoly, random_real_poly
from umbilic.surfaces import (
    Ellipsoid,
    LinearMap,
    LogTorus,
    MappedSurface,
    PerturbedSphere,
    PolynomialSurface,
    RescaledSurface,
    Sphere,
    hessian_bound,
    strict_psc_check,
)
from umbilic.tensor import (
    LeviDegeneracyError,
    OffSurfaceError,
    TensorBatch,
    a3_matrix,
    det_a3,
    evaluate,
    q_invariant,
)

# det A₃ of log_torus(0.5) at (e^{0.5}, 1), from 40-digit symbolic differentiation
# of (log z + log z̄)²/4 + (log w + log w̄)²/4 - 1/4 (see test_log_torus_det_oracle)
LOG_TORUS_DET = 3.9721306685690258e-10


def sample_params(rng, n, lo1=0.05, hi1=np.pi / 2 - 0.05):
    return np.column_stack([rng.uniform(lo1, hi1, n), rng.uniform(0, 2 * np.pi, (n, 2))])


def generic_surface(seed=7):
    rng = np.random.default_rng(seed)
    rp = random_real_poly(rng, [(2, 2), (3, 1), (2, 1), (4, 0)])
    return PerturbedSphere(rp, 0.3 / hessian_bound(rp))


def test_sphere_det_vanishes():
    m = a3_matrix(Sphere().rho_jet(np.array([1.0, 0.0])))
    assert abs(np.linalg.det(m)) == 0
    rng = np.random.default_rng(0)
    s = Sphere()
    b = evaluate(s, s.chart_point(sample_params(rng, 1000)))
    assert np.abs(b.q).max() < 1e-9
    assert b.normalized_det.max() < 1e-9


def test_heisenberg_model_is_umbilical():
    # ρ = Im w - |z|² = (w - w̄)/(2i) - z z̄
    poly = BidegreePoly({(0, 1, 0, 0): (0, -0.5), (0, 0, 0, 1): (0, 0.5), (1, 0, 1, 0): (-1, 0)})
    s = PolynomialSurface(poly)
    assert abs(np.linalg.det(a3_matrix(s.rho_jet(np.array([0.0, 0.0]))))) == 0
    z = np.array([0.3 + 0.1j, 0.5])
    pts = np.column_stack([z, np.array([1.0, 2.0]) + 1j * np.abs(z) ** 2])
    assert np.abs(det_a3(s, pts)).max() == 0


def test_log_torus_det_frozen_value():
    d = det_a3(LogTorus(0.5), np.array([[np.exp(0.5), 1.0]]))[0]
    assert abs(d - LOG_TORUS_DET) <= 1e-9 * LOG_TORUS_DET


def test_log_torus_det_oracle():
    z, w, zb, wb = sp.symbols("z w zb wb")
    rho = (sp.log(z) + sp.log(zb)) ** 2 / 4 + (sp.log(w) + sp.log(wb)) ** 2 / 4 - sp.Rational(1, 4)
    rz, rw, rzb, rwb = (sp.diff(rho, v) for v in (z, w, zb, wb))
    rows = [rw**3, rz * rw**2, rz**2 * rw, rz**3,
            sp.diff(rz, z) * rw**2 - 2 * sp.diff(rz, w) * rz * rw + sp.diff(rw, w) * rz**2]
    at = {z: sp.exp(sp.Rational(1, 2)), zb: sp.exp(sp.Rational(1, 2)), w: 1, wb: 1}
    mat = []
    for g in rows:
        row = []
        for k in range(5):
            row.append(g.subs(at))
            if k < 4:
                g = sp.expand(rzb * sp.diff(g, wb) - rwb * sp.diff(g, zb))
        mat.append(row)
    oracle = complex(sp.Matrix(mat).det().evalf(30))
    assert abs(oracle - LOG_TORUS_DET) <= 1e-12 * LOG_TORUS_DET


def test_a3_requires_order_six_and_points_on_m():
    bp = np.array([1.0, 0.0])
    with pytest.raises(JetError):
        a3_matrix(Sphere().rho_jet(bp, 5))
    with pytest.raises(OffSurfaceError):
        a3_matrix(Sphere().rho_jet(np.array([1.1, 0.0])))


def test_levi_degeneracy_raises():
    # -ρ has J < 0 under the ρ < 0 inside convention
    s = PolynomialSurface(Sphere().poly, sign=-1.0)
    with pytest.raises(LeviDegeneracyError):
        q_invariant(s, np.array([[1.0, 0.0]]))


def test_constant_rescaling_gives_a_to_the_25():
    s = generic_surface()
    rng = np.random.default_rng(1)
    pts = s.chart_point(sample_params(rng, 60))
    base = evaluate(s, pts)
    scaled = evaluate(RescaledSurface(s, BidegreePoly({(0, 0, 0, 0): (2, 0)})), pts)
    assert np.allclose(scaled.det_a3, 2.0**25 * base.det_a3, rtol=1e-8, atol=0)
    # J scales by a³, so Q = det A₃ / J^{25/3} is unchanged
    assert np.allclose(scaled.j_on_m, 8 * base.j_on_m, rtol=1e-12)


def test_variable_rescaling_gives_a_to_the_25():
    s = generic_surface()
    rng = np.random.default_rng(2)
    pts = s.chart_point(sample_params(rng, 60))
    factor = BidegreePoly({(0, 0, 0, 0): (1, 0), (1, 0, 0, 0): (0.05, 0), (0, 0, 1, 0): (0.05, 0)})
    a = 1 + 0.1 * pts[:, 0].real
    got = evaluate(RescaledSurface(s, factor), pts).det_a3
    want = a**25 * evaluate(s, pts).det_a3
    assert np.allclose(got, want, rtol=1e-6, atol=0)


@pytest.mark.parametrize("delta", [0.7, 1.3, 2.0])
def test_weighted_dilation_rules(delta):
    """M = H⁻¹(M*) for H(z, w) = (δz, δ²w); det A₃ and |Q| transform with |det H_Z| = δ³."""
    target = generic_surface(8)
    hmap = LinearMap.diagonal_weighted(delta)
    pulled = MappedSurface(target, hmap)
    rng = np.random.default_rng(3)
    theta = sample_params(rng, 60)
    pts = pulled.chart_point(theta)
    here = evaluate(pulled, pts)
    there = evaluate(target, hmap(pts))
    assert np.allclose(np.abs(here.det_a3), delta**54 * np.abs(there.det_a3), rtol=1e-7, atol=0)
    assert np.allclose(here.j_on_m, delta**6 * there.j_on_m, rtol=1e-7)
    assert np.allclose(np.abs(here.q), delta**4 * np.abs(there.q), rtol=1e-7, atol=0)


def test_unitary_and_rotation_invariance():
    target = generic_surface(9)
    rng = np.random.default_rng(4)
    theta = sample_params(rng, 60)
    a, b = np.exp(0.3j) * np.cos(0.7), np.exp(-1.1j) * np.sin(0.7)
    unitary = LinearMap(np.array([[a, -np.conj(b)], [b, np.conj(a)]]) * np.exp(0.4j))
    for hmap in (unitary, LinearMap.rotation(0.9)):
        pulled = MappedSurface(target, hmap)
        pts = pulled.chart_point(theta)
        got = np.abs(q_invariant(pulled, pts))
        want = np.abs(q_invariant(target, hmap(pts)))
        assert np.allclose(got, want, rtol=1e-8, atol=0)


def test_j_on_sphere_and_q_definition():
    s = Ellipsoid(0.3, 0.2, 0.05)
    rng = np.random.default_rng(5)
    pts = s.chart_point(sample_params(rng, 40))
    b = evaluate(s, pts)
    assert np.allclose(b.j_on_m, strict_psc_check(s, pts))
    assert np.allclose(b.q, b.det_a3 / b.j_on_m ** (25 / 3))


def test_log_torus_q_times_zw_power_is_constant():
    # |Q|·|zw|^{4/3} is constant on the log torus: Q is invariant under the torus action
    # (z, w) ↦ (e^{iα}z, e^{iβ}w) and transforms like Q under the dilations
    # (z, w) ↦ (λz, μw), which permute the tori with the same ε up to the |det|^{4/3} weight
    for eps, const in ((0.25, 685.757), (0.5, 108.0), (1.0, 17.0089)):
        s = LogTorus(eps)
        rng = np.random.default_rng(6)
        th = rng.uniform(0, 2 * np.pi, (200, 3))
        pts = s.chart_point(th)
        vals = np.abs(q_invariant(s, pts)) * np.abs(pts[:, 0] * pts[:, 1]) ** (4 / 3)
        assert np.ptp(vals) <= 1e-7 * vals.mean()
        assert vals.mean() == pytest.approx(const, rel=1e-5)


def test_tensor_batch_normalized_det_handles_zero_scale():
    b = TensorBatch(np.zeros((2, 2)), np.array([0j, 1j]), np.ones(2), np.array([0.0, 2.0]), np.zeros(2))
    assert list(b.normalized_det) == [0.0, 0.5]


def test_thread_pool_matches_serial(monkeypatch):
    s = Ellipsoid(0.3, 0.2, 0.05)
    rng = np.random.default_rng(7)
    pts = s.chart_point(sample_params(rng, 9000))
    serial = evaluate(s, pts).det_a3
    monkeypatch.setenv("UMBILIC_THREADS", "3")
    assert np.array_equal(evaluate(s, pts).det_a3, serial)


def test_batch_shapes_are_preserved():
    s = Sphere()
    pts = s.chart_point(sample_params(np.random.default_rng(8), 12).reshape(3, 4, 3))
    b = evaluate(s, pts)
    assert b.det_a3.shape == (3, 4) and b.q.shape == (3, 4)
    assert isinstance(Jet.variable("z", pts), Jet)
