"""Acceptance criteria, one test per criterion, at the stated tolerances and budgets."""
import time
from fractions import Fraction

import numpy as np
import pytest

from oracle import det_oracle
from umbilic.index import (
    ParameterDisk,
    curve_index,
    intersection_index,
    stokes_check,
    umbilic_orbits,
)
from umbilic.locus import (
    UMBILIC_RTOL,
    NoZeroFoundError,
    _gauss_newton,
    q_at,
    refine_zero,
    scan,
    trace_curve,
)
from umbilic.perturb import (
    BidegreePoly,
    default_zt_samples,
    ellipsoid_perturbation,
    genericity_scan,
    q0,
    random_real_poly,
    winding_at,
    zeta_laurent,
)
from umbilic.surfaces import (
    Ellipsoid,
    LinearMap,
    LogTorus,
    MappedSurface,
    PerturbedSphere,
    RescaledSurface,
    Sphere,
    hessian_bound,
)
from umbilic.tensor import det_a3, evaluate, q_invariant


def sphere_params(rng, n):
    return np.column_stack([rng.uniform(0.05, np.pi / 2 - 0.05, n), rng.uniform(0, 2 * np.pi, (n, 2))])


def normalized(rp):
    """ρ′ scaled by a power of two so that its Hessian bound is at most 1."""
    return rp * Fraction(1, 2 ** int(np.ceil(np.log2(hessian_bound(rp)))))


def test_criterion_01_sphere_nullity():
    start = time.perf_counter()
    s = Sphere()
    b = evaluate(s, s.chart_point(sphere_params(np.random.default_rng(1), 1000)))
    elapsed = time.perf_counter() - start
    assert np.abs(b.q).max() < 1e-9
    assert b.normalized_det.max() < 1e-9
    assert elapsed < 5


def test_criterion_02_log_torus_has_no_umbilical_points():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    for eps in (0.25, 0.5, 1.0):
        s = LogTorus(eps)
        sc = scan(s, 32)
        assert sc.min_abs_det > 0, eps
        assert sc.lipschitz_report()["slack"] > 0, eps
        for seed in rng.uniform(0, 2 * np.pi, (20, 3)):
            with pytest.raises(NoZeroFoundError):
                refine_zero(s, seed, scale=sc.median_abs_q)
    assert time.perf_counter() - start < 120


def test_criterion_03_invariance_suite():
    rng = np.random.default_rng(3)
    rp = normalized(random_real_poly(rng, [(2, 2), (3, 1), (2, 1), (4, 0)]))
    target = PerturbedSphere(rp, 0.25)
    theta = sphere_params(rng, 50)

    # a²⁵ rescaling rule with a = 1 + 0.1 Re z
    pts = target.chart_point(theta)
    factor = BidegreePoly({(0, 0, 0, 0): 1, (1, 0, 0, 0): "1/20", (0, 0, 1, 0): "1/20"})
    a = 1 + 0.1 * pts[:, 0].real
    got = det_a3(RescaledSurface(target, factor), pts)
    assert np.allclose(got, a**25 * det_a3(target, pts), rtol=1e-6, atol=0)

    # |Q| = |det H_Z|^{4/3} |Q*| under (z, w) ↦ (δz, δ²w)
    for delta in (0.7, 1.3, 2.0):
        hmap = LinearMap.diagonal_weighted(delta)
        pulled = MappedSurface(target, hmap)
        p = pulled.chart_point(theta)
        want = np.abs(delta**3) ** (4 / 3) * np.abs(q_invariant(target, hmap(p)))
        assert np.allclose(np.abs(q_invariant(pulled, p)), want, rtol=1e-6, atol=0)

    # unitary maps and e^{it} rotations
    u, v = np.exp(0.3j) * np.cos(0.7), np.exp(-1.1j) * np.sin(0.7)
    unitary = LinearMap(np.array([[u, -np.conj(v)], [v, np.conj(u)]]))
    for hmap in (unitary, LinearMap.rotation(0.9), LinearMap(np.exp(0.4j) * np.eye(2))):
        pulled = MappedSurface(target, hmap)
        p = pulled.chart_point(theta)
        want = np.abs(q_invariant(target, hmap(p)))
        assert np.allclose(np.abs(q_invariant(pulled, p)), want, rtol=1e-8, atol=0)


def test_criterion_04_q0_algebra():
    assert q0(ellipsoid_perturbation(0.3, 0.2)).is_zero()
    rng = np.random.default_rng(4)
    for p in range(6):
        for q in range(6):
            if min(p, q) < 2:
                assert q0(random_real_poly(rng, [(p, q)])).is_zero()
    for _ in range(200):
        p, q = (int(x) for x in rng.integers(2, 6, 2))
        a, c = int(rng.integers(0, p + 1)), int(rng.integers(0, q + 1))
        mono = BidegreePoly({(a, p - a, c, q - c): (int(rng.integers(1, 9)), int(rng.integers(-8, 9)))})
        out = q0(mono)
        assert out.is_zero() or out.bidegrees == [(p + 2, q - 2)]
    P = random_real_poly(rng, [(2, 2), (3, 2)])
    R = random_real_poly(rng, [(3, 3), (4, 2)])
    alpha, beta = BidegreePoly({(0, 0, 0, 0): ("5/3", "-1/2")}), BidegreePoly({(0, 0, 0, 0): "7/4"})
    assert q0(alpha * P + beta * R) == alpha * q0(P) + beta * q0(R)


def test_criterion_05_oracle_equivalence():
    rng = np.random.default_rng(5)
    for _ in range(5):
        rp = random_real_poly(rng, [(1, 1), (2, 1), (2, 2), (3, 1), (4, 0), (2, 0)])
        eps = 2.0 ** -int(np.ceil(np.log2(4 * hessian_bound(rp))))
        s = PerturbedSphere(rp, eps)
        pts = s.chart_point(sphere_params(rng, 100))
        got = det_a3(s, pts)
        want = det_oracle(s.poly, pts)
        assert np.all(np.abs(got - want) <= 1e-9 * np.abs(want))


def _slopes(rp, theta):
    eps = np.array([1e-2, 5e-3, 2.5e-3])
    vals = []
    for e in eps:
        s = PerturbedSphere(rp, e)
        vals.append(np.abs(det_a3(s, s.chart_point(theta))))
    return np.polyfit(np.log(eps), np.log(np.array(vals)), 1)[0]


def _sphere(theta):
    return np.cos(theta[:, 0]) * np.exp(1j * theta[:, 1]), np.sin(theta[:, 0]) * np.exp(1j * theta[:, 2])


def test_criterion_06_linear_term_structure():
    rng = np.random.default_rng(6)
    # Q′ ≠ 0: generic ρ′ at random sphere parameters
    rp = normalized(random_real_poly(rng, [(2, 2), (3, 1), (2, 1)]))
    theta = sphere_params(rng, 12)
    assert np.abs(q0(rp).evaluate(*_sphere(theta))).min() > 1e-6
    slope = _slopes(rp, theta)
    assert np.all((slope >= 0.9) & (slope <= 1.1)), slope

    # Q′ = 0 everywhere: the ellipsoidal ρ′
    slope = _slopes(ellipsoid_perturbation(0.3, 0.2), theta)
    assert np.all(slope >= 1.8), slope

    # Q′ = 0 on isolated orbits: a (2,2) ρ′ whose Q′ is a quartic form in (z, w)
    rp = normalized(random_real_poly(rng, [(2, 2)]))
    coeffs = np.zeros(5, dtype=complex)
    for (a, _, _, _), c in q0(rp).terms():
        coeffs[a] += c
    zeros = []
    for r in np.roots(coeffs[::-1]):
        for t3 in rng.uniform(0, 2 * np.pi, 3):
            zeros.append([np.arctan2(1.0, abs(r)), t3 + np.angle(r), t3])
    zeros = np.array(zeros)
    scale = np.abs(q0(rp).evaluate(*_sphere(theta))).max()
    assert np.abs(q0(rp).evaluate(*_sphere(zeros))).max() < 1e-12 * scale
    slope = _slopes(rp, zeros)
    assert len(slope) >= 10 and np.all(slope >= 1.8), slope


def test_criterion_07_ellipsoid_contains_umbilical_curves():
    start = time.perf_counter()
    c = np.pi / 2 + 0.3
    disk = ParameterDisk(np.array([0.68, c, c]), np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), 0.1, 2.2)
    for eps in (0.01, 0.02):
        s = Ellipsoid(0.3, 0.2, eps)
        sc = scan(s, 24)
        scale = sc.median_abs_q
        theta = refine_zero(s, sc.min_location, scale=scale)
        assert abs(q_at(s, theta)) < UMBILIC_RTOL * scale
        curve = trace_curve(s, theta, step=0.05, scale=scale)
        assert curve.closed and curve.verify(s)["max_abs_q"] < UMBILIC_RTOL * scale
        ix = curve_index(s, disk.boundary(), tol=UMBILIC_RTOL * scale).index
        assert ix != 0
    assert time.perf_counter() - start < 180


def test_criterion_08_winding_dual_computation():
    rng = np.random.default_rng(8)
    generic = 0
    for _ in range(100):
        rp = random_real_poly(rng, [(3, 3), (4, 2), (2, 2), (3, 1), (2, 1), (1, 1)])
        R = zeta_laurent(rp)
        for zt in default_zt_samples()[:4]:
            res = winding_at(R, zt)
            assert res.winding == res.phase_winding
        rep = genericity_scan(rp)
        generic += bool(rep.admissible and rep.winding >= 1)
    assert generic >= 95


def test_criterion_09_index_arithmetic():
    s = Ellipsoid(0.3, 0.2, 0.02)
    tol = UMBILIC_RTOL * scan(s, 16).median_abs_q
    c = np.pi / 2 + 0.3
    disk = ParameterDisk(np.array([0.68, c, c]), np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), 0.1, 2.2)
    normal = np.array([0.0, 1.0, 0.0])
    points = []
    for shift in (-np.pi / 2, np.pi / 2):
        seed = np.array([0.68, c, c + shift])
        points.append(_gauss_newton(s, seed, tol, 60, anchor=seed, normal=normal)[0])
    local = [intersection_index(s, disk, p, tol=tol) for p in points]
    assert stokes_check(s, disk, points, local_indices=local, tol=tol) == 0
    rep = curve_index(s, disk.boundary(), tol=tol)
    back = curve_index(s, lambda t: disk.boundary()(1 - np.asarray(t)), tol=tol)
    assert back.index == -rep.index == rep.reversed().index
    for ix in local + [rep.index]:
        assert isinstance(ix, Fraction) and (2 * ix).denominator == 1


def test_criterion_10_poincare_hopf_spot_check():
    """Non-exhaustive: sums indices over the orbits a dense scan finds, fibre oriented by e^{it}."""
    rp = random_real_poly(np.random.default_rng(0), [(2, 2)])
    assert genericity_scan(rp).admissible
    s = PerturbedSphere(rp, 1e-3)
    orbits = umbilic_orbits(s, n=(16, 12, 48), candidates=40)
    assert sum((o.index for o in orbits), Fraction(0)) == 2
