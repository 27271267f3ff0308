"""Catalog of defining functions ρ with closed-form jets and charts onto M = {ρ = 0}.

Every surface uses the orientation ρ < 0 on the bounded side, under which the
Fefferman determinant J is positive at strictly pseudoconvex points.

Charts take an angle triple θ = (θ₁, θ₂, θ₃).  Sphere-like surfaces use the
Hopf direction ``(cos θ₁ e^{iθ₂}, sin θ₁ e^{iθ₃})`` pushed radially onto M;
the log-torus uses ``(e^{ε cos θ₁ + iθ₂}, e^{ε sin θ₁ + iθ₃})``, which lies on
M exactly and covers it once.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .jets import MAX_ORDER, Jet, _position, compose, holomorphic_jet, n_terms
from .perturb import BidegreePoly, ellipsoid_perturbation, gaussian

TWO_PI = 2 * np.pi
NEWTON_MAXITER = 50


class SurfaceError(ValueError):
    """Invalid surface parameters."""


class ChartError(RuntimeError):
    """Radial Newton projection onto M did not converge."""


class DomainError(ValueError):
    """Point outside the domain of the defining function."""


def fefferman_j(jet: Jet) -> np.ndarray:
    """J(ρ) = -det [[ρ, ρ_z̄, ρ_w̄], [ρ_z, ρ_zz̄, ρ_zw̄], [ρ_w, ρ_wz̄, ρ_ww̄]] (real part)."""
    d = jet.derivative
    m = np.stack(
        [
            np.stack([d((0, 0, 0, 0)), d((0, 0, 1, 0)), d((0, 0, 0, 1))], axis=-1),
            np.stack([d((1, 0, 0, 0)), d((1, 0, 1, 0)), d((1, 0, 0, 1))], axis=-1),
            np.stack([d((0, 1, 0, 0)), d((0, 1, 1, 0)), d((0, 1, 0, 1))], axis=-1),
        ],
        axis=-2,
    )
    return -np.linalg.det(m).real


def hopf_direction(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    t1, t2, t3 = theta[..., 0], theta[..., 1], theta[..., 2]
    return np.stack([np.cos(t1) * np.exp(1j * t2), np.sin(t1) * np.exp(1j * t3)], axis=-1)


class Surface:
    """Base class: a real defining function with jets and a chart."""

    kind = "surface"
    #: parameter ranges of the chart; periodic in every slot
    chart_domain = ((0.0, np.pi / 2), (0.0, TWO_PI), (0.0, TWO_PI))

    def rho_jet(self, points, order: int = MAX_ORDER) -> Jet:
        raise NotImplementedError

    def rho(self, points) -> np.ndarray:
        return self.rho_jet(points, 0).value.real

    def chart_point(self, theta) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params()}

    def strict_psc_check(self, points) -> np.ndarray:
        return strict_psc_check(self, points)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items() if k != "terms")
        return f"{type(self).__name__}({args})"


class PolynomialSurface(Surface):
    """ρ = sign · P for a real polynomial P in (z, w, z̄, w̄).

    Charts are radial projections of Hopf directions, so this suits
    star-shaped surfaces around the origin.
    """

    kind = "polynomial"

    def __init__(self, poly: BidegreePoly, sign: float = 1.0):
        if not poly.is_real():
            raise SurfaceError("defining polynomial must be real-valued")
        self.poly = poly
        self.sign = float(sign)
        self._terms = [(m, self.sign * c) for m, c in poly.terms()]
        # t-degree coefficients for radial Newton: ρ(t u) = Σ_k t^k c_k(u)
        self._by_degree: dict[int, list] = {}
        for m, c in self._terms:
            self._by_degree.setdefault(sum(m), []).append((m, c))

    def params(self) -> dict:
        return {"sign": self.sign, "terms": self.poly.to_monomial_list()}

    def rho_jet(self, points, order: int = MAX_ORDER) -> Jet:
        return Jet.from_polynomial(self._terms, points, order)

    def rho(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        z, w = points[..., 0], points[..., 1]
        zc, wc = np.conj(z), np.conj(w)
        out = np.zeros(z.shape, dtype=complex)
        for (a, b, c, d), coeff in self._terms:
            out = out + coeff * z**a * w**b * zc**c * wc**d
        return out.real

    def _radial_coeffs(self, u: np.ndarray) -> dict[int, np.ndarray]:
        z, w = u[..., 0], u[..., 1]
        zc, wc = np.conj(z), np.conj(w)
        out = {}
        for k, terms in self._by_degree.items():
            acc = np.zeros(z.shape, dtype=complex)
            for (a, b, c, d), coeff in terms:
                acc = acc + coeff * z**a * w**b * zc**c * wc**d
            out[k] = acc.real
        return out

    def radial_project(self, u) -> np.ndarray:
        """Point t·u on M with t > 0 found by Newton from t = 1."""
        u = np.asarray(u, dtype=complex)
        cs = self._radial_coeffs(u)
        t = np.ones(u.shape[:-1])
        for _ in range(NEWTON_MAXITER):
            val = sum(c * t**k for k, c in cs.items())
            der = sum(k * c * t ** (k - 1) for k, c in cs.items() if k)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = val / der
            t = t - step
            if np.all(np.abs(step) <= 1e-15 * np.abs(t)) or np.all(np.abs(val) <= 1e-15):
                break
        else:
            raise ChartError("radial Newton did not converge in 50 iterations")
        if np.any(~np.isfinite(t)) or np.any(t <= 0):
            raise ChartError("radial Newton left the positive ray")
        return t[..., None] * u

    def chart_point(self, theta) -> np.ndarray:
        return self.radial_project(hopf_direction(theta))


def _sphere_poly() -> BidegreePoly:
    return BidegreePoly({(1, 0, 1, 0): 1, (0, 1, 0, 1): 1, (0, 0, 0, 0): -1})


def hessian_bound(poly: BidegreePoly) -> float:
    """Crude bound on all second Wirtinger derivatives over the closed unit bidisc."""
    return float(sum(abs(c) * sum(m) * (sum(m) - 1) for m, c in poly.terms()))


class Sphere(PolynomialSurface):
    kind = "sphere"

    def __init__(self):
        super().__init__(_sphere_poly())

    def params(self) -> dict:
        return {}

    def chart_point(self, theta) -> np.ndarray:
        return hopf_direction(theta)


class PerturbedSphere(PolynomialSurface):
    """ρ = |z|² + |w|² - 1 + ε ρ′ with polynomial ρ′ and no higher-order tail."""

    kind = "perturbed_sphere"
    EPS_GUARD = 0.5

    def __init__(self, rho_prime: BidegreePoly, eps: float):
        eps = float(eps)
        if not eps > 0:
            raise SurfaceError("ε must be positive")
        if not rho_prime.is_real():
            raise SurfaceError("ρ′ must be real-valued")
        if eps * hessian_bound(rho_prime) >= self.EPS_GUARD:
            raise SurfaceError(
                f"ε·(Hessian bound of ρ′) = {eps * hessian_bound(rho_prime):.3g} >= "
                f"{self.EPS_GUARD}: strict pseudoconvexity not guaranteed"
            )
        self.rho_prime = rho_prime
        self.eps = eps
        super().__init__(_sphere_poly() + rho_prime * gaussian(eps))

    def params(self) -> dict:
        return {"eps": self.eps, "terms": self.rho_prime.to_monomial_list()}


class Ellipsoid(PerturbedSphere):
    """The real ellipsoid |z|² + |w|² + ε(A(z + z̄)² + B(w + w̄)²) = 1."""

    kind = "ellipsoid"

    def __init__(self, A: float, B: float, eps: float):
        if A < 0 or B < 0 or A * B == 0:
            raise SurfaceError("ellipsoid needs A, B >= 0 and AB != 0")
        self.A, self.B = float(A), float(B)
        super().__init__(ellipsoid_perturbation(A, B), eps)

    def params(self) -> dict:
        return {"A": self.A, "B": self.B, "eps": self.eps}


def _log_abs_square_coeffs(x0: np.ndarray, order: int):
    """Taylor coefficients of (log|x|)² at x0 in (dx, dx̄): dict (a, c) -> array."""
    c0 = np.log(np.abs(x0))
    # log|x0 + dx| = c0 + Σ u_n dx^n + conj
    u = {n: (-1.0) ** (n + 1) / (2 * n * x0**n) for n in range(1, order + 1)}
    ub = {n: np.conj(v) for n, v in u.items()}
    out = {(0, 0): c0**2 + 0j}
    for a in range(1, order + 1):
        sq = sum(u[i] * u[a - i] for i in range(1, a))
        out[(a, 0)] = 2 * c0 * u[a] + sq
        out[(0, a)] = np.conj(out[(a, 0)])
    for a in range(1, order):
        for c in range(1, order - a + 1):
            out[(a, c)] = 2 * u[a] * ub[c]
    return out


class LogTorus(Surface):
    """ρ = (log|z|)² + (log|w|)² - ε², boundary of a flat-torus Grauert tube."""

    kind = "log_torus"
    chart_domain = ((0.0, TWO_PI), (0.0, TWO_PI), (0.0, TWO_PI))

    def __init__(self, eps: float):
        eps = float(eps)
        if not eps > 0:
            raise SurfaceError("ε must be positive")
        self.eps = eps

    def params(self) -> dict:
        return {"eps": self.eps}

    def rho_jet(self, points, order: int = MAX_ORDER) -> Jet:
        points = np.asarray(points, dtype=complex)
        z, w = points[..., 0], points[..., 1]
        if np.any(z == 0) or np.any(w == 0):
            raise DomainError("log-torus defining function needs z != 0 and w != 0")
        pos = _position()
        coeffs = np.zeros((n_terms(order),) + z.shape, dtype=complex)
        for (a, c), v in _log_abs_square_coeffs(z, order).items():
            coeffs[pos[(a, 0, c, 0)]] += v
        for (b, d), v in _log_abs_square_coeffs(w, order).items():
            coeffs[pos[(0, b, 0, d)]] += v
        coeffs[0] -= self.eps**2
        return Jet(coeffs, order, points)

    def rho(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        return np.log(np.abs(points[..., 0])) ** 2 + np.log(np.abs(points[..., 1])) ** 2 - self.eps**2

    def chart_point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        t1, t2, t3 = theta[..., 0], theta[..., 1], theta[..., 2]
        return np.stack(
            [np.exp(self.eps * np.cos(t1) + 1j * t2), np.exp(self.eps * np.sin(t1) + 1j * t3)],
            axis=-1,
        )


# -- coordinate changes and rescalings ---------------------------------------------


class HolomorphicMap:
    """A biholomorphism H with jets, inverse, and complex Jacobian determinant."""

    def __call__(self, points) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, points) -> np.ndarray:
        raise NotImplementedError

    def component_jets(self, points, order: int = MAX_ORDER) -> tuple[Jet, Jet]:
        raise NotImplementedError

    def jacobian_det(self, points) -> np.ndarray:
        raise NotImplementedError


class LinearMap(HolomorphicMap):
    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=complex)
        self._inv = np.linalg.inv(self.matrix)

    @classmethod
    def diagonal_weighted(cls, delta: float) -> "LinearMap":
        """(z, w) ↦ (δ z, δ² w)."""
        return cls(np.diag([delta, delta**2]))

    @classmethod
    def rotation(cls, t: float) -> "LinearMap":
        """(z, w) ↦ (e^{it} z, w)."""
        return cls(np.diag([np.exp(1j * t), 1.0]))

    def __call__(self, points):
        return np.asarray(points, dtype=complex) @ self.matrix.T

    def inverse(self, points):
        return np.asarray(points, dtype=complex) @ self._inv.T

    def component_jets(self, points, order: int = MAX_ORDER):
        points = np.asarray(points, dtype=complex)
        image = self(points)
        out = []
        for k in range(2):
            derivs = {(0, 0): image[..., k], (1, 0): self.matrix[k, 0], (0, 1): self.matrix[k, 1]}
            derivs = {key: np.broadcast_to(v, points.shape[:-1]) for key, v in derivs.items()}
            out.append(holomorphic_jet(derivs, points, order))
        return tuple(out)

    def jacobian_det(self, points):
        points = np.asarray(points)
        return np.full(points.shape[:-1], np.linalg.det(self.matrix), dtype=complex)


class ExpMap(HolomorphicMap):
    """(ζ, ξ) ↦ (e^{iζ}, e^{iξ})."""

    def __call__(self, points):
        return np.exp(1j * np.asarray(points, dtype=complex))

    def inverse(self, points):
        return -1j * np.log(np.asarray(points, dtype=complex))

    def component_jets(self, points, order: int = MAX_ORDER):
        points = np.asarray(points, dtype=complex)
        out = []
        for k in range(2):
            e = np.exp(1j * points[..., k])
            derivs = {}
            for n in range(order + 1):
                key = (n, 0) if k == 0 else (0, n)
                derivs[key] = (1j) ** n * e
            out.append(holomorphic_jet(derivs, points, order))
        return tuple(out)

    def jacobian_det(self, points):
        points = np.asarray(points, dtype=complex)
        return -np.exp(1j * (points[..., 0] + points[..., 1]))


class MappedSurface(Surface):
    """The pull-back ρ = ρ*∘H of a surface given in the target coordinates Z* = H(Z)."""

    kind = "mapped"

    def __init__(self, base: Surface, hmap: HolomorphicMap):
        self.base = base
        self.hmap = hmap
        self.chart_domain = base.chart_domain

    def params(self) -> dict:
        return {"base": self.base.to_dict(), "map": type(self.hmap).__name__}

    def rho_jet(self, points, order: int = MAX_ORDER) -> Jet:
        points = np.asarray(points, dtype=complex)
        f = self.base.rho_jet(self.hmap(points), order)
        return compose(f, self.hmap.component_jets(points, order))

    def rho(self, points):
        return self.base.rho(self.hmap(points))

    def chart_point(self, theta):
        return self.hmap.inverse(self.base.chart_point(theta))


class RescaledSurface(Surface):
    """ρ̃ = a·ρ for a real polynomial factor a that is nonzero near M."""

    kind = "rescaled"

    def __init__(self, base: Surface, factor: BidegreePoly):
        if not factor.is_real():
            raise SurfaceError("rescaling factor must be real")
        self.base = base
        self.factor = factor
        self.chart_domain = base.chart_domain

    def params(self) -> dict:
        return {"base": self.base.to_dict(), "factor": self.factor.to_monomial_list()}

    def rho_jet(self, points, order: int = MAX_ORDER) -> Jet:
        a = Jet.from_polynomial(self.factor.terms(), points, order)
        return a * self.base.rho_jet(points, order)

    def rho(self, points):
        return self.factor.evaluate(np.asarray(points)[..., 0], np.asarray(points)[..., 1]).real * self.base.rho(points)

    def chart_point(self, theta):
        return self.base.chart_point(theta)


# -- module-level operations ----------------------------------------------------------


def rho_jet(s: Surface, p, order: int = MAX_ORDER) -> Jet:
    return s.rho_jet(p, order)


def chart_point(s: Surface, theta) -> np.ndarray:
    return s.chart_point(theta)


def strict_psc_check(s: Surface, p) -> np.ndarray:
    """Fefferman determinant J at points of M; positive means strictly pseudoconvex."""
    jet = s.rho_jet(p, 2)
    if np.any(np.abs(jet.value) > 1e-8):
        raise DomainError("strict_psc_check expects points on M (|ρ| <= 1e-8)")
    return fefferman_j(jet)


# -- construction from names and files ---------------------------------------------------

BUILTIN = ("sphere", "perturbed_sphere", "ellipsoid", "log_torus")


def make_surface(kind: str, **params) -> Surface:
    """Build a catalog surface by name."""
    if kind == "sphere":
        return Sphere()
    if kind == "ellipsoid":
        return Ellipsoid(params["A"], params["B"], params["eps"])
    if kind == "log_torus":
        return LogTorus(params["eps"])
    if kind == "perturbed_sphere":
        poly = params["rho_prime"]
        if not isinstance(poly, BidegreePoly):
            poly = BidegreePoly.from_monomial_list(poly)
        return PerturbedSphere(poly, params["eps"])
    raise SurfaceError(f"unknown surface kind {kind!r}; choose from {', '.join(BUILTIN)}")


def _load_mapping(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return json.loads(text)
    import tomli

    return tomli.loads(text)


def load_poly(path) -> BidegreePoly:
    """Read a monomial list ``terms = [{a, b, c, d, re, im}, ...]`` from TOML or JSON."""
    data = _load_mapping(Path(path))
    if "terms" not in data:
        raise SurfaceError(f"{path}: missing 'terms' list")
    poly = BidegreePoly.from_monomial_list(data["terms"])
    if not poly.is_real():
        raise SurfaceError(f"{path}: polynomial violates reality symmetry")
    return poly


def load_surface(path) -> Surface:
    """Read a surface description ``kind = ...`` plus parameters from TOML or JSON."""
    path = Path(path)
    data = _load_mapping(path)
    kind = data.get("kind")
    if kind is None:
        raise SurfaceError(f"{path}: missing 'kind'")
    params = {k: v for k, v in data.items() if k != "kind"}
    if kind == "perturbed_sphere":
        if "terms" not in params:
            raise SurfaceError(f"{path}: perturbed_sphere needs 'terms'")
        poly = BidegreePoly.from_monomial_list(params.pop("terms"))
        if not poly.is_real():
            raise SurfaceError(f"{path}: ρ′ violates reality symmetry")
        params["rho_prime"] = poly
    try:
        return make_surface(kind, **params)
    except KeyError as exc:
        raise SurfaceError(f"{path}: missing parameter {exc}") from None
