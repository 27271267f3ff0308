"""Exact polynomial calculus for perturbations of the unit sphere.

Polynomials in (z, w, z̄, w̄) carry Gaussian-rational coefficients (sympy's
``QQ_I``) so that identities such as Q⁰(P) = 0 hold exactly.  Floating point
enters only when a polynomial or a Laurent coefficient is evaluated.

Conventions
-----------
* A monomial ``z^a w^b z̄^c w̄^d`` has bidegree ``(a + b, c + d)``.
* ``L₀ = -w̄ ∂_z + z̄ ∂_w`` and ``L̄₀ = -w ∂_z̄ + z ∂_w̄`` are the tangential
  fields of the unit sphere, and
  ``Q⁰(P) = L̄₀⁴( w̄² P_zz - 2 z̄ w̄ P_zw + z̄² P_ww )``.
* Blow-up chart: ``z = ζ z̃``, ``w = ζ``; on the sphere ``ζ̄ = 1/(ζ (1 + |z̃|²))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import Iterable, Sequence

import numpy as np
from sympy import ring
from sympy.polys.domains import QQ, QQ_I

from .winding import PhaseWinding, SamplingError, adaptive_winding

RING, Z, W, ZB, WB = ring("z,w,zb,wb", QQ_I)
ZT_RING, ZT, ZTB = ring("zt,ztb", QQ_I)


class BoundaryRootError(ValueError):
    """A root of the Laurent numerator sits on the circle |ζ|² = 1/(1+|z̃|²)."""


class DegenerateLaurentError(ValueError):
    """The Laurent function vanishes identically at the requested z̃."""


def _rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # decimal literal as written, e.g. 0.3 -> 3/10
        return Fraction(repr(x))
    return Fraction(str(x))


def gaussian(value):
    """Convert int, Fraction, float, complex, str or (re, im) to an exact QQ_I element."""
    if isinstance(value, type(QQ_I.one)):
        return value
    if isinstance(value, tuple):
        re, im = value
    elif isinstance(value, complex):
        re, im = value.real, value.imag
    elif isinstance(value, (Number, str)):
        re, im = value, 0
    else:
        raise TypeError(f"cannot make an exact coefficient from {value!r}")
    re, im = _rational(re), _rational(im)
    return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))


def _conj(c):
    return QQ_I(c.x, -c.y)


def _to_complex(c) -> complex:
    return complex(float(c.x), float(c.y))


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class BidegreePoly:
    """Polynomial in (z, w, z̄, w̄) with exact coefficients, viewed by bidegree.

    Built from ``{(a, b, c, d): coefficient}`` or from a sympy ring element.
    """

    __slots__ = ("poly",)

    def __init__(self, terms=None):
        if terms is None:
            poly = RING.zero
        elif isinstance(terms, type(RING.zero)):
            poly = terms
        else:
            items = terms.items() if isinstance(terms, dict) else terms
            poly = RING.zero
            for expo, c in items:
                expo = tuple(int(e) for e in expo)
                if len(expo) != 4 or min(expo) < 0:
                    raise ValueError(f"bad exponent tuple {expo}")
                poly += RING.from_dict({expo: gaussian(c)})
        object.__setattr__(self, "poly", poly)

    def __setattr__(self, name, value):
        raise AttributeError("BidegreePoly is immutable")

    # -- construction helpers --------------------------------------------------

    @classmethod
    def from_monomial_list(cls, items: Iterable[dict]) -> "BidegreePoly":
        """From records ``{a, b, c, d, re, im}`` (the TOML/JSON surface format)."""
        terms = []
        for it in items:
            expo = (it.get("a", 0), it.get("b", 0), it.get("c", 0), it.get("d", 0))
            terms.append((expo, (it.get("re", 0), it.get("im", 0))))
        return cls(terms)

    def to_monomial_list(self) -> list[dict]:
        out = []
        for (a, b, c, d), coeff in sorted(self.poly.terms()):
            re, im = _frac(coeff.x), _frac(coeff.y)
            out.append({"a": a, "b": b, "c": c, "d": d,
                        "re": float(re), "im": float(im),
                        "exact": [str(re), str(im)]})
        return out

    # -- structure ------------------------------------------------------------

    @property
    def components(self) -> dict[tuple[int, int], "BidegreePoly"]:
        buckets: dict[tuple[int, int], dict] = {}
        for expo, c in self.poly.terms():
            a, b, cc, d = expo
            buckets.setdefault((a + b, cc + d), {})[expo] = c
        return {pq: BidegreePoly(RING.from_dict(t)) for pq, t in sorted(buckets.items())}

    def component(self, p: int, q: int) -> "BidegreePoly":
        return self.components.get((p, q), BidegreePoly())

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.poly.monoms()), default=-1)

    @property
    def bidegrees(self) -> list[tuple[int, int]]:
        return list(self.components)

    def is_zero(self) -> bool:
        return not self.poly

    def conj(self) -> "BidegreePoly":
        """Complex conjugate, i.e. swap (z, w) with (z̄, w̄) and conjugate coefficients."""
        return BidegreePoly(RING.from_dict({(c, d, a, b): _conj(v) for (a, b, c, d), v in self.poly.terms()}))

    def is_real(self) -> bool:
        return self == self.conj()

    def terms(self) -> list[tuple[tuple[int, int, int, int], complex]]:
        """Float view: ``[((a, b, c, d), complex coefficient), ...]``."""
        return [(m, _to_complex(c)) for m, c in sorted(self.poly.terms())]

    def evaluate(self, z, w) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        out = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        zc, wc = np.conj(z), np.conj(w)
        for (a, b, c, d), coeff in self.terms():
            out = out + coeff * z**a * w**b * zc**c * wc**d
        return out

    def diff(self, var: str) -> "BidegreePoly":
        gen = {"z": Z, "w": W, "zb": ZB, "wb": WB}[var]
        return BidegreePoly(self.poly.diff(gen))

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        return BidegreePoly(self.poly + _poly(other))

    __radd__ = __add__

    def __sub__(self, other):
        return BidegreePoly(self.poly - _poly(other))

    def __rsub__(self, other):
        return BidegreePoly(_poly(other) - self.poly)

    def __neg__(self):
        return BidegreePoly(-self.poly)

    def __mul__(self, other):
        return BidegreePoly(self.poly * _poly(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, BidegreePoly):
            return NotImplemented
        return self.poly == other.poly

    def __hash__(self):
        return hash(tuple(sorted((m, (c.x, c.y)) for m, c in self.poly.terms())))

    def __repr__(self):
        return f"BidegreePoly({self.poly.as_expr()})"


def _poly(x):
    if isinstance(x, BidegreePoly):
        return x.poly
    return RING(gaussian(x))


def decompose(P) -> BidegreePoly:
    """Bucket a polynomial by bidegree.

    Accepts a :class:`BidegreePoly`, a term mapping, or a sympy expression in
    the symbols ``z, w, zb, wb``.
    """
    if isinstance(P, BidegreePoly):
        return P
    if isinstance(P, (dict, list, tuple)):
        return BidegreePoly(P)
    return BidegreePoly(RING.from_expr(P) if hasattr(P, "free_symbols") else P)


def ellipsoid_perturbation(A, B) -> BidegreePoly:
    """A(z² + z̄² + 2|z|²) + B(w² + w̄² + 2|w|²)."""
    A, B = gaussian(A), gaussian(B)
    return BidegreePoly(A * (Z**2 + ZB**2 + 2 * Z * ZB) + B * (W**2 + WB**2 + 2 * W * WB))


def _lbar0(p):
    return -W * p.diff(ZB) + Z * p.diff(WB)


def q0(P: BidegreePoly) -> BidegreePoly:
    """The operator P ↦ L̄₀⁴(P_{Z²}(L₀, L₀)); maps H_{p,q} into H_{p+2,q-2}."""
    p = P.poly
    hess = WB**2 * p.diff(Z).diff(Z) - 2 * ZB * WB * p.diff(Z).diff(W) + ZB**2 * p.diff(W).diff(W)
    for _ in range(4):
        hess = _lbar0(hess)
    return BidegreePoly(hess)


def is_almost_circular(P: BidegreePoly) -> bool:
    return all(abs(p - q) < 4 for p, q in P.components)


def random_real_poly(rng: np.random.Generator, buckets: Sequence[tuple[int, int]],
                     denominator: int = 8) -> BidegreePoly:
    """Random real polynomial with small Gaussian-rational coefficients.

    Only the listed bidegree buckets (closed under (p, q) -> (q, p)) are filled.
    """
    picked = set()
    terms: dict = {}
    for p, q in buckets:
        if (p, q) in picked:
            continue
        picked.update({(p, q), (q, p)})
        for a in range(p + 1):
            for c in range(q + 1):
                expo = (a, p - a, c, q - c)
                mirror = (c, q - c, a, p - a)
                if expo in terms:
                    continue
                re = Fraction(int(rng.integers(-denominator, denominator + 1)), denominator)
                im = Fraction(int(rng.integers(-denominator, denominator + 1)), denominator)
                if expo == mirror:
                    im = Fraction(0)
                terms[expo] = (re, im)
                terms[mirror] = (re, -im)
    return BidegreePoly(terms)


# -- blow-up coordinates ----------------------------------------------------------


@dataclass(frozen=True)
class ZetaLaurent:
    """R(ζ; z̃) = Σ_r b_r(z̃, z̄̃) / (1 + |z̃|²)^{s_r} · ζ^r."""

    terms: dict = field(default_factory=dict)  # r -> (ring element in zt, ztb; s_r)

    @property
    def powers(self) -> list[int]:
        return sorted(self.terms)

    def is_empty(self) -> bool:
        return not self.terms

    def coefficients(self, zt: complex) -> dict[int, complex]:
        """Numeric Laurent coefficients of R at a fixed z̃."""
        zt = complex(zt)
        damp = 1.0 + abs(zt) ** 2
        out = {}
        for r, (b, s) in self.terms.items():
            val = 0j
            for (i, j), c in b.terms():
                val += _to_complex(c) * zt**i * zt.conjugate() ** j
            out[r] = val / damp**s
        return out

    def __call__(self, zeta, zt: complex):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros_like(zeta)
        for r, c in self.coefficients(zt).items():
            out = out + c * zeta**r
        return out

    def describe(self) -> list[dict]:
        rows = []
        for r in self.powers:
            b, s = self.terms[r]
            rows.append({"r": r, "s": s, "b": str(b.as_expr())})
        return rows


def zeta_laurent(rho_prime: BidegreePoly) -> ZetaLaurent:
    """Q′ = Q⁰(ρ′) written in blow-up coordinates and collected by powers of ζ."""
    if not rho_prime.is_real():
        raise ValueError("ρ′ must be real-valued (reality symmetry violated)")
    qprime = q0(rho_prime)
    by_r: dict[int, dict[int, object]] = {}
    for (a, b, c, d), coeff in qprime.poly.terms():
        r = (a + b) - (c + d)
        s = c + d
        mono = ZT_RING.from_dict({(a, c): coeff})
        bucket = by_r.setdefault(r, {})
        bucket[s] = bucket.get(s, ZT_RING.zero) + mono
    damp = 1 + ZT * ZTB
    terms = {}
    for r, parts in by_r.items():
        s_r = max(parts)
        b_r = sum((poly * damp ** (s_r - s) for s, poly in parts.items()), ZT_RING.zero)
        if b_r:
            terms[r] = (b_r, s_r)
    return ZetaLaurent(terms)


@dataclass(frozen=True)
class WindingResult:
    winding: int
    zeros_inside: int
    pole_order: int
    phase_winding: int
    radius: float


def winding_at(R: ZetaLaurent, zt: complex, root_tol: float = 1e-9) -> WindingResult:
    """Winding of ζ ↦ R(ζ; z̃) around |ζ|² = 1/(1+|z̃|²), by the argument principle.

    Zeros of the numerator polynomial are counted from companion-matrix
    eigenvalues; the result is cross-checked against phase sampling of R on
    the circle and the two must agree exactly.
    """
    coeffs = R.coefficients(zt)
    coeffs = {r: c for r, c in coeffs.items() if c != 0}
    if not coeffs:
        raise DegenerateLaurentError(f"R vanishes identically at z̃ = {zt}")
    radius = 1.0 / np.sqrt(1.0 + abs(zt) ** 2)
    r_min, r_max = min(coeffs), max(coeffs)
    # numerator N(ζ) = ζ^{-r_min} R, highest power first for np.roots
    poly = np.array([coeffs.get(r, 0j) for r in range(r_max, r_min - 1, -1)])
    roots = np.roots(poly) if len(poly) > 1 else np.array([], dtype=complex)
    mod = np.abs(roots)
    if np.any(np.abs(mod - radius) < root_tol):
        raise BoundaryRootError(f"numerator root on the circle at z̃ = {zt}")
    zeros_inside = int(np.sum(mod < radius))
    pole_order = max(-r_min, 0)
    winding = zeros_inside + r_min

    def on_circle(t):
        return R(radius * np.exp(2j * np.pi * t), zt)

    try:
        sampled: PhaseWinding = adaptive_winding(on_circle, n=max(64, 8 * len(poly)))
    except SamplingError as exc:
        raise BoundaryRootError(f"phase sampling unstable at z̃ = {zt}: {exc}") from exc
    if sampled.winding != winding:
        raise RuntimeError(
            f"argument principle ({winding}) disagrees with phase sampling ({sampled.winding})"
        )
    return WindingResult(winding, zeros_inside, pole_order, sampled.winding, float(radius))


def default_zt_samples() -> list[complex]:
    """16 points on each of the rings |z̃| = 0.5 and |z̃| = 1.5."""
    angles = 2 * np.pi * (np.arange(16) + 0.25) / 16
    return [complex(r * np.exp(1j * a)) for r in (0.5, 1.5) for a in angles]


@dataclass
class GenericityReport:
    admissible: bool
    zt: complex | None
    winding: int | None
    windings: list = field(default_factory=list)  # (z̃, winding or None)

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "zt": None if self.zt is None else [self.zt.real, self.zt.imag],
            "winding": self.winding,
            "windings": [
                {"zt": [z.real, z.imag], "winding": k} for z, k in self.windings
            ],
        }


def genericity_scan(rho_prime: BidegreePoly, samples: Sequence[complex] | None = None) -> GenericityReport:
    """Look for a fibre circle over some z̃ on which Q′ has nonzero winding.

    Samples with a boundary root or identically vanishing R are skipped; an
    empty result flags ``rho_prime`` as possibly non-generic.
    """
    if not is_almost_circular(rho_prime):
        raise ValueError("genericity_scan expects an almost circular ρ′")
    R = zeta_laurent(rho_prime)
    samples = default_zt_samples() if samples is None else list(samples)
    record = []
    for zt in samples:
        zt = complex(zt)
        try:
            res = winding_at(R, zt)
        except (BoundaryRootError, DegenerateLaurentError):
            record.append((zt, None))
            continue
        record.append((zt, res.winding))
        if res.winding != 0:
            return GenericityReport(True, zt, res.winding, record)
    return GenericityReport(False, None, None, record)
