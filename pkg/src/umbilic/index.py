"""Umbilical indices of closed curves, local indices, and the Stokes additivity check.

Orientation conventions: a curve is oriented by increasing parameter.  The
transverse circle used for a local index at a point with oriented tangent t is
``θ(s) = θ_p + r (cos s · e₁ + sin s · e₂)`` with (e₁, e₂, t) a right-handed
orthonormal frame of chart-parameter space.  Indices for other conventions
differ by a sign.

The catalog charts (θ₁, θ₂, θ₃) ↦ (cos θ₁ e^{iθ₂}, sin θ₁ e^{iθ₃}) reverse the
orientation M inherits as the boundary of the enclosed domain, so "right-handed
in chart parameters" is the opposite of the boundary orientation.  Orienting the
tangent by ∇Re Q × ∇Im Q would make every simple zero have index -1/2, so
tangents should come from outside Q: a disk frame or the circle action.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .locus import UMBILIC_RTOL, NotUmbilicalError, jacobian, median_scale, null_direction, q_at
from .surfaces import Surface
from .winding import (
    MAX_SAMPLES,
    STEP_BOUND,
    CurveMeetsLocusError,
    SamplingError,
    adaptive_winding,
    winding_of_samples,
)

__all__ = [
    "CurveMeetsLocusError", "SamplingError", "UnstableIndexError", "IndexReport",
    "curve_index", "local_index", "stokes_check", "ParameterDisk", "circle_in_plane",
    "intersection_index", "umbilic_orbits", "OrbitIndex", "FIBRE_DIRECTION",
    "winding_of_samples",
]


class UnstableIndexError(RuntimeError):
    """Transverse-circle indices disagree across successive radii."""


@dataclass
class IndexReport:
    curve: np.ndarray  # parameter samples of the curve, shape (n, 3)
    q_samples: np.ndarray
    winding: int
    index: Fraction
    max_phase_step: float

    def to_dict(self) -> dict:
        return {
            "winding": self.winding,
            "index": [self.index.numerator, self.index.denominator],
            "max_phase_step": self.max_phase_step,
            "samples": len(self.q_samples),
        }

    def reversed(self) -> "IndexReport":
        return IndexReport(self.curve[::-1], self.q_samples[::-1], -self.winding,
                           -self.index, self.max_phase_step)


def _tol(s: Surface, tol):
    return UMBILIC_RTOL * median_scale(s) if tol is None else tol


def curve_index(
    s: Surface | None,
    curve: Callable[[np.ndarray], np.ndarray],
    n: int = 64,
    tol: float | None = None,
    field: Callable[[np.ndarray], np.ndarray] | None = None,
) -> IndexReport:
    """Umbilical index -winding(Q)/2 along a closed curve of chart parameters.

    ``curve`` maps t ∈ [0, 1) to parameter triples.  ``field`` replaces Q (for
    det A₃ or synthetic fields); by default it is Q on ``s``.
    """
    if field is None:
        tol = _tol(s, tol)

        def field(theta):
            return q_at(s, theta)
    else:
        tol = 0.0 if tol is None else tol

    samples = {}

    def along(t):
        theta = curve(t)
        samples["theta"] = theta
        return field(theta)

    res = adaptive_winding(along, n=n, tol=tol, step_bound=STEP_BOUND, max_samples=MAX_SAMPLES)
    return IndexReport(np.asarray(samples["theta"]), res.samples, res.winding,
                       Fraction(-res.winding, 2), res.max_phase_step)


def _frame(tangent) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.asarray(tangent, dtype=float)
    t = t / np.linalg.norm(t)
    helper = np.eye(3)[np.argmin(np.abs(t))]
    e1 = helper - (helper @ t) * t
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(t, e1)
    return e1, e2, t


def circle_in_plane(center, e1, e2, r1: float, r2: float | None = None):
    """t ↦ center + r1 cos(2πt) e1 + r2 sin(2πt) e2."""
    center, e1, e2 = (np.asarray(v, dtype=float) for v in (center, e1, e2))
    r2 = r1 if r2 is None else r2

    def curve(t):
        a = 2 * np.pi * np.asarray(t)[..., None]
        return center + r1 * np.cos(a) * e1 + r2 * np.sin(a) * e2

    return curve


def local_index(
    s: Surface,
    p,
    tangent=None,
    radius: float = 0.02,
    tol: float | None = None,
    field=None,
    max_halvings: int = 6,
) -> Fraction:
    """Index of a small circle transverse to the umbilical curve at parameter ``p``.

    The radius is halved until two successive radii give the same index; three
    pairwise different answers in a row raise :class:`UnstableIndexError`.
    """
    p = np.asarray(p, dtype=float)
    if field is None:
        tol = _tol(s, tol)
        q0 = complex(q_at(s, p))
        point_tol = tol
    else:
        q0 = complex(np.asarray(field(p[None]))[0])
        tol = 0.0 if tol is None else tol
        point_tol = max(tol, 1e-12)
    if abs(q0) >= point_tol:
        raise NotUmbilicalError(f"|Q| = {abs(q0):.3e} at p is not below tol {point_tol:.3e}")
    if tangent is None:
        if field is not None:
            raise ValueError("a tangent is required with a synthetic field")
        _, jac = jacobian(s, p)
        tangent = null_direction(jac)
    e1, e2, _ = _frame(tangent)
    history = []
    r = radius
    for _ in range(max_halvings + 1):
        ix = curve_index(s, circle_in_plane(p, e1, e2, r), tol=tol, field=field).index
        if history and history[-1] == ix:
            return ix
        history.append(ix)
        if len(history) >= 3 and len(set(history[-3:])) == 3:
            break
        r /= 2
    raise UnstableIndexError(f"local index unstable across radii: {history}")


@dataclass(frozen=True)
class ParameterDisk:
    """Elliptic disk ``center + u a e₁ + v b e₂`` (u² + v² <= 1) in parameter space.

    Its orientation is that of (e₁, e₂); the boundary runs counterclockwise.
    """

    center: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    a: float
    b: float

    def boundary(self):
        return circle_in_plane(self.center, self.e1, self.e2, self.a, self.b)

    def small_circle(self, point, r: float):
        return circle_in_plane(point, self.e1, self.e2, r)

    def contains(self, point) -> bool:
        d = np.asarray(point, dtype=float) - self.center
        u, v = d @ self.e1 / self.a, d @ self.e2 / self.b
        return bool(u * u + v * v < 1)

    def project(self, point) -> np.ndarray:
        """Orthogonal projection of a parameter point onto the disk's plane."""
        d = np.asarray(point, dtype=float) - self.center
        return self.center + (d @ self.e1) * self.e1 + (d @ self.e2) * self.e2


def intersection_index(s: Surface, disk: ParameterDisk, point, radius: float = 0.02,
                       tol: float | None = None, max_halvings: int = 6) -> Fraction:
    """Umbilical intersection index of the disk at a crossing point, radius-stabilized."""
    history = []
    r = radius
    for _ in range(max_halvings + 1):
        ix = curve_index(s, disk.small_circle(point, r), tol=tol).index
        if history and history[-1] == ix:
            return ix
        history.append(ix)
        r /= 2
    raise UnstableIndexError(f"intersection index unstable across radii: {history}")


def stokes_check(
    s: Surface,
    disk: ParameterDisk,
    interior_umbilics: Sequence,
    local_indices: Sequence[Fraction] | None = None,
    tol: float | None = None,
) -> Fraction:
    """I(∂Σ) minus the sum of intersection indices at the listed interior points.

    Zero when the list covers every crossing of the umbilical locus with Σ.
    """
    tol = _tol(s, tol)
    boundary = curve_index(s, disk.boundary(), tol=tol).index
    if local_indices is None:
        local_indices = [intersection_index(s, disk, p, tol=tol) for p in interior_umbilics]
    return boundary - sum(local_indices, Fraction(0))


#: U(1)-orbit direction t ↦ e^{it}(z, w) in chart parameters (θ₁, θ₂, θ₃)
FIBRE_DIRECTION = np.array([0.0, 1.0, 1.0])


@dataclass
class OrbitIndex:
    ratio: complex  # z/w, constant along the orbit
    params: np.ndarray
    index: Fraction


def umbilic_orbits(s: Surface, n=(16, 12, 48), candidates: int = 60,
                   scale: float | None = None, merge_tol: float = 1e-5) -> list[OrbitIndex]:
    """Umbilical U(1)-orbits of a circle-invariant surface found from a dense scan.

    Grid minima of |Q| are refined; zeros with the same z/w ratio lie on one
    orbit and are merged.  Each orbit gets the local index with the fibre
    oriented along the circle action.  The search is not exhaustive: orbits
    missed by the scan are not reported.
    """
    from .locus import NoZeroFoundError, refine_zero, scan

    sc = scan(s, n)
    scale = sc.median_abs_q if scale is None else scale
    tol = UMBILIC_RTOL * scale
    found: list[OrbitIndex] = []
    for seed in sc.local_minima(candidates):
        try:
            theta = refine_zero(s, seed, scale=scale)
        except NoZeroFoundError:
            continue
        z, w = s.chart_point(theta)
        ratio = complex(z / w)
        if any(abs(ratio - o.ratio) <= merge_tol * max(1.0, abs(ratio)) for o in found):
            continue
        ix = local_index(s, theta, tangent=FIBRE_DIRECTION, tol=tol)
        found.append(OrbitIndex(ratio, theta, ix))
    return found
