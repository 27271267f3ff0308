"""The matrix A₃, its determinant, and the normalized umbilical invariant Q.

With L = -ρ_w ∂_z + ρ_z ∂_w and L̄ = -ρ_w̄ ∂_z̄ + ρ_z̄ ∂_w̄, row i of A₃ is
(f_i, L̄ f_i, ..., L̄⁴ f_i) for

    f = (ρ_w³, ρ_z ρ_w², ρ_z² ρ_w, ρ_z³, ρ_{Z²}(L, L)),

where ρ_{Z²}(L, L) = ρ_zz ρ_w² - 2 ρ_zw ρ_z ρ_w + ρ_ww ρ_z².

Q = det A₃ / J^{25/3} with J the 3×3 Fefferman determinant restricted to M.
On M this J equals the negative of the 2×2 determinant J̃ built from L̄, so
J is the positive normalization for strictly pseudoconvex M with ρ < 0 inside.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .jets import MAX_ORDER, Jet, JetError
from .surfaces import Surface, fefferman_j

CHUNK = 4096
ON_M_TOL = 1e-8


class LeviDegeneracyError(ValueError):
    """J <= 0 at a point: not strictly pseudoconvex under the ρ < 0 inside convention."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class OffSurfaceError(ValueError):
    """A3 evaluated at a point with |ρ| above tolerance."""


def _lbar(g: Jet, rzb: Jet, rwb: Jet) -> Jet:
    k = g.order - 1
    return rzb.truncate(k) * g.d("wb") - rwb.truncate(k) * g.d("zb")


def a3_matrix(rho: Jet, check_on_m: bool = True) -> np.ndarray:
    """Assemble A₃ from an order-6 jet of ρ; returns shape ``(*batch, 5, 5)``."""
    if rho.order < MAX_ORDER:
        raise JetError(f"A3 needs a jet of order {MAX_ORDER}, got {rho.order}")
    if check_on_m and np.any(np.abs(rho.value) > ON_M_TOL):
        raise OffSurfaceError(f"|ρ| = {np.abs(rho.value).max():.3e} exceeds {ON_M_TOL}")
    rho = rho.truncate(MAX_ORDER)
    dz, dw = rho.d("z"), rho.d("w")
    rz, rw = dz.truncate(4), dw.truncate(4)
    rzb, rwb = rho.d("zb").truncate(3), rho.d("wb").truncate(3)
    rzz, rzw, rww = dz.d("z"), dz.d("w"), dw.d("w")
    rw2, rz2, rzrw = rw * rw, rz * rz, rz * rw
    rows = [
        rw2 * rw,
        rz * rw2,
        rz2 * rw,
        rz2 * rz,
        rzz * rw2 - 2 * (rzw * rzrw) + rww * rz2,
    ]
    out = np.empty(rho.batch_shape + (5, 5), dtype=complex)
    for i, g in enumerate(rows):
        out[..., i, 0] = g.value
        for k in range(1, 5):
            g = _lbar(g, rzb, rwb)
            out[..., i, k] = g.value
    return out


def row_norm_product(m: np.ndarray) -> np.ndarray:
    """Π_i ||row_i||, Hadamard's bound on |det|, used as a conditioning scale."""
    return np.prod(np.linalg.norm(m, axis=-1), axis=-1)


@dataclass(frozen=True)
class TensorBatch:
    """Per-point tensor data over a batch of points on M."""

    points: np.ndarray
    det_a3: np.ndarray
    j_on_m: np.ndarray
    scale: np.ndarray
    rho: np.ndarray

    @property
    def q(self) -> np.ndarray:
        j = self.j_on_m
        if np.any(j <= 0):
            bad = int(np.flatnonzero(np.ravel(j <= 0))[0])
            raise LeviDegeneracyError(f"J = {np.ravel(j)[bad]:.3e} <= 0", index=bad)
        return self.det_a3 / j ** (25.0 / 3.0)

    @property
    def normalized_det(self) -> np.ndarray:
        """|det A₃| over the row-norm product; 0 where every row vanishes."""
        num = np.abs(self.det_a3)
        return np.divide(num, self.scale, out=np.zeros_like(num), where=self.scale > 0)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("UMBILIC_THREADS", "1")))
    except ValueError:
        return 1


def _evaluate_flat(s: Surface, pts: np.ndarray, check_on_m: bool):
    jet = s.rho_jet(pts, MAX_ORDER)
    m = a3_matrix(jet, check_on_m=check_on_m)
    return np.linalg.det(m), fefferman_j(jet.truncate(2)), row_norm_product(m), jet.value.real


def evaluate(s: Surface, points, check_on_m: bool = True) -> TensorBatch:
    """det A₃, J and scale at every point (any batch shape ``(*batch, 2)``)."""
    points = np.asarray(points, dtype=complex)
    batch = points.shape[:-1]
    flat = points.reshape(-1, 2)
    chunks = [flat[k:k + CHUNK] for k in range(0, len(flat), CHUNK)] or [flat]
    workers = min(_threads(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _evaluate_flat(s, c, check_on_m), chunks))
    else:
        parts = [_evaluate_flat(s, c, check_on_m) for c in chunks]
    det, j, scale, rho = (np.concatenate([p[k] for p in parts]).reshape(batch) for k in range(4))
    return TensorBatch(points, det, j, scale, rho)


def det_a3(s: Surface, p) -> np.ndarray:
    return evaluate(s, p).det_a3


def q_invariant(s: Surface, p) -> np.ndarray:
    return evaluate(s, p).q


@dataclass(frozen=True)
class TensorSample:
    params: tuple[float, float, float]
    point: tuple[complex, complex]
    det_a3: complex
    j_on_m: float
    q: complex

    def row(self) -> list[float]:
        t1, t2, t3 = self.params
        z, w = self.point
        return [t1, t2, t3, z.real, z.imag, w.real, w.imag,
                self.q.real, self.q.imag, abs(self.q), self.j_on_m]
