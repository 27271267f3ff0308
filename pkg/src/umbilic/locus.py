"""Scanning |Q| over chart grids, refining umbilical points, tracing umbilical curves."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .surfaces import Surface
from .tensor import LeviDegeneracyError, TensorSample, evaluate

CSV_COLUMNS = ["theta1", "theta2", "theta3", "re_z", "im_z", "re_w", "im_w",
               "re_q", "im_q", "abs_q", "j"]
#: relative tolerance for "umbilical": |Q| < UMBILIC_RTOL * median |Q| over a coarse scan
UMBILIC_RTOL = 1e-8
FD_STEP = 1e-6
#: factor applied to observed edge slopes in the Lipschitz slack report
LIPSCHITZ_SAFETY = 2.0
#: step halvings before Gauss–Newton declares stagnation
MAX_HALVINGS = 20


class NoZeroFoundError(RuntimeError):
    """Gauss–Newton did not reach |Q| below tolerance."""


class DegenerateLocusError(RuntimeError):
    """Rank-deficient Jacobian of (Re Q, Im Q): the locus is not a smooth curve here."""


class NotUmbilicalError(ValueError):
    """Start point of a trace is not umbilical within tolerance."""


def grid(s: Surface, n) -> np.ndarray:
    """Uniform periodic parameter grid of shape (n₁, n₂, n₃, 3), endpoints excluded."""
    n = (n, n, n) if np.isscalar(n) else tuple(n)
    if len(n) != 3 or min(n) < 4:
        raise ValueError(f"grid needs three sizes >= 4, got {n}")
    axes = [lo + (hi - lo) * np.arange(k) / k for (lo, hi), k in zip(s.chart_domain, n)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass
class ScanResult:
    shape: tuple[int, int, int]
    params: np.ndarray  # (n1, n2, n3, 3)
    points: np.ndarray  # (n1, n2, n3, 2)
    det_a3: np.ndarray
    j_on_m: np.ndarray
    q: np.ndarray
    domain: tuple = ((0.0, np.pi / 2), (0.0, 2 * np.pi), (0.0, 2 * np.pi))

    @property
    def abs_q(self) -> np.ndarray:
        return np.abs(self.q)

    @property
    def min_abs_q(self) -> float:
        return float(self.abs_q.min())

    @property
    def argmin(self) -> tuple[int, int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmin(self.abs_q), self.shape))

    @property
    def min_location(self) -> np.ndarray:
        return self.params[self.argmin]

    @property
    def median_abs_q(self) -> float:
        return float(np.median(self.abs_q))

    @property
    def min_abs_det(self) -> float:
        return float(np.abs(self.det_a3).min())

    def __len__(self) -> int:
        return int(np.prod(self.shape))

    @property
    def samples(self) -> list[TensorSample]:
        out = []
        for idx in np.ndindex(*self.shape):
            th = self.params[idx]
            pt = self.points[idx]
            out.append(TensorSample((float(th[0]), float(th[1]), float(th[2])),
                                    (complex(pt[0]), complex(pt[1])),
                                    complex(self.det_a3[idx]), float(self.j_on_m[idx]),
                                    complex(self.q[idx])))
        return out

    def local_minima(self, count: int = 10) -> list[np.ndarray]:
        """Parameters of grid points that are minima of |Q| over their 26 periodic neighbours."""
        a = self.abs_q
        is_min = np.ones(a.shape, dtype=bool)
        for shift in np.ndindex(3, 3, 3):
            s = tuple(x - 1 for x in shift)
            if s == (0, 0, 0):
                continue
            is_min &= a <= np.roll(a, s, axis=(0, 1, 2))
        idx = np.argwhere(is_min)
        order = np.argsort(a[is_min])
        return [self.params[tuple(i)] for i in idx[order][:count]]

    def lipschitz_report(self, safety: float = LIPSCHITZ_SAFETY) -> dict:
        """Dense-grid lower bound on |Q| from finite-difference slope estimates.

        Every point of a grid cell lies within half the cell diagonal h of a
        corner, so |Q| >= min_corner |Q| - L_cell·h/2 on the cell if L_cell
        bounds the slope there.  L_cell is ``safety`` times the largest slope
        along the cell's 12 edges.  ``slack`` is the worst cell bound;
        ``global_slack`` uses one constant for the whole grid and is far more
        pessimistic when |Q| varies a lot.  Positive slack is strong numerical
        evidence, not a certificate, that |Q| has no zero on the scanned region.
        """
        a = self.abs_q
        spacing = np.array([self.params[1, 0, 0, 0] - self.params[0, 0, 0, 0],
                            self.params[0, 1, 0, 1] - self.params[0, 0, 0, 1],
                            self.params[0, 0, 1, 2] - self.params[0, 0, 0, 2]])
        diag = float(np.linalg.norm(spacing))
        edge = [np.abs(np.roll(a, -1, axis=k) - a) / spacing[k] for k in range(3)]
        corners = [(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)]

        def over_cell(arr, offsets):
            return [np.roll(arr, tuple(-o for o in off), axis=(0, 1, 2)) for off in offsets]

        corner_min = np.min(over_cell(a, corners), axis=0)
        cell_lip = np.zeros_like(a)
        for k in range(3):
            offs = [c for c in corners if c[k] == 0]
            cell_lip = np.maximum(cell_lip, np.max(over_cell(edge[k], offs), axis=0))
        bound = corner_min - safety * cell_lip * diag / 2
        # cells wrapping across a non-periodic chart axis are not real cells
        valid = np.ones(a.shape, dtype=bool)
        for k, (lo, hi) in enumerate(self.domain):
            if not np.isclose(hi - lo, 2 * np.pi):
                idx = [slice(None)] * 3
                idx[k] = -1
                valid[tuple(idx)] = False
        lip = float(max(e.max() for e in edge))
        return {"min_abs_q": float(a.min()), "lipschitz": lip, "cell_diagonal": diag,
                "safety": safety, "slack": float(bound[valid].min()),
                "global_slack": float(a.min() - lip * diag / 2)}

    def to_dict(self, include_samples: bool = True) -> dict:
        out = {"grid": list(self.shape), "min_abs_q": self.min_abs_q,
               "min_location": [float(x) for x in self.min_location],
               "median_abs_q": self.median_abs_q, "min_abs_det": self.min_abs_det}
        if include_samples:
            out["samples"] = [dict(zip(CSV_COLUMNS, r.row())) for r in self.samples]
        return out

    def to_csv(self) -> str:
        return rows_to_csv(r.row() for r in self.samples)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([repr(float(x)) for x in r])
    return buf.getvalue()


def scan(s: Surface, n) -> ScanResult:
    params = grid(s, n)
    points = s.chart_point(params)
    batch = evaluate(s, points)
    try:
        q = batch.q
    except LeviDegeneracyError as exc:
        bad = params.reshape(-1, 3)[exc.index]
        raise LeviDegeneracyError(f"{exc} at parameters {bad.tolist()}", exc.index) from None
    return ScanResult(params.shape[:3], params, points, batch.det_a3, batch.j_on_m, q,
                      tuple(s.chart_domain))


def q_at(s: Surface, theta) -> np.ndarray:
    return evaluate(s, s.chart_point(theta)).q


def median_scale(s: Surface, n: int = 8) -> float:
    """Typical |Q| on M from a coarse scan; the reference for relative tolerances."""
    return scan(s, n).median_abs_q


def jacobian(s: Surface, theta, h: float = FD_STEP) -> tuple[complex, np.ndarray]:
    """Q at θ and the 2×3 real Jacobian of (Re Q, Im Q) by central differences."""
    theta = np.asarray(theta, dtype=float)
    stencil = [theta]
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        stencil += [theta + e, theta - e]
    q = q_at(s, np.array(stencil))
    jac = np.empty((2, 3))
    for k in range(3):
        dq = (q[1 + 2 * k] - q[2 + 2 * k]) / (2 * h)
        jac[:, k] = dq.real, dq.imag
    return complex(q[0]), jac


def _gauss_newton(s, theta, tol, max_steps, anchor=None, normal=None):
    """Minimum-norm Gauss–Newton on (Re Q, Im Q); optional plane constraint."""
    theta = np.asarray(theta, dtype=float).copy()
    for step in range(max_steps + 1):
        q, jac = jacobian(s, theta)
        if abs(q) < tol:
            return theta, q, step
        if step == max_steps:
            break
        f = np.array([q.real, q.imag])
        if normal is not None:
            jac = np.vstack([jac, normal])
            f = np.append(f, normal @ (theta - anchor))
        delta = -np.linalg.lstsq(jac, f, rcond=None)[0]
        # damped: accept the first halving that decreases |Q|; none means a
        # positive local minimum of |Q| (or of |Q| on the constraint plane)
        lams = 0.5 ** np.arange(MAX_HALVINGS)
        cands = theta + lams[:, None] * delta
        better = np.flatnonzero(np.abs(q_at(s, cands)) < abs(q))
        if len(better):
            cand = cands[better[0]]
        else:
            raise NoZeroFoundError(
                f"no zero found: |Q| stagnated at {abs(q):.3e} after {step} steps (tol {tol:.3e})"
            )
        theta = cand
    raise NoZeroFoundError(
        f"no zero found: |Q| = {abs(q):.3e} after {max_steps} steps (tol {tol:.3e})"
    )


def refine_zero(s: Surface, seed, scale: float | None = None, rtol: float = UMBILIC_RTOL,
                max_steps: int = 100) -> np.ndarray:
    """Gauss–Newton from ``seed`` to a chart parameter with |Q| < rtol·scale.

    ``scale`` defaults to the median |Q| of a coarse scan.
    """
    scale = median_scale(s) if scale is None else scale
    theta, _, _ = _gauss_newton(s, seed, rtol * scale, max_steps)
    return theta


@dataclass
class UmbilicCurve:
    params: np.ndarray  # (k, 3) chart parameters of the vertices
    vertices: np.ndarray  # (k, 2) points of M
    closed: bool
    step: float
    tol: float
    tangents: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return len(self.vertices)

    def verify(self, s: Surface) -> dict:
        """Re-evaluate ρ and Q at every vertex, independently of the tracer."""
        pts = s.chart_point(self.params)
        batch = evaluate(s, pts)
        spacing = np.linalg.norm(np.diff(self.params, axis=0), axis=1)
        return {"max_abs_rho": float(np.abs(s.rho(pts)).max()),
                "max_abs_q": float(np.abs(batch.q).max()),
                "max_param_spacing": float(spacing.max()) if len(spacing) else 0.0}

    def to_dict(self) -> dict:
        return {"closed": self.closed, "step": self.step, "tol": self.tol,
                "vertices": [{"theta": [float(x) for x in th],
                              "z": [float(p[0].real), float(p[0].imag)],
                              "w": [float(p[1].real), float(p[1].imag)]}
                             for th, p in zip(self.params, self.vertices)]}

    def to_csv(self, s: Surface) -> str:
        batch = evaluate(s, self.vertices)
        q = batch.q
        rows = []
        for th, p, qq, j in zip(self.params, self.vertices, q, batch.j_on_m):
            rows.append([th[0], th[1], th[2], p[0].real, p[0].imag, p[1].real, p[1].imag,
                         qq.real, qq.imag, abs(qq), j])
        return rows_to_csv(rows)


def null_direction(jac: np.ndarray, rank_rtol: float = 1e-6) -> np.ndarray:
    """Unit kernel vector of a 2×3 Jacobian; raises if the rank is below 2."""
    _, sv, vt = np.linalg.svd(jac)
    if sv[0] == 0 or sv[1] < rank_rtol * sv[0]:
        raise DegenerateLocusError(f"Jacobian rank < 2 (singular values {sv})")
    t = np.cross(jac[0], jac[1])
    return t / np.linalg.norm(t)


def trace_curve(s: Surface, start, step: float = 0.05, scale: float | None = None,
                rtol: float = UMBILIC_RTOL, max_vertices: int = 2000) -> UmbilicCurve:
    """Predictor–corrector continuation of the umbilical curve through ``start``.

    The predictor moves ``step`` along the kernel of the Jacobian of
    (Re Q, Im Q); the corrector is Gauss–Newton restricted to the hyperplane
    through the predicted point normal to the tangent.  The curve is closed
    once a vertex comes back within ``step/2`` of the start point in ℂ².
    """
    scale = median_scale(s) if scale is None else scale
    tol = rtol * scale
    theta0 = np.asarray(start, dtype=float)
    q0, jac0 = jacobian(s, theta0)
    if abs(q0) >= tol:
        raise NotUmbilicalError(f"|Q| = {abs(q0):.3e} at start is not below tol {tol:.3e}")
    t0 = null_direction(jac0)
    p0 = s.chart_point(theta0)
    params, tangents = [theta0], [t0]
    theta, t = theta0, t0
    closed = False
    while len(params) < max_vertices:
        h = step
        for _ in range(8):
            pred = theta + h * t
            try:
                new, _, _ = _gauss_newton(s, pred, tol, 30, anchor=pred, normal=t)
            except NoZeroFoundError:
                h /= 2
                continue
            if np.linalg.norm(new - theta) <= 1.5 * step:
                break
            h /= 2
        else:
            raise NoZeroFoundError("corrector failed after step-size reductions")
        _, jac = jacobian(s, new)
        t_new = null_direction(jac)
        if t_new @ t < 0:
            t_new = -t_new
        params.append(new)
        tangents.append(t_new)
        theta, t = new, t_new
        if len(params) > 3 and np.linalg.norm(s.chart_point(new) - p0) < step / 2:
            closed = True
            break
    params = np.array(params)
    return UmbilicCurve(params, s.chart_point(params), closed, step, tol, np.array(tangents))
