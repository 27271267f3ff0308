"""Winding numbers of sampled closed curves in ℂ \\ {0} by phase unwrapping."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

STEP_BOUND = np.pi / 2
MAX_SAMPLES = 2**16


class CurveMeetsLocusError(ValueError):
    """A sample of the field vanished (within tolerance) on the curve."""


class SamplingError(RuntimeError):
    """Phase unwrapping did not stabilize before the sample cap."""


@dataclass(frozen=True)
class PhaseWinding:
    winding: int
    samples: np.ndarray
    max_phase_step: float


def phase_steps(values) -> np.ndarray:
    """Principal-value phase increments around a closed sample loop."""
    values = np.asarray(values, dtype=complex)
    return np.angle(np.roll(values, -1) / values)


def winding_of_samples(values) -> tuple[int, float]:
    """Winding and largest phase step for samples of a closed loop.

    The loop closes from the last sample back to the first, so the first
    point must not be repeated at the end.
    """
    steps = phase_steps(values)
    total = steps.sum() / (2 * np.pi)
    winding = int(np.rint(total))
    if abs(total - winding) > 1e-6:
        raise SamplingError(f"phase total {total} is not an integer")
    return winding, float(np.abs(steps).max())


def adaptive_winding(
    field: Callable[[np.ndarray], np.ndarray],
    n: int = 64,
    tol: float = 0.0,
    step_bound: float = STEP_BOUND,
    max_samples: int = MAX_SAMPLES,
) -> PhaseWinding:
    """Winding of ``field(t)``, ``t ∈ [0, 1)``, doubling ``n`` until steps are small.

    The result is accepted once the largest phase increment is below
    ``step_bound`` and the winding agrees with the previous resolution.
    """
    previous = None
    while True:
        t = np.arange(n) / n
        values = np.asarray(field(t), dtype=complex)
        small = np.abs(values) <= tol
        if np.any(small):
            k = int(np.flatnonzero(small)[0])
            raise CurveMeetsLocusError(
                f"|field| = {abs(values[k]):.3e} <= tol {tol:.3e} at t = {t[k]:.6f}"
            )
        winding, max_step = winding_of_samples(values)
        if max_step < step_bound:
            if previous == winding:
                return PhaseWinding(winding, values, max_step)
            previous = winding
        else:
            previous = None
        n *= 2
        if n > max_samples:
            raise SamplingError(
                f"phase unwrapping not stable at {max_samples} samples (max step {max_step:.3f})"
            )
