"""Numerical toolkit for the umbilical tensor of real hypersurfaces in ℂ².

Modules: :mod:`~umbilic.jets` (truncated Taylor jets), :mod:`~umbilic.surfaces`
(catalog of defining functions), :mod:`~umbilic.tensor` (A₃, det A₃ and Q),
:mod:`~umbilic.locus` (scans, refinement, curve tracing), :mod:`~umbilic.index`
(winding indices), :mod:`~umbilic.perturb` (sphere-perturbation algebra) and
:mod:`~umbilic.cli`.
"""

__version__ = "0.1.0"

from .jets import Jet, compose, jet_arith, wirtinger  # noqa: E402
from .surfaces import (  # noqa: E402
    Ellipsoid,
    LogTorus,
    PerturbedSphere,
    Sphere,
    load_surface,
    make_surface,
)
from .tensor import a3_matrix, det_a3, evaluate, q_invariant  # noqa: E402
from .locus import refine_zero, scan, trace_curve  # noqa: E402
from .index import curve_index, local_index, stokes_check  # noqa: E402
from .perturb import BidegreePoly, genericity_scan, q0  # noqa: E402

__all__ = [
    "__version__", "Jet", "compose", "jet_arith", "wirtinger",
    "Sphere", "PerturbedSphere", "Ellipsoid", "LogTorus", "make_surface", "load_surface",
    "a3_matrix", "det_a3", "evaluate", "q_invariant",
    "scan", "refine_zero", "trace_curve",
    "curve_index", "local_index", "stokes_check",
    "BidegreePoly", "q0", "genericity_scan",
]
