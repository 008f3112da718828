"""Backend selection for the ray-integration kernel.

The compiled Cython kernel is used when available; the NumPy implementation
in ``_kernels_py`` is a drop-in fallback.  Set VLT_FORCE_PYTHON_KERNELS=1 to
force the fallback (used by the benchmark and the kernel-agreement test).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .grids import GridSpec

if os.environ.get("VLT_FORCE_PYTHON_KERNELS"):
    _impl = _kernels_py
    HAVE_COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        HAVE_COMPILED = True
    except ImportError:
        _impl = _kernels_py
        HAVE_COMPILED = False


def integrate_rays(comps: np.ndarray, spec: GridSpec,
                   ox, oy, dx, dy, tmax, weights,
                   step: float, moment: int = 0) -> np.ndarray:
    """Integrate t^moment * <weights, components> along rays inside the grid."""
    comps = np.ascontiguousarray(comps, dtype=float)
    nray = np.asarray(ox).size
    # np.array(copy=True): broadcast views are read-only, the compiled
    # kernel needs writable typed memoryviews
    flat = lambda a: np.array(a, dtype=float, copy=True).reshape(-1)
    weights = np.array(np.broadcast_to(np.asarray(weights, dtype=float),
                                       (nray, comps.shape[0])),
                       dtype=float, copy=True)
    return _impl.integrate_rays(
        comps, -1.0, -1.0, spec.hx, spec.hy,
        flat(ox), flat(oy), flat(dx), flat(dy), flat(tmax),
        weights, float(step), int(moment))


def sample_bilinear(comps: np.ndarray, spec: GridSpec, x, y) -> np.ndarray:
    """Bilinear samples of (ncomp, ny, nx) arrays; 0 outside [-1,1]^2."""
    comps = np.ascontiguousarray(comps, dtype=float)
    return _kernels_py.bilinear(comps, -1.0, -1.0, spec.hx, spec.hy,
                                np.asarray(x, dtype=float),
                                np.asarray(y, dtype=float))
