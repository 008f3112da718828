"""Pure-NumPy ray integration, the fallback for the compiled kernel.

Semantics are identical to ``vlinetomo._kernels``: composite trapezoid along
each ray with bilinear interpolation of the field components, zero outside
[-1,1]^2, optional t^k moment weight (t measured from the ray origin).
"""

from __future__ import annotations

import numpy as np


def bilinear(comps: np.ndarray, x0: float, y0: float, hx: float, hy: float,
             x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample (ncomp, ny, nx) arrays at points (x, y); 0 outside the grid.

    Returns shape (ncomp,) + x.shape.
    """
    ncomp, ny, nx = comps.shape
    fx = (x - x0) / hx
    fy = (y - y0) / hy
    inside = (fx >= 0.0) & (fx <= nx - 1) & (fy >= 0.0) & (fy <= ny - 1)
    fx = np.clip(fx, 0.0, nx - 1)
    fy = np.clip(fy, 0.0, ny - 1)
    i0 = np.minimum(fx.astype(np.intp), nx - 2)
    j0 = np.minimum(fy.astype(np.intp), ny - 2)
    wx = fx - i0
    wy = fy - j0
    v00 = comps[:, j0, i0]
    v01 = comps[:, j0, i0 + 1]
    v10 = comps[:, j0 + 1, i0]
    v11 = comps[:, j0 + 1, i0 + 1]
    vals = ((1 - wy) * ((1 - wx) * v00 + wx * v01)
            + wy * ((1 - wx) * v10 + wx * v11))
    return vals * inside


def integrate_rays(comps: np.ndarray, x0: float, y0: float, hx: float, hy: float,
                   ox: np.ndarray, oy: np.ndarray, dx: np.ndarray, dy: np.ndarray,
                   tmax: np.ndarray, weights: np.ndarray, step: float,
                   moment: int = 0) -> np.ndarray:
    """Integrate t^moment * sum_p weights[r, p] f_p(o_r + t d_r) over [0, tmax_r].

    Rays sharing a node count are processed as one vectorized batch.
    """
    comps = np.ascontiguousarray(comps, dtype=float)
    ox, oy, dx, dy, tmax = (np.asarray(a, dtype=float).ravel()
                            for a in (ox, oy, dx, dy, tmax))
    weights = np.asarray(weights, dtype=float).reshape(len(ox), comps.shape[0])
    out = np.zeros(len(ox))
    nt_all = np.maximum(np.ceil(tmax / step).astype(np.intp) + 1, 2)
    for nt in np.unique(nt_all):
        sel = np.flatnonzero(nt_all == nt)
        dt = tmax[sel] / (nt - 1)
        t = dt[:, None] * np.arange(nt)
        px = ox[sel, None] + t * dx[sel, None]
        py = oy[sel, None] + t * dy[sel, None]
        vals = bilinear(comps, x0, y0, hx, hy, px, py)  # (ncomp, nsel, nt)
        integrand = np.einsum("rc,crt->rt", weights[sel], vals)
        if moment:
            integrand = integrand * t ** moment
        acc = integrand.sum(axis=1) - 0.5 * (integrand[:, 0] + integrand[:, -1])
        out[sel] = acc * dt
    return out
