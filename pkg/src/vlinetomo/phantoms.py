"""Reproducible test phantoms given as potential sets.

Every potential carries the boundary factor (1 - r^2)^(m+1), so it vanishes
at the rim together with its derivatives up to order m; this is one order
more than the decomposition requires and protects the repeated
s-integrations used in inversion.  The ``visible-only`` kind builds the
smooth factor from powers of (x + i y), which have exactly zero angular
mean, so the phantom carries no content in the harmonics that signed
branch-weight pairs cannot recover.
"""

from __future__ import annotations

import numpy as np

from .grids import GridSpec, PotentialSet, ScalarGrid

PHANTOM_KINDS = ("gaussian-bumps", "polynomial", "radial", "visible-only")


def _boundary_factor(xx, yy, m):
    r2 = xx * xx + yy * yy
    return np.where(r2 < 1.0, (1.0 - r2) ** (m + 1), 0.0)


def _smooth_part(kind: str, rng: np.random.Generator, xx, yy):
    r2 = xx * xx + yy * yy
    if kind == "gaussian-bumps":
        g = np.zeros_like(xx)
        for _ in range(3):
            cx, cy = rng.uniform(-0.35, 0.35, size=2)
            sigma = rng.uniform(0.18, 0.30)
            amp = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
            g += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma ** 2))
        return g
    if kind == "polynomial":
        c = rng.uniform(-1.0, 1.0, size=6)
        return (c[0] + c[1] * xx + c[2] * yy + c[3] * xx * yy
                + c[4] * (xx ** 2 - yy ** 2) + c[5] * r2)
    if kind == "radial":
        c = rng.uniform(-1.0, 1.0, size=3)
        return c[0] + c[1] * r2 + c[2] * r2 ** 2
    if kind == "visible-only":
        # zero angular mean by construction: combinations of Re/Im (x+iy)^q
        z = xx + 1j * yy
        g = np.zeros_like(xx)
        for q in (1, 2, 3):
            aq, bq = rng.uniform(-1.0, 1.0, size=2)
            radial = 1.0 + rng.uniform(-0.5, 0.5) * r2
            g += (aq * (z ** q).real + bq * (z ** q).imag) * radial
        return g
    raise ValueError(f"unknown phantom kind {kind!r}; "
                     f"expected one of {PHANTOM_KINDS}")


def make_phantom(kind: str, m: int, seed: int,
                 spec: GridSpec | None = None) -> PotentialSet:
    """Potential set chi_0..chi_m with the (1-r^2)^(m+1) boundary factor."""
    if kind not in PHANTOM_KINDS:
        raise ValueError(f"unknown phantom kind {kind!r}; "
                         f"expected one of {PHANTOM_KINDS}")
    if spec is None:
        spec = GridSpec(256, 256)
    rng = np.random.default_rng(seed)
    xx, yy = spec.mesh()
    bnd = _boundary_factor(xx, yy, m)
    pots = [ScalarGrid(spec, bnd * _smooth_part(kind, rng, xx, yy))
            for _ in range(m + 1)]
    return PotentialSet(m, tuple(pots), boundary_order=m + 1)
