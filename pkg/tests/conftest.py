"""Shared fixtures and helpers for the test suite.

Unit tests run at reduced grids for speed; tests/test_acceptance.py runs the
full-scale acceptance gate (256x256 grid, 360x180 sinograms).
"""

import numpy as np
import pytest

from vlinetomo import GridSpec, ScalarGrid, VGridSpec

try:
    from hypothesis import settings

    settings.register_profile("suite", deadline=None, max_examples=25)
    settings.load_profile("suite")
except ImportError:  # hypothesis tests are skipped without the package
    pass


@pytest.fixture(scope="session")
def spec128():
    return GridSpec(128, 128)


@pytest.fixture(scope="session")
def spec96():
    return GridSpec(96, 96)


@pytest.fixture(scope="session")
def vg_small():
    """Reduced V-sinogram grid; keeps forward transforms around a second."""
    return VGridSpec(120, 60, 0.01, 0.99)


@pytest.fixture(scope="session")
def vg_desk():
    """Selftest-scale sinogram grid."""
    return VGridSpec(180, 90, 0.01, 0.99)


def bump(spec: GridSpec, power: int = 2) -> ScalarGrid:
    """Radial (1 - r^2)^power bump, exactly supported in the disk."""
    return ScalarGrid.from_function(
        spec, lambda x, y: np.maximum(1.0 - x * x - y * y, 0.0) ** power)


def interior_mask(spec: GridSpec, r_max: float = 0.85) -> np.ndarray:
    xx, yy = spec.mesh()
    return xx * xx + yy * yy < r_max * r_max


def rel_l2_interior(a: np.ndarray, b: np.ndarray, spec: GridSpec,
                    r_max: float = 0.85) -> float:
    """Relative L2 restricted to r < r_max (away from one-sided stencils)."""
    msk = interior_mask(spec, r_max)
    return float(np.linalg.norm((a - b)[msk]) / np.linalg.norm(b[msk]))


def exact_radon_table(s, n_list, prof, n_quad=400):
    """Noise-free Radon harmonics (R h)_n(s) of a field with radial profiles
    h_|n|(r) = prof(|n|, r), by Gauss-Legendre chord quadrature:
    (R h)_n(s) = int h_n(r) ((s + i t)/r)^n dt over the chord t in [-L, L].
    Machine-accurate for smooth profiles; serves as an oracle independent of
    both the ray-traced forward transform and the inversion formulas."""
    from vlinetomo import HarmonicTable

    s = np.asarray(s, dtype=float)
    x, w = np.polynomial.legendre.leggauss(n_quad)
    L = np.sqrt(1.0 - s ** 2)
    t = L[:, None] * x[None, :]
    wt = L[:, None] * w[None, :]
    r = np.sqrt(s[:, None] ** 2 + t ** 2)
    base = (s[:, None] + 1j * t) / np.where(r > 0, r, 1.0)
    nm = max(abs(n) for n in n_list)
    coeffs = np.zeros((2 * nm + 1, len(s)), dtype=complex)
    for n in n_list:
        coeffs[n + nm] = np.sum(wt * prof(abs(n), r) * base ** n, axis=1)
    return HarmonicTable(nm, s, coeffs)
