"""Compiled ray-quadrature kernel against the pure-NumPy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from vlinetomo import GridSpec
from vlinetomo import _kernels_py
from vlinetomo.kernels import HAVE_COMPILED, integrate_rays, sample_bilinear

SPEC = GridSpec(64, 64)


def _random_rays(n, seed):
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0, 2 * np.pi, n)
    psi = rng.uniform(0.05, np.pi / 2 - 0.05, n)
    ox, oy = np.cos(phi), np.sin(phi)
    ang = phi - psi + np.pi
    dx, dy = np.cos(ang), np.sin(ang)
    tmax = 2 * np.cos(psi)
    return ox, oy, dx, dy, tmax


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
def test_compiled_matches_python_on_random_rays():
    from vlinetomo import _kernels
    rng = np.random.default_rng(3)
    comps = rng.normal(size=(3, 64, 64))
    ox, oy, dx, dy, tmax = _random_rays(200, 4)
    w = rng.normal(size=(200, 3))
    args = (comps, -1.0, -1.0, SPEC.hx, SPEC.hy, ox, oy, dx, dy, tmax, w)
    for moment in (0, 1, 2):
        a = np.asarray(_kernels.integrate_rays(*args, 0.01, moment))
        b = _kernels_py.integrate_rays(*args, 0.01, moment)
        scale = np.max(np.abs(b)) or 1.0
        assert np.max(np.abs(a - b)) < 1e-12 * scale


def test_bilinear_exact_on_bilinear_function():
    xx, yy = SPEC.mesh()
    comps = (0.5 + 2 * xx - yy + 3 * xx * yy)[None]
    rng = np.random.default_rng(6)
    x = rng.uniform(-0.9, 0.9, 100)
    y = rng.uniform(-0.9, 0.9, 100)
    got = sample_bilinear(comps, SPEC, x, y)[0]
    assert np.allclose(got, 0.5 + 2 * x - y + 3 * x * y, atol=1e-12)


def test_bilinear_zero_outside_square():
    comps = np.ones((1, 64, 64))
    got = sample_bilinear(comps, SPEC, np.array([1.5, -2.0, 0.0]),
                          np.array([0.0, 0.0, 3.0]))[0]
    assert np.array_equal(got, [0.0, 0.0, 0.0])


def test_moment_weight_closed_form():
    # constant field 1 on the whole grid: integral of t^k over [0, tmax]
    # equals tmax^(k+1)/(k+1); keep rays inside the square so clipping
    # never triggers
    comps = np.ones((1, 64, 64))
    ox = np.array([-0.9, 0.0])
    oy = np.array([0.0, -0.9])
    dx = np.array([1.0, 0.0])
    dy = np.array([0.0, 1.0])
    tmax = np.array([1.7, 1.2])
    for k in (0, 1, 3):
        got = integrate_rays(comps, SPEC, ox, oy, dx, dy, tmax,
                             np.ones((2, 1)), 0.002, k)
        assert np.allclose(got, tmax ** (k + 1) / (k + 1), rtol=1e-5)


def test_env_var_forces_python_backend():
    env = dict(os.environ, VLT_FORCE_PYTHON_KERNELS="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from vlinetomo.kernels import HAVE_COMPILED; print(HAVE_COMPILED)"],
        capture_output=True, text=True, env=env)
    assert out.returncode == 0
    assert out.stdout.strip() == "False"
