"""Grid containers and V-line geometry invariants."""

import math

import numpy as np
import pytest

from vlinetomo import (DirectionPair, GridSpec, PotentialSet, ScalarGrid,
                       SymmetricTensorField)


def test_gridspec_sampling():
    spec = GridSpec(17, 33)
    assert spec.hx == pytest.approx(2.0 / 16)
    assert spec.hy == pytest.approx(2.0 / 32)
    assert spec.x[0] == -1.0 and spec.x[-1] == 1.0
    assert spec.y[0] == -1.0 and spec.y[-1] == 1.0
    # sample (i, j) maps to x = -1 + i hx, y = -1 + j hy
    assert spec.x[5] == pytest.approx(-1.0 + 5 * spec.hx)


def test_gridspec_rejects_tiny_grids():
    with pytest.raises(ValueError):
        GridSpec(8, 64)
    with pytest.raises(ValueError):
        GridSpec(64, 15)


def test_scalar_grid_validation():
    spec = GridSpec(16, 16)
    with pytest.raises(ValueError):
        ScalarGrid(spec, np.zeros((4, 4)))
    bad = np.zeros((16, 16))
    bad[3, 3] = np.nan
    with pytest.raises(ValueError):
        ScalarGrid(spec, bad)


def test_from_function_clips_outside_disk():
    spec = GridSpec(64, 64)
    g = ScalarGrid.from_function(spec, lambda x, y: np.ones_like(x))
    assert g.values[0, 0] == 0.0        # corner, r > 1
    assert g.values[32, 32] == 1.0      # centre


def test_tensor_field_arithmetic():
    spec = GridSpec(16, 16)
    f = SymmetricTensorField(1, spec, np.ones((2, 16, 16)))
    g = 2.0 * f - f
    assert np.allclose(g.components, 1.0)
    with pytest.raises(ValueError):
        SymmetricTensorField(1, spec, np.ones((3, 16, 16)))
    with pytest.raises(ValueError):
        SymmetricTensorField(9, spec, np.ones((10, 16, 16)))


def test_potential_set_count():
    spec = GridSpec(16, 16)
    chi = ScalarGrid(spec, np.zeros((16, 16)))
    with pytest.raises(ValueError):
        PotentialSet(2, (chi, chi))
    assert PotentialSet(1, (chi, chi)).spec == spec


@pytest.mark.parametrize("phi", [0.0, 0.7, 2.1, 5.5])
@pytest.mark.parametrize("psi", [0.1, math.pi / 4, 1.4])
def test_direction_pair_geometry(phi, psi):
    d = DirectionPair(phi, psi)
    u, v = np.array(d.u), np.array(d.v)
    assert np.hypot(*u) == pytest.approx(1.0)
    assert np.hypot(*v) == pytest.approx(1.0)
    # each ray is orthogonal to its offset direction
    xi_m = np.array([math.cos(d.xi_minus), math.sin(d.xi_minus)])
    xi_p = np.array([math.cos(d.xi_plus), math.sin(d.xi_plus)])
    assert abs(u @ xi_m) < 1e-12
    assert abs(v @ xi_p) < 1e-12
    # distance from the origin to each ray equals sin(psi)
    vtx = np.array(d.vertex)
    for ray in (u, v):
        dist = abs(vtx[0] * ray[1] - vtx[1] * ray[0])
        assert dist == pytest.approx(math.sin(psi), abs=1e-12)
    assert d.offset == pytest.approx(math.sin(psi))
    # branches exit the unit disk at parameter 2 cos(psi)
    for ray in (u, v):
        exit_pt = vtx + d.chord_length * ray
        assert np.hypot(*exit_pt) == pytest.approx(1.0, abs=1e-12)


def test_direction_pair_rejects_bad_psi():
    with pytest.raises(ValueError):
        DirectionPair(0.0, 0.0)
    with pytest.raises(ValueError):
        DirectionPair(0.0, math.pi / 2)
