"""Inversion building blocks: weight tables, harmonic division, s-integration,
weighted round trips and single-potential recovery."""

import math

import numpy as np
import pytest

from vlinetomo import (DegenerateDataError, GridSpec, ModeMask, VGridSpec,
                       WeightPair, decomposition_weights, integrate_in_s,
                       invert_weighted_vline, make_phantom, moment_weights,
                       potential_term, recover_potential, relative_l2,
                       vline_mixed, vline_weighted_scalar)

from conftest import bump

SPEC = GridSpec(128, 128)
VG = VGridSpec(180, 90, 0.01, 0.99)


# ---------------------------------------------------------------------------
# WeightPair

def test_weight_pair_identities():
    w = WeightPair(2.0, 3.0)
    assert w.scale == 5.0
    assert not w.signed
    assert WeightPair(1.5, -1.5).signed
    psi = np.linspace(0.1, 1.4, 9)
    # n = 0: denominator is the constant c1 + c2
    assert np.allclose(w.denominator(0, psi), 5.0)
    # explicit formula for n = 2
    expected = 2.0 * np.exp(-2j * (psi - np.pi / 2)) \
        + 3.0 * np.exp(2j * (psi - np.pi / 2))
    assert np.allclose(w.denominator(2, psi), expected)
    # conjugate symmetry between +-n
    assert np.allclose(w.denominator(-2, psi), np.conj(w.denominator(2, psi)))


def test_weight_pair_rejects_zero():
    with pytest.raises(ValueError):
        WeightPair(0.0, 1.0)


def test_signed_denominator_vanishes_at_n0():
    w = WeightPair(1.0, -1.0)
    assert np.allclose(w.denominator(0, np.linspace(0.1, 1.4, 5)), 0.0)


# ---------------------------------------------------------------------------
# Weight tables, hard-coded from the combinatorial formulas for m <= 3

def test_decomposition_weight_table():
    # c1 = (-1)^ell * ell! (m-ell)! / m!, c2 = (-1)^m c1
    expected = {
        (1, 0): (1.0, -1.0),
        (1, 1): (-1.0, 1.0),
        (2, 0): (1.0, 1.0),
        (2, 1): (-0.5, -0.5),
        (2, 2): (1.0, 1.0),
        (3, 0): (1.0, -1.0),
        (3, 1): (-1.0 / 3.0, 1.0 / 3.0),
        (3, 2): (1.0 / 3.0, -1.0 / 3.0),
        (3, 3): (-1.0, 1.0),
    }
    for (m, ell), (c1, c2) in expected.items():
        w = decomposition_weights(m, ell)
        assert math.isclose(w.c1, c1) and math.isclose(w.c2, c2), (m, ell)
    # for odd m every pair is signed (the n = 0 mode is unrecoverable);
    # for even m none is
    for m in (1, 2, 3):
        for ell in range(m + 1):
            assert decomposition_weights(m, ell).signed == (m % 2 == 1)


def test_moment_weight_table():
    # c1 = (-1)^k k!, c2 = (-1)^m k!; signed iff m, k have opposite parity
    expected = {
        (1, 0): (1.0, -1.0),
        (1, 1): (-1.0, -1.0),
        (2, 0): (1.0, 1.0),
        (2, 1): (-1.0, 1.0),
        (2, 2): (2.0, 2.0),
        (3, 2): (2.0, -2.0),
        (3, 3): (-6.0, -6.0),
    }
    for (m, k), (c1, c2) in expected.items():
        w = moment_weights(m, k)
        assert math.isclose(w.c1, c1) and math.isclose(w.c2, c2), (m, k)
        assert w.signed == ((m - k) % 2 == 1)


# ---------------------------------------------------------------------------
# ModeMask

def test_mode_mask_merge_and_json():
    a = ModeMask(4)
    a.flag_degenerate(0)
    a.flag_points(2, [5, 3, 5])
    b = ModeMask(4)
    b.flag_degenerate(0)
    b.flag_points(2, [7])
    b.flag_points(-1, [1])
    a.merge(b)
    j = a.to_json()
    assert j["degenerate"] == [0]
    assert j["point_masked"] == {"-1": [1], "2": [3, 5, 7]}


# ---------------------------------------------------------------------------
# s-integration oracle

def test_integrate_in_s_polynomial_oracle():
    # data g(s) = (1 - s^2)^2 per phi-row; one integration gives
    # G(s) = int_s^{smax} g = P(smax) - P(s), P(s) = s - 2 s^3/3 + s^5/5
    from vlinetomo import VSinogram
    g = (1 - VG.s ** 2) ** 2
    d = VSinogram(VG.phi, VG.s, np.tile(g, (VG.n_phi, 1)), "Vw")
    got = integrate_in_s(d, 1)

    def P(s):
        return s - 2 * s ** 3 / 3 + s ** 5 / 5
    expected = P(VG.s[-1]) - P(VG.s)
    # trapezoid rule on 90 nodes: error O(h^2) ~ 2e-5
    assert np.max(np.abs(got.values - expected[None, :])) < 5e-5
    with pytest.raises(ValueError):
        integrate_in_s(d, 0)


# ---------------------------------------------------------------------------
# Weighted V-line round trips

def test_weighted_round_trip_unsigned():
    pots = make_phantom("gaussian-bumps", 0, 3, SPEC)
    h = pots.potentials[0]
    data = vline_weighted_scalar(h, 1.0, 2.0, VG)
    rec, mask = invert_weighted_vline(data, WeightPair(1.0, 2.0), SPEC,
                                      n_max=12)
    assert relative_l2(rec, h) <= 0.02
    assert mask.degenerate == []


def test_weighted_round_trip_signed_masks_n0():
    # with c1 = -c2 the n = 0 harmonic is annihilated in the data: the
    # measured harmonic must sit at the noise floor, the mask must say so,
    # and the non-degenerate content must still come back
    from vlinetomo import angular_fourier
    pots = make_phantom("visible-only", 0, 5, SPEC)
    h = pots.potentials[0]
    data = vline_weighted_scalar(h, 1.0, -1.0, VG)
    tab = angular_fourier(data.values, data.s, 12)
    scale = max(np.max(np.abs(tab.coeff(n))) for n in range(-12, 13))
    assert np.max(np.abs(tab.coeff(0))) <= 1e-6 * scale
    rec, mask = invert_weighted_vline(data, WeightPair(1.0, -1.0), SPEC,
                                      n_max=12)
    assert 0 in mask.degenerate
    assert relative_l2(rec, h) <= 0.05  # visible-only has no n = 0 content


def test_signed_n0_only_raises_degenerate():
    # n_max = 0 with signed weights leaves no recoverable harmonic at all
    h = bump(SPEC, power=2)
    data = vline_weighted_scalar(h, 1.0, -1.0, VG)
    with pytest.raises(DegenerateDataError):
        invert_weighted_vline(data, WeightPair(1.0, -1.0), SPEC, n_max=0)


# ---------------------------------------------------------------------------
# Single-potential recovery

@pytest.mark.parametrize("m,ell", [(1, 0), (1, 1), (2, 0), (2, 2)])
def test_recover_potential_round_trip(m, ell):
    pots = make_phantom("visible-only", m, 7, SPEC)
    chi = pots.potentials[ell]
    data = vline_mixed(potential_term(chi, m, ell), ell, VG)
    rec, _ = recover_potential(data, m, ell, SPEC, n_max=12)
    assert relative_l2(rec, chi) <= 0.05


def test_recover_potential_validates_tag():
    pots = make_phantom("visible-only", 1, 7, SPEC)
    data = vline_mixed(potential_term(pots.potentials[0], 1, 0), 0, VG)
    with pytest.raises(ValueError):
        recover_potential(data, 1, 1, SPEC)  # tagged L, expected T
    with pytest.raises(ValueError):
        recover_potential(data, 2, 0, SPEC)  # wrong order
