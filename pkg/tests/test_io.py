"""Binary format round trips and corruption handling."""

import struct

import numpy as np
import pytest

from vlinetomo import (DataFormatError, GridSpec, ScalarGrid,
                       SymmetricTensorField, VGridSpec, VSinogram, read_grid,
                       read_sinogram, write_grid, write_pgm, write_sinogram)

SPEC = GridSpec(32, 32)
VG = VGridSpec(16, 8, 0.05, 0.95)


def _scalar(seed=0):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(32, 32))
    vals[~SPEC.disk_mask()] = 0.0
    return ScalarGrid(SPEC, vals)


def test_scalar_grid_round_trip_bit_exact(tmp_path):
    g = _scalar()
    p = tmp_path / "a.vgrid"
    write_grid(p, g)
    back = read_grid(p)
    assert isinstance(back, ScalarGrid)
    assert back.spec == g.spec
    assert np.array_equal(back.values, g.values)


def test_tensor_grid_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    comps = rng.normal(size=(3, 32, 32))
    comps[:, ~SPEC.disk_mask()] = 0.0
    f = SymmetricTensorField(2, SPEC, comps)
    p = tmp_path / "f.vgrid"
    write_grid(p, f)
    back = read_grid(p)
    assert isinstance(back, SymmetricTensorField)
    assert back.order == 2
    assert np.array_equal(back.components, f.components)


def test_sinogram_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(2)
    d = VSinogram(VG.phi, VG.s, rng.normal(size=(16, 8)), "M", 2, 1, 0,
                  -0.5, -0.5)
    p = tmp_path / "d.vsino"
    write_sinogram(p, d)
    back = read_sinogram(p)
    assert np.array_equal(back.values, d.values)
    assert (back.transform, back.order, back.ell, back.k) == ("M", 2, 1, 0)
    assert back.c1 == -0.5 and back.c2 == -0.5
    assert np.allclose(back.phi, d.phi) and np.allclose(back.s, d.s)


def test_header_layout(tmp_path):
    # magic, uint32-LE header length, JSON header, float64-LE payload
    g = _scalar()
    p = tmp_path / "a.vgrid"
    write_grid(p, g)
    raw = p.read_bytes()
    assert raw[:4] == b"VLTG"
    (hlen,) = struct.unpack("<I", raw[4:8])
    import json
    header = json.loads(raw[8:8 + hlen])
    assert header["kind"] == "scalar" and header["nx"] == 32
    payload = np.frombuffer(raw[8 + hlen:], dtype="<f8")
    assert np.array_equal(payload.reshape(1, 32, 32)[0], g.values)


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "bad.vgrid"
    p.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(DataFormatError):
        read_grid(p)
    with pytest.raises(DataFormatError):
        read_sinogram(p)


def test_grid_magic_not_accepted_as_sinogram(tmp_path):
    p = tmp_path / "a.vgrid"
    write_grid(p, _scalar())
    with pytest.raises(DataFormatError):
        read_sinogram(p)


def test_corrupt_header_rejected(tmp_path):
    p = tmp_path / "bad.vgrid"
    raw = b"not json at all"
    p.write_bytes(b"VLTG" + struct.pack("<I", len(raw)) + raw)
    with pytest.raises(DataFormatError):
        read_grid(p)


def test_truncated_payload_rejected(tmp_path):
    p = tmp_path / "a.vgrid"
    write_grid(p, _scalar())
    raw = p.read_bytes()
    p.write_bytes(raw[:-64])
    with pytest.raises(DataFormatError):
        read_grid(p)


def test_missing_header_field_rejected(tmp_path):
    import json
    hdr = json.dumps({"version": 1, "kind": "scalar"}).encode()
    p = tmp_path / "a.vgrid"
    p.write_bytes(b"VLTG" + struct.pack("<I", len(hdr)) + hdr)
    with pytest.raises(DataFormatError):
        read_grid(p)


def test_pgm_contract(tmp_path):
    vals = np.array([[0.0, 1.0], [2.0, np.nan]])
    p = tmp_path / "img.pgm"
    write_pgm(p, vals)
    raw = p.read_bytes()
    assert raw.startswith(b"P5\n2 2\n255\n")
    pix = np.frombuffer(raw[len(b"P5\n2 2\n255\n"):], dtype=np.uint8)
    # min -> 0, max -> 255, linear in between, non-finite -> 0
    assert list(pix) == [0, 128, 255, 0]


def test_pgm_constant_input(tmp_path):
    p = tmp_path / "c.pgm"
    write_pgm(p, np.full((3, 3), 7.0))
    pix = np.frombuffer(p.read_bytes().split(b"255\n", 1)[1], dtype=np.uint8)
    assert np.all(pix == 0)
