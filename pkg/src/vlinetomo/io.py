"""On-disk formats.

.vgrid: magic "VLTG", uint32-LE header length, UTF-8 JSON header
    {"version":1,"kind":"scalar"|"tensor","order":m,"nx":..,"ny":..,
     "components":k}, then k*ny*nx float64-LE values, component-major,
    row-major (y outer, x inner).

.vsino: magic "VLTS", uint32-LE header length, JSON header
    {"version":1,"transform":"Vw|L|T|M|Lk|Tk","order":m,"ell":..,"k":..,
     "c1":..,"c2":..,"nphi":..,"npsi":..,"s_min":..,"s_max":..},
    then nphi*npsi float64-LE values, phi-major.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .grids import GridSpec, ScalarGrid, SymmetricTensorField
from .vforward import VSinogram

GRID_MAGIC = b"VLTG"
SINO_MAGIC = b"VLTS"


def _write_blob(path, magic: bytes, header: dict, payload: np.ndarray):
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def _read_blob(path, magic: bytes) -> tuple[dict, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != magic:
        raise DataFormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    (hlen,) = struct.unpack("<I", data[4:8])
    try:
        header = json.loads(data[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: unreadable header: {exc}") from exc
    values = np.frombuffer(data[8 + hlen:], dtype="<f8")
    return header, values


def write_grid(path, obj: ScalarGrid | SymmetricTensorField):
    if isinstance(obj, ScalarGrid):
        header = {"version": 1, "kind": "scalar", "order": 0,
                  "nx": obj.spec.nx, "ny": obj.spec.ny, "components": 1}
        payload = obj.values[None]
    else:
        header = {"version": 1, "kind": "tensor", "order": obj.order,
                  "nx": obj.spec.nx, "ny": obj.spec.ny,
                  "components": obj.order + 1}
        payload = obj.components
    _write_blob(path, GRID_MAGIC, header, payload)


def read_grid(path) -> ScalarGrid | SymmetricTensorField:
    header, values = _read_blob(path, GRID_MAGIC)
    try:
        nx, ny, ncomp = header["nx"], header["ny"], header["components"]
        kind, order = header["kind"], header["order"]
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing header field {exc}") from exc
    if values.size != ncomp * ny * nx:
        raise DataFormatError(f"{path}: payload has {values.size} values, "
                              f"expected {ncomp * ny * nx}")
    spec = GridSpec(nx, ny)
    comps = values.reshape(ncomp, ny, nx)
    if kind == "scalar":
        return ScalarGrid(spec, comps[0])
    if kind == "tensor":
        if ncomp != order + 1:
            raise DataFormatError(f"{path}: {ncomp} components for order {order}")
        return SymmetricTensorField(order, spec, comps)
    raise DataFormatError(f"{path}: unknown grid kind {kind!r}")


def write_sinogram(path, sino: VSinogram):
    header = {"version": 1, "transform": sino.transform, "order": sino.order,
              "ell": sino.ell, "k": sino.k, "c1": sino.c1, "c2": sino.c2,
              "nphi": len(sino.phi), "npsi": len(sino.s),
              "s_min": float(sino.s[0]), "s_max": float(sino.s[-1])}
    _write_blob(path, SINO_MAGIC, header, sino.values)


def read_sinogram(path) -> VSinogram:
    header, values = _read_blob(path, SINO_MAGIC)
    try:
        nphi, npsi = header["nphi"], header["npsi"]
        phi = np.linspace(0.0, 2.0 * np.pi, nphi, endpoint=False)
        s = np.linspace(header["s_min"], header["s_max"], npsi)
        if values.size != nphi * npsi:
            raise DataFormatError(f"{path}: payload has {values.size} values, "
                                  f"expected {nphi * npsi}")
        return VSinogram(phi, s, values.reshape(nphi, npsi),
                         header["transform"], header["order"],
                         header["ell"], header["k"],
                         header["c1"], header["c2"])
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing header field {exc}") from exc
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def write_pgm(path, values: np.ndarray):
    """8-bit binary PGM with per-file linear min->0, max->255 scaling;
    non-finite samples render as 0."""
    v = np.array(values, dtype=float)
    v[~np.isfinite(v)] = np.nan
    lo = np.nanmin(v) if np.isfinite(v).any() else 0.0
    hi = np.nanmax(v) if np.isfinite(v).any() else 0.0
    span = hi - lo
    scaled = np.zeros_like(v) if span == 0.0 else (v - lo) / span * 255.0
    pix = np.nan_to_num(scaled, nan=0.0).round().astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
