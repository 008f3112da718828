"""Error metrics between sampled fields, restricted to the unit disk."""

from __future__ import annotations

import numpy as np

from .grids import ScalarGrid, SymmetricTensorField


def _as_components(obj) -> np.ndarray:
    if isinstance(obj, ScalarGrid):
        return obj.values[None]
    if isinstance(obj, SymmetricTensorField):
        return obj.components
    return np.asarray(obj, dtype=float)


def relative_l2(a, b, spec=None) -> float:
    """||a - b||_2 / ||b||_2 over in-disk samples (b is the reference)."""
    av, bv = _as_components(a), _as_components(b)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch {av.shape} vs {bv.shape}")
    if spec is None and isinstance(b, (ScalarGrid, SymmetricTensorField)):
        spec = b.spec
    if spec is not None:
        mask = spec.disk_mask()
        av, bv = av[:, mask], bv[:, mask]
    denom = np.linalg.norm(bv)
    if denom == 0.0:
        return 0.0 if np.linalg.norm(av) == 0.0 else np.inf
    return float(np.linalg.norm(av - bv) / denom)


def max_abs(a, b, spec=None) -> float:
    av, bv = _as_components(a), _as_components(b)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch {av.shape} vs {bv.shape}")
    if spec is None and isinstance(b, (ScalarGrid, SymmetricTensorField)):
        spec = b.spec
    if spec is not None:
        mask = spec.disk_mask()
        av, bv = av[:, mask], bv[:, mask]
    return float(np.max(np.abs(av - bv))) if av.size else 0.0


def per_component_relative_l2(a: SymmetricTensorField,
                              b: SymmetricTensorField) -> list[float]:
    mask = b.spec.disk_mask()
    out = []
    for p in range(b.order + 1):
        ref = np.linalg.norm(b.components[p][mask])
        err = np.linalg.norm((a.components[p] - b.components[p])[mask])
        out.append(float(err / ref) if ref > 0 else 0.0)
    return out


def metrics_report(a, b) -> dict:
    rep = {"relative_l2": relative_l2(a, b), "max_abs": max_abs(a, b)}
    if isinstance(a, SymmetricTensorField) and isinstance(b, SymmetricTensorField):
        rep["per_component_relative_l2"] = per_component_relative_l2(a, b)
    return rep
