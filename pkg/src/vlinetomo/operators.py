"""Symmetrized differential operators and potential synthesis.

All four operators act on the component representation directly.  With f^(p)
the component holding p indices equal to 2, the symmetrized gradient and its
rotation are

    (d f)^(q)      = [ (m+1-q) dx f^(q) + q dy f^(q-1) ] / (m+1)
    (d_perp f)^(q) = [ -(m+1-q) dy f^(q) + q dx f^(q-1) ] / (m+1)

and the contractions

    (delta f)^(q)      = dx f^(q) + dy f^(q+1)
    (delta_perp f)^(q) = -dy f^(q) + dx f^(q+1).

Derivatives are central differences in the interior and second-order
one-sided at the boundary rows/columns (np.gradient).  Outputs are clipped
to the unit disk, where the fields are supported anyway.
"""

from __future__ import annotations

import numpy as np

from .grids import (MAX_TENSOR_ORDER, GridSpec, PotentialSet, ScalarGrid,
                    SymmetricTensorField)


def _dx(a: np.ndarray, spec: GridSpec) -> np.ndarray:
    return np.gradient(a, spec.hx, axis=1)


def _dy(a: np.ndarray, spec: GridSpec) -> np.ndarray:
    return np.gradient(a, spec.hy, axis=0)


def apply_d(f: SymmetricTensorField) -> SymmetricTensorField:
    """Symmetrized gradient: order m -> m+1."""
    m = f.order
    if m + 1 > MAX_TENSOR_ORDER:
        raise ValueError(f"order {m + 1} exceeds supported maximum {MAX_TENSOR_ORDER}")
    spec = f.spec
    out = np.zeros((m + 2, spec.ny, spec.nx))
    for q in range(m + 2):
        acc = np.zeros((spec.ny, spec.nx))
        if q <= m:
            acc += (m + 1 - q) * _dx(f.components[q], spec)
        if q >= 1:
            acc += q * _dy(f.components[q - 1], spec)
        out[q] = acc / (m + 1)
    out[:, ~spec.disk_mask()] = 0.0
    return SymmetricTensorField(m + 1, spec, out)


def apply_d_perp(f: SymmetricTensorField) -> SymmetricTensorField:
    """Rotated symmetrized gradient: order m -> m+1."""
    m = f.order
    if m + 1 > MAX_TENSOR_ORDER:
        raise ValueError(f"order {m + 1} exceeds supported maximum {MAX_TENSOR_ORDER}")
    spec = f.spec
    out = np.zeros((m + 2, spec.ny, spec.nx))
    for q in range(m + 2):
        acc = np.zeros((spec.ny, spec.nx))
        if q <= m:
            acc -= (m + 1 - q) * _dy(f.components[q], spec)
        if q >= 1:
            acc += q * _dx(f.components[q - 1], spec)
        out[q] = acc / (m + 1)
    out[:, ~spec.disk_mask()] = 0.0
    return SymmetricTensorField(m + 1, spec, out)


def apply_delta(f: SymmetricTensorField) -> SymmetricTensorField:
    """Divergence: order m -> m-1."""
    m = f.order
    if m < 1:
        raise ValueError("divergence needs order >= 1")
    spec = f.spec
    out = np.stack([_dx(f.components[q], spec) + _dy(f.components[q + 1], spec)
                    for q in range(m)])
    out[:, ~spec.disk_mask()] = 0.0
    return SymmetricTensorField(m - 1, spec, out)


def apply_delta_perp(f: SymmetricTensorField) -> SymmetricTensorField:
    """Rotated divergence: order m -> m-1."""
    m = f.order
    if m < 1:
        raise ValueError("divergence needs order >= 1")
    spec = f.spec
    out = np.stack([-_dy(f.components[q], spec) + _dx(f.components[q + 1], spec)
                    for q in range(m)])
    out[:, ~spec.disk_mask()] = 0.0
    return SymmetricTensorField(m - 1, spec, out)


def grad(g: ScalarGrid) -> SymmetricTensorField:
    return apply_d(SymmetricTensorField.from_scalar(g))


def grad_perp(g: ScalarGrid) -> SymmetricTensorField:
    return apply_d_perp(SymmetricTensorField.from_scalar(g))


def potential_term(chi: ScalarGrid, m: int, j: int) -> SymmetricTensorField:
    """(d_perp)^(m-j) d^j chi, an order-m field."""
    if not 0 <= j <= m:
        raise ValueError("need 0 <= j <= m")
    f = SymmetricTensorField.from_scalar(chi)
    for _ in range(j):
        f = apply_d(f)
    for _ in range(m - j):
        f = apply_d_perp(f)
    return f


def synthesize_from_potentials(p: PotentialSet) -> SymmetricTensorField:
    """f = sum_j (d_perp)^(m-j) d^j chi_j."""
    m = p.order
    total = SymmetricTensorField.zeros(m, p.spec)
    for j, chi in enumerate(p.potentials):
        total = total + potential_term(chi, m, j)
    return total


def contraction_weights(a, b, m: int, ell: int) -> np.ndarray:
    """Component weights of <b^ell a^(m-ell), f>.

    a, b are (..., 2) direction arrays; returns (..., m+1) weights w with
    <b^ell a^(m-ell), f>(x) = sum_p w[..., p] * f^(p)(x).  Weight p is the
    z^p coefficient of (b1 + b2 z)^ell (a1 + a2 z)^(m-ell).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not 0 <= ell <= m:
        raise ValueError("need 0 <= ell <= m")
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    w = np.zeros(shape + (m + 1,))
    w[..., 0] = 1.0
    deg = 0
    for factor in [b] * ell + [a] * (m - ell):
        nw = np.zeros_like(w)
        nw[..., :deg + 1] += w[..., :deg + 1] * factor[..., 0, None]
        nw[..., 1:deg + 2] += w[..., :deg + 1] * factor[..., 1, None]
        w = nw
        deg += 1
    return w


def contract(f: SymmetricTensorField, a, b=None, ell: int = 0):
    """Pointwise evaluator x -> <b^ell a^(m-ell), f(x)>.

    Returns a callable over coordinate arrays (x, y); evaluation uses
    bilinear interpolation of the stored components and is 0 outside
    [-1,1]^2.  b defaults to the 90-degree rotation of a.
    """
    a = np.asarray(a, dtype=float)
    if b is None:
        b = np.array([-a[1], a[0]])
    w = contraction_weights(a, b, f.order, ell)

    from . import kernels

    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        vals = kernels.sample_bilinear(f.components, f.spec, x, y)
        return np.tensordot(w, vals, axes=(0, 0))

    return evaluate
