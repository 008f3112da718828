"""Forward V-line transforms of scalar and symmetric tensor fields.

A V-line is parametrized by the vertex angle phi (vertex on the unit circle)
and half-opening angle psi; the two branches point inward along
u = Phi(pi+phi-psi) and v = Phi(pi+phi+psi) and leave the disk after a
parameter 2*cos(psi).  Every transform is implemented two independent ways:

* direct ray quadrature from the vertex (trapezoid, step tied to the grid),
* composition of per-component Radon sinograms evaluated at
  (sin psi, xi_-) and (sin psi, xi_+), xi_-+ = phi -+ (psi - pi/2).

The two paths are mathematically equal and serve as mutual oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grids import GridSpec, ScalarGrid, SymmetricTensorField
from .operators import contraction_weights
from .radon import RadonSinogram, radon_forward


@dataclass(frozen=True)
class VGridSpec:
    """(phi, psi) sampling; psi is induced by a uniform grid in s = sin(psi)."""

    n_phi: int = 360
    n_psi: int = 180
    s_min: float = 0.01
    s_max: float = 0.99

    def __post_init__(self):
        if self.n_phi < 4 or self.n_psi < 4:
            raise ValueError("V-sinogram grid too small")
        if not 0.0 < self.s_min < self.s_max < 1.0:
            raise ValueError("need 0 < s_min < s_max < 1")

    @property
    def phi(self) -> np.ndarray:
        return np.linspace(0.0, 2.0 * np.pi, self.n_phi, endpoint=False)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n_psi)

    @property
    def psi(self) -> np.ndarray:
        return np.arcsin(self.s)


@dataclass(frozen=True)
class VSinogram:
    phi: np.ndarray
    s: np.ndarray           # sin(psi), uniform
    values: np.ndarray      # (n_phi, n_psi)
    transform: str          # Vw | L | T | M | Lk | Tk
    order: int = 0
    ell: int = 0
    k: int = 0
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.phi), len(self.s)):
            raise ValueError("V-sinogram shape mismatch")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite V-sinogram values")
        if np.any(self.s <= 0.0) or np.any(self.s >= 1.0):
            raise ValueError("psi must lie strictly inside (0, pi/2)")
        if not 0 <= self.ell <= max(self.order, 0) or self.k < 0:
            raise ValueError("inconsistent transform tag parameters")
        object.__setattr__(self, "values", v)

    @property
    def psi(self) -> np.ndarray:
        return np.arcsin(self.s)

    def with_values(self, values: np.ndarray) -> "VSinogram":
        return replace(self, values=np.asarray(values, dtype=float))


def _branch_frames(grid: VGridSpec):
    """Per-(phi, psi) vertex, branch directions and exit parameters.

    Returns (ox, oy, udir, vdir, tmax), each of shape (n_phi, n_psi[, 2]).
    """
    phi = grid.phi[:, None]
    psi = grid.psi[None, :]
    ox = np.broadcast_to(np.cos(phi), (grid.n_phi, grid.n_psi))
    oy = np.broadcast_to(np.sin(phi), (grid.n_phi, grid.n_psi))
    udir = np.stack([-np.cos(phi - psi), -np.sin(phi - psi)], axis=-1)
    vdir = np.stack([-np.cos(phi + psi), -np.sin(phi + psi)], axis=-1)
    tmax = np.broadcast_to(2.0 * np.cos(psi), (grid.n_phi, grid.n_psi))
    return ox, oy, udir, vdir, tmax


def _ray_path(f: SymmetricTensorField, grid: VGridSpec, ell: int,
              moment: int = 0, step_factor: float = 0.5,
              branch_weights=(1.0, 1.0), truncation_factor: float = 1.0):
    """Sum over both branches of the moment-weighted contraction integrals."""
    from . import kernels

    spec = f.spec
    step = step_factor * min(spec.hx, spec.hy)
    ox, oy, udir, vdir, tmax = _branch_frames(grid)
    tmax = tmax * truncation_factor
    total = np.zeros(ox.size)
    for cw, d in zip(branch_weights, (udir, vdir)):
        dperp = np.stack([-d[..., 1], d[..., 0]], axis=-1)
        w = contraction_weights(d, dperp, f.order, ell).reshape(-1, f.order + 1)
        vals = kernels.integrate_rays(f.components, spec,
                                      ox, oy, d[..., 0], d[..., 1],
                                      tmax, w, step, moment)
        total += cw * vals
    return total.reshape(grid.n_phi, grid.n_psi)


def component_sinograms(f: SymmetricTensorField, grid: VGridSpec,
                        n_theta: int = 720,
                        step_factor: float = 0.5) -> list[RadonSinogram]:
    """Radon sinogram of each stored component, on the V s-grid (shared cache
    for every Radon-composition evaluation of the same field)."""
    return [radon_forward(ScalarGrid(f.spec, f.components[p]), n_theta,
                          grid.n_psi, grid.s_min, grid.s_max, step_factor)
            for p in range(f.order + 1)]


def _radon_path(f: SymmetricTensorField, grid: VGridSpec, ell: int,
                sinos: list[RadonSinogram] | None = None,
                n_theta: int = 720, branch_weights=(1.0, 1.0)) -> np.ndarray:
    if sinos is None:
        sinos = component_sinograms(f, grid, n_theta)
    phi = grid.phi[:, None]
    psi = grid.psi[None, :]
    s = np.broadcast_to(grid.s[None, :], (grid.n_phi, grid.n_psi))
    _, _, udir, vdir, _ = _branch_frames(grid)
    total = np.zeros((grid.n_phi, grid.n_psi))
    for cw, d, xi in zip(branch_weights, (udir, vdir),
                         (phi - psi + np.pi / 2, phi + psi - np.pi / 2)):
        dperp = np.stack([-d[..., 1], d[..., 0]], axis=-1)
        w = contraction_weights(d, dperp, f.order, ell)
        xi_b = np.broadcast_to(xi, s.shape)
        for p, sino in enumerate(sinos):
            total += cw * w[..., p] * sino.interpolate(s, xi_b)
    return total


def _tag_for(ell: int, m: int) -> tuple[str, int]:
    if ell == 0:
        return "L", 0
    if ell == m:
        return "T", m
    return "M", ell


# ---------------------------------------------------------------------------
# Public transforms

def vline_weighted_scalar(h: ScalarGrid, c1: float, c2: float,
                          grid: VGridSpec, step_factor: float = 0.5,
                          truncation_factor: float = 1.0) -> VSinogram:
    """Weighted scalar V-line transform c1*(u-branch) + c2*(v-branch)."""
    if c1 == 0.0 or c2 == 0.0:
        raise ValueError("branch weights must be non-zero")
    f = SymmetricTensorField.from_scalar(h)
    vals = _ray_path(f, grid, 0, step_factor=step_factor,
                     branch_weights=(c1, c2),
                     truncation_factor=truncation_factor)
    return VSinogram(grid.phi, grid.s, vals, "Vw", 0, 0, 0, c1, c2)


def vline_weighted_via_radon(h: ScalarGrid, c1: float, c2: float,
                             grid: VGridSpec,
                             sino: RadonSinogram | None = None,
                             n_theta: int = 720) -> VSinogram:
    """Same transform through c1*Rh(sin psi, xi_-) + c2*Rh(sin psi, xi_+)."""
    if c1 == 0.0 or c2 == 0.0:
        raise ValueError("branch weights must be non-zero")
    f = SymmetricTensorField.from_scalar(h)
    vals = _radon_path(f, grid, 0, [sino] if sino is not None else None,
                       n_theta, branch_weights=(c1, c2))
    return VSinogram(grid.phi, grid.s, vals, "Vw", 0, 0, 0, c1, c2)


def single_branch_ray_transform(h: ScalarGrid, grid: VGridSpec, branch: str,
                                step_factor: float = 0.5) -> np.ndarray:
    """One branch of the scalar V-line integral (testing helper; the public
    weighted transform requires both weights non-zero)."""
    f = SymmetricTensorField.from_scalar(h)
    weights = (1.0, 0.0) if branch == "u" else (0.0, 1.0)
    return _ray_path(f, grid, 0, step_factor=step_factor,
                     branch_weights=weights)


def vline_mixed(f: SymmetricTensorField, ell: int, grid: VGridSpec,
                step_factor: float = 0.5,
                truncation_factor: float = 1.0) -> VSinogram:
    """Mixed V-line transform with ell perpendicular contractions
    (ell=0 is the longitudinal, ell=m the transverse transform)."""
    m = f.order
    if not 0 <= ell <= m:
        raise ValueError(f"ell must lie in [0, {m}]")
    vals = _ray_path(f, grid, ell, step_factor=step_factor,
                     truncation_factor=truncation_factor)
    tag, ell_tag = _tag_for(ell, m)
    return VSinogram(grid.phi, grid.s, vals, tag, m, ell_tag)


def vline_mixed_via_radon(f: SymmetricTensorField, ell: int, grid: VGridSpec,
                          sinos: list[RadonSinogram] | None = None,
                          n_theta: int = 720) -> VSinogram:
    m = f.order
    if not 0 <= ell <= m:
        raise ValueError(f"ell must lie in [0, {m}]")
    vals = _radon_path(f, grid, ell, sinos, n_theta)
    tag, ell_tag = _tag_for(ell, m)
    return VSinogram(grid.phi, grid.s, vals, tag, m, ell_tag)


def vline_longitudinal(f: SymmetricTensorField, grid: VGridSpec,
                       **kw) -> VSinogram:
    if f.order == 0:
        return vline_weighted_scalar(ScalarGrid(f.spec, f.components[0]),
                                     1.0, 1.0, grid, **kw)
    return vline_mixed(f, 0, grid, **kw)


def vline_transverse(f: SymmetricTensorField, grid: VGridSpec,
                     **kw) -> VSinogram:
    if f.order == 0:
        return vline_weighted_scalar(ScalarGrid(f.spec, f.components[0]),
                                     1.0, 1.0, grid, **kw)
    return vline_mixed(f, f.order, grid, **kw)


def vline_moment(f: SymmetricTensorField, kind: str, k: int, grid: VGridSpec,
                 step_factor: float = 0.5) -> VSinogram:
    """k-th moment longitudinal/transverse transform; t is measured from the
    vertex exactly as in the branch integrals above."""
    if k < 0:
        raise ValueError("moment order must be >= 0")
    if kind not in ("longitudinal", "transverse"):
        raise ValueError("kind must be 'longitudinal' or 'transverse'")
    ell = 0 if kind == "longitudinal" else f.order
    vals = _ray_path(f, grid, ell, moment=k, step_factor=step_factor)
    tag = "Lk" if kind == "longitudinal" else "Tk"
    return VSinogram(grid.phi, grid.s, vals, tag, f.order, ell, k)
