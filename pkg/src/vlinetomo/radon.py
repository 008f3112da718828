"""Scalar Radon transform on the disk and circular-harmonic inversion.

A line is parametrized by signed distance s and normal angle theta:
x = s*Phi(theta) + t*Phi(theta)_perp.  Per-harmonic inversion uses either
the Chebyshev-T kernel (Cormack) or the exponentially damped kernel with
Chebyshev-U correction (Perry); the latter is the stable default for large
harmonic index.  The 1/sqrt(s^2-r^2) endpoint singularity is removed
exactly by the substitution s = r*cosh(tau).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridSpec, ScalarGrid


# ---------------------------------------------------------------------------
# Chebyshev polynomials, all three branches

def chebyshev_T(k: int, x):
    """First-kind Chebyshev polynomial, valid for all real x."""
    if k < 0:
        raise ValueError("chebyshev_T needs k >= 0")
    x = np.asarray(x, dtype=float)
    ax = np.minimum(np.abs(x), 1.0)
    inner = np.cos(k * np.arccos(np.clip(x, -1.0, 1.0)))
    outer = np.cosh(k * np.arccosh(np.maximum(np.abs(x), 1.0)))
    out = np.where(np.abs(x) <= 1.0, inner,
                   np.where(x > 1.0, outer, (-1.0) ** k * outer))
    del ax
    return out if out.ndim else float(out)


def chebyshev_U(k: int, x):
    """Second-kind Chebyshev polynomial with the convention U_{-1} = 0."""
    if k < -1:
        raise ValueError("chebyshev_U needs k >= -1")
    x = np.asarray(x, dtype=float)
    if k == -1:
        out = np.zeros_like(x)
        return out if out.ndim else 0.0
    # sin((k+1) acos x)/sin(acos x) degenerates at |x| = 1; use the limit
    # U_k(+-1) = (+-1)^k (k+1) on a neighbourhood of the branch points.
    eps = 1e-8
    theta = np.arccos(np.clip(x, -1.0, 1.0))
    sin_t = np.sin(theta)
    inner = np.divide(np.sin((k + 1) * theta), sin_t,
                      out=np.zeros_like(theta), where=sin_t > eps)
    tau = np.arccosh(np.maximum(np.abs(x), 1.0))
    sinh_t = np.sinh(tau)
    outer = np.divide(np.sinh((k + 1) * tau), sinh_t,
                      out=np.zeros_like(tau), where=sinh_t > eps)
    limit = (k + 1.0) * np.where(x > 0, 1.0, (-1.0) ** k)
    near_one = np.abs(np.abs(x) - 1.0) < eps
    out = np.where(near_one, limit,
                   np.where(np.abs(x) < 1.0, inner,
                            np.where(x > 1.0, outer, (-1.0) ** k * outer)))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Data containers

@dataclass(frozen=True)
class RadonSinogram:
    theta: np.ndarray  # (n_theta,) uniform in [0, 2pi)
    s: np.ndarray      # (n_s,) uniform in (0, 1)
    values: np.ndarray  # (n_theta, n_s)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.theta), len(self.s)):
            raise ValueError("sinogram shape mismatch")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite sinogram values")
        object.__setattr__(self, "values", v)

    def interpolate(self, s, theta):
        """Bilinear evaluation at arbitrary (s, theta), periodic in theta."""
        s = np.asarray(s, dtype=float)
        theta = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
        n_t = len(self.theta)
        dth = 2.0 * np.pi / n_t
        ft = theta / dth
        i0 = ft.astype(np.intp) % n_t
        wt = ft - np.floor(ft)
        i1 = (i0 + 1) % n_t
        ds = self.s[1] - self.s[0]
        fs = np.clip((s - self.s[0]) / ds, 0.0, len(self.s) - 1)
        j0 = np.minimum(fs.astype(np.intp), len(self.s) - 2)
        ws = fs - j0
        v = self.values
        return ((1 - wt) * ((1 - ws) * v[i0, j0] + ws * v[i0, j0 + 1])
                + wt * ((1 - ws) * v[i1, j0] + ws * v[i1, j0 + 1]))


@dataclass(frozen=True)
class HarmonicTable:
    """Angular Fourier coefficients g_n(s), n = -n_max .. n_max."""

    n_max: int
    s: np.ndarray
    coeffs: np.ndarray  # complex, (2*n_max+1, n_s)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.n_max + 1, len(self.s)):
            raise ValueError("harmonic table shape mismatch")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite harmonic coefficients")
        object.__setattr__(self, "coeffs", c)

    def coeff(self, n: int) -> np.ndarray:
        if abs(n) > self.n_max:
            raise ValueError(f"harmonic {n} outside table (n_max={self.n_max})")
        return self.coeffs[n + self.n_max]


def sino_sgrid(n_s: int, s_min: float | None = None,
               s_max: float | None = None) -> np.ndarray:
    if s_min is None:
        s_min = 1.0 / n_s
    if s_max is None:
        s_max = 1.0 - 1.0 / n_s
    if not 0.0 < s_min < s_max < 1.0:
        raise ValueError("need 0 < s_min < s_max < 1")
    return np.linspace(s_min, s_max, n_s)


# ---------------------------------------------------------------------------
# Forward transform and Fourier machinery

def radon_forward(h: ScalarGrid, n_theta: int = 720, n_s: int = 180,
                  s_min: float | None = None, s_max: float | None = None,
                  step_factor: float = 0.5) -> RadonSinogram:
    """Composite-trapezoid chord integrals of h over an (s, theta) grid."""
    from . import kernels

    spec = h.spec
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    s = sino_sgrid(n_s, s_min, s_max)
    tt, ss = np.meshgrid(theta, s, indexing="ij")
    half = np.sqrt(np.maximum(1.0 - ss ** 2, 0.0))
    ct, st = np.cos(tt), np.sin(tt)
    ox = ss * ct - half * (-st)
    oy = ss * st - half * ct
    step = step_factor * min(spec.hx, spec.hy)
    vals = kernels.integrate_rays(h.values[None], spec,
                                  ox, oy, -st * np.ones_like(ox), ct * np.ones_like(ox),
                                  2.0 * half, np.ones((ox.size, 1)), step)
    return RadonSinogram(theta, s, vals.reshape(n_theta, n_s))


def angular_fourier(values: np.ndarray, s: np.ndarray, n_max: int) -> HarmonicTable:
    """Fourier coefficients g_n(s) = (1/N) sum_j data(theta_j, s) e^{-i n theta_j}
    over a uniform angle grid starting at 0.  Exact for band-limited data."""
    values = np.asarray(values)
    n_angle = values.shape[0]
    if n_angle < 2 * n_max + 2:
        raise ValueError(f"angle grid of {n_angle} too small for n_max={n_max}")
    spec = np.fft.fft(values, axis=0) / n_angle
    rows = [spec[n % n_angle] for n in range(-n_max, n_max + 1)]
    return HarmonicTable(n_max, np.asarray(s, dtype=float), np.stack(rows))


def harmonics_of_sinogram(sino: RadonSinogram, n_max: int) -> HarmonicTable:
    return angular_fourier(sino.values, sino.s, n_max)


def s_derivative(tab: HarmonicTable) -> HarmonicTable:
    """d/ds of each harmonic: central interior, one-sided second order at the
    ends (the last sample's one-sided value stands in for the boundary)."""
    if len(tab.s) < 5:
        raise ValueError("need at least 5 s-samples")
    d = np.gradient(tab.coeffs, tab.s, axis=1, edge_order=2)
    return HarmonicTable(tab.n_max, tab.s, d)


def _interp_complex(x, xp, fp, left=None, right=0.0):
    re = np.interp(x, xp, fp.real, left=left if left is None else left.real,
                   right=right)
    im = np.interp(x, xp, fp.imag, left=left if left is None else left.imag,
                   right=right)
    return re + 1j * im


def _check_r_grid(r_grid: np.ndarray) -> np.ndarray:
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid >= 1.0) or np.any(r_grid <= 0.0):
        raise ValueError("r-grid must lie strictly inside (0, 1)")
    return r_grid


def _spline_derivatives(tab: HarmonicTable):
    """Per-harmonic callables evaluating g_n'(s); spline differentiation
    keeps the noise floor well below finite differences, which matters for
    the exponentially amplified Cormack kernel.  Arguments are clamped to
    the sampled s-range (constant extension)."""
    from scipy.interpolate import CubicSpline

    s0, s1 = tab.s[0], tab.s[-1]
    derivs = []
    for row in tab.coeffs:
        sp_re = CubicSpline(tab.s, row.real).derivative()
        sp_im = CubicSpline(tab.s, row.imag).derivative()
        derivs.append(lambda x, a=sp_re, b=sp_im:
                      a(np.clip(x, s0, s1)) + 1j * b(np.clip(x, s0, s1)))
    return derivs


def cormack_invert(tab: HarmonicTable, r_grid: np.ndarray,
                   n_tau: int = 400) -> HarmonicTable:
    """Cormack per-harmonic inversion.

    h_n(r) = -(1/pi) int_r^1 g_n'(s) T_|n|(s/r)/sqrt(s^2-r^2) ds computed as
    -(1/pi) int_0^{acosh(smax/r)} g_n'(r cosh tau) cosh(|n| tau) dtau.
    The T kernel grows like e^{|n| tau}, so data errors are amplified by
    (s_max/r)^|n|; prefer perry_invert for large |n| or small r.
    """
    r_grid = _check_r_grid(r_grid)
    derivs = _spline_derivatives(tab)
    s_max = tab.s[-1]
    out = np.zeros((2 * tab.n_max + 1, len(r_grid)), dtype=complex)
    for idx, n in enumerate(range(-tab.n_max, tab.n_max + 1)):
        gp = derivs[idx]
        for j, r in enumerate(r_grid):
            if r >= s_max:
                continue
            tau = np.linspace(0.0, np.arccosh(s_max / r), n_tau)
            out[idx, j] = -np.trapezoid(
                gp(r * np.cosh(tau)) * np.cosh(abs(n) * tau), tau) / np.pi
    return HarmonicTable(tab.n_max, r_grid, out)


def perry_invert(tab: HarmonicTable, r_grid: np.ndarray,
                 n_tau: int = 400, n_inner: int = 200) -> HarmonicTable:
    """Perry per-harmonic inversion (kernel decays like e^{-|n| tau}).

    h_n(r) = -(1/pi) int gp(r cosh tau) e^{-|n| tau} dtau
             + (1/(pi r)) int_0^r gp(s) U_{|n|-1}(s/r) ds.
    Below the smallest s-sample only the first integral contributes.
    """
    r_grid = _check_r_grid(r_grid)
    derivs = _spline_derivatives(tab)
    s_max = tab.s[-1]
    out = np.zeros((2 * tab.n_max + 1, len(r_grid)), dtype=complex)
    for idx, n in enumerate(range(-tab.n_max, tab.n_max + 1)):
        gp = derivs[idx]
        for j, r in enumerate(r_grid):
            if r >= s_max:
                continue
            tau = np.linspace(0.0, np.arccosh(s_max / r), n_tau)
            first = np.trapezoid(gp(r * np.cosh(tau)) * np.exp(-abs(n) * tau),
                                 tau)
            second = 0.0
            if r > tab.s[0] and n != 0:
                sq = np.linspace(0.0, r, n_inner)
                second = np.trapezoid(
                    gp(sq) * chebyshev_U(abs(n) - 1, sq / r), sq) / r
            out[idx, j] = (-first + second) / np.pi
    return HarmonicTable(tab.n_max, r_grid, out)


def assemble_from_harmonics(tab: HarmonicTable, spec: GridSpec,
                            imag_tol: float = 1e-10) -> ScalarGrid:
    """Synthesize h(x) = sum_n h_n(r) e^{i n phi} on the Cartesian grid.

    Coefficients are interpolated linearly in r (0 beyond the last node);
    a non-negligible imaginary residue signals broken conjugate symmetry.
    """
    from scipy.interpolate import CubicSpline

    xx, yy = spec.mesh()
    rr = np.hypot(xx, yy).ravel()
    pp = np.arctan2(yy, xx).ravel()
    acc = np.zeros(rr.shape, dtype=complex)
    # cubic (not linear) radial interpolation: reconstructed fields are often
    # differentiated downstream, and kinks at the r-nodes would dominate
    inside = rr <= tab.s[-1]
    rr_in = np.clip(rr[inside], tab.s[0], tab.s[-1])
    for n in range(-tab.n_max, tab.n_max + 1):
        row = tab.coeff(n)
        cn = np.zeros(rr.shape, dtype=complex)
        cn[inside] = (CubicSpline(tab.s, row.real)(rr_in)
                      + 1j * CubicSpline(tab.s, row.imag)(rr_in))
        acc += cn * np.exp(1j * n * pp)
    scale = np.max(np.abs(acc)) or 1.0
    resid = np.max(np.abs(acc.imag))
    if resid > imag_tol * scale:
        raise ValueError(f"imaginary residue {resid:.3e} exceeds "
                         f"{imag_tol:.1e} * scale; broken symmetry upstream")
    vals = acc.real.reshape(spec.ny, spec.nx)
    vals[~spec.disk_mask()] = 0.0
    return ScalarGrid(spec, vals)


def _ladder_plus(terms: dict) -> dict:
    """(dx + i dy) on sum of c * h^(a)(r)/r^b * e^{i k theta} terms.

    Keys are (k, a, b); the operator acts as
    e^{i theta} (d_r + (i/r) d_theta), i.e. A e^{ik th} ->
    (A' - kA/r) e^{i(k+1) th}."""
    out: dict = {}
    for (k, a, b), c in terms.items():
        out[(k + 1, a + 1, b)] = out.get((k + 1, a + 1, b), 0.0) + c
        out[(k + 1, a, b + 1)] = out.get((k + 1, a, b + 1), 0.0) - c * (b + k)
    return out


def _ladder_minus(terms: dict) -> dict:
    """(dx - i dy): A e^{ik th} -> (A' + kA/r) e^{i(k-1) th}."""
    out: dict = {}
    for (k, a, b), c in terms.items():
        out[(k - 1, a + 1, b)] = out.get((k - 1, a + 1, b), 0.0) + c
        out[(k - 1, a, b + 1)] = out.get((k - 1, a, b + 1), 0.0) + c * (k - b)
    return out


def _term_dx(terms: dict) -> dict:
    plus, minus = _ladder_plus(terms), _ladder_minus(terms)
    keys = set(plus) | set(minus)
    return {key: 0.5 * (plus.get(key, 0.0) + minus.get(key, 0.0))
            for key in keys}


def _term_dy(terms: dict) -> dict:
    plus, minus = _ladder_plus(terms), _ladder_minus(terms)
    keys = set(plus) | set(minus)
    return {key: -0.5j * (plus.get(key, 0.0) - minus.get(key, 0.0))
            for key in keys}


def _term_add(acc: dict, terms: dict, factor: complex) -> None:
    for key, c in terms.items():
        acc[key] = acc.get(key, 0.0) + factor * c


def _symbolic_potential_term(n: int, m: int, j: int) -> list[dict]:
    """Components of (d_perp)^(m-j) d^j [h(r) e^{i n theta}] as symbolic
    h^(a)/r^b * e^{i k theta} term dictionaries (one per component q)."""
    comps: list[dict] = [{(n, 0, 0): 1.0 + 0.0j}]
    for step in range(m):
        order = len(comps) - 1
        use_d = step < j
        out: list[dict] = []
        for q in range(order + 2):
            acc: dict = {}
            if q <= order:
                if use_d:
                    _term_add(acc, _term_dx(comps[q]),
                              (order + 1 - q) / (order + 1))
                else:
                    _term_add(acc, _term_dy(comps[q]),
                              -(order + 1 - q) / (order + 1))
            if q >= 1:
                if use_d:
                    _term_add(acc, _term_dy(comps[q - 1]), q / (order + 1))
                else:
                    _term_add(acc, _term_dx(comps[q - 1]), q / (order + 1))
            out.append(acc)
        comps = out
    return comps


def assemble_term_from_harmonics(tab: HarmonicTable, m: int, j: int,
                                 spec: GridSpec,
                                 imag_tol: float = 1e-8):
    """Components of (d_perp)^(m-j) d^j chi on the grid, with chi given by
    its radial harmonic profiles h_n(r).

    The derivatives are taken analytically per harmonic (spline derivatives
    in r, exact ladder factors in theta) instead of finite differences on
    the assembled grid; reconstruction noise in the profiles is therefore
    not amplified by 1/h per derivative order.
    """
    from scipy.interpolate import CubicSpline

    from .grids import SymmetricTensorField

    if not 0 <= j <= m:
        raise ValueError("need 0 <= j <= m")
    xx, yy = spec.mesh()
    rr = np.hypot(xx, yy).ravel()
    pp = np.arctan2(yy, xx).ravel()
    inside = (rr <= tab.s[-1]) & (rr > 0.0)
    rr_in = np.clip(rr[inside], tab.s[0], tab.s[-1])
    pp_in = pp[inside]
    acc = np.zeros((m + 1, rr_in.size), dtype=complex)
    for n in range(-tab.n_max, tab.n_max + 1):
        row = tab.coeff(n)
        if not np.any(row):
            continue
        spline = CubicSpline(tab.s, row)
        derivs = {0: spline(rr_in)}
        comps = _symbolic_potential_term(n, m, j)
        for q, terms in enumerate(comps):
            for (k, a, b), c in terms.items():
                if a not in derivs:
                    derivs[a] = spline.derivative(a)(rr_in)
                val = derivs[a]
                if b:
                    val = val / rr_in ** b
                acc[q] += c * val * np.exp(1j * k * pp_in)
    scale = np.max(np.abs(acc)) or 1.0
    resid = np.max(np.abs(acc.imag))
    if resid > imag_tol * scale:
        raise ValueError(f"imaginary residue {resid:.3e} exceeds "
                         f"{imag_tol:.1e} * scale; broken symmetry upstream")
    out = np.zeros((m + 1, spec.ny * spec.nx))
    out[:, inside] = acc.real
    out = out.reshape(m + 1, spec.ny, spec.nx)
    out[:, ~spec.disk_mask()] = 0.0
    return SymmetricTensorField(m, spec, out)


def _ds_moment_terms(terms: dict, n: int) -> dict:
    """d/ds on a sum of c * h^(a)(r) s^al t^be r^-ga * base^n integrand
    terms, with base = (s+it)/r and r = sqrt(s^2+t^2); the family is closed
    under d/ds, so any s-derivative order stays exact."""
    out: dict = {}

    def add(key, c):
        out[key] = out.get(key, 0.0) + c

    for (a, al, be, ga), c in terms.items():
        add((a + 1, al + 1, be, ga + 1), c)           # h^(a+1) * s/r
        if al:
            add((a, al - 1, be, ga), c * al)          # d/ds s^al
        add((a, al + 1, be, ga + 2), -c * ga)         # d/ds r^-ga
        add((a, al, be + 1, ga + 2), -1j * n * c)     # d/ds base^n
    return out


def moment_radon_derivative(tab: HarmonicTable, p: int, d: int,
                            s_grid: np.ndarray,
                            n_quad: int = 192) -> np.ndarray:
    """d-th s-derivative of the p-th moment Radon harmonics of a field given
    by radial profiles h_n(r):

        G_p[n](s) = int_{-L}^{L} t^p h_n(sqrt(s^2+t^2)) ((s+it)/r)^n dt,
        L = sqrt(1-s^2).

    Differentiation happens under the integral sign (the integrand vanishes
    at the chord endpoints on the unit circle for boundary-vanishing
    fields), so the result is a smooth chord average of the profile's
    spline derivatives instead of a numerical derivative of a table.
    """
    from scipy.interpolate import CubicSpline

    x, w = np.polynomial.legendre.leggauss(n_quad)
    s_grid = np.asarray(s_grid, dtype=float)
    L = np.sqrt(np.clip(1.0 - s_grid ** 2, 0.0, None))
    t = L[:, None] * x[None, :]
    wt = L[:, None] * w[None, :]
    s = s_grid[:, None]
    r = np.sqrt(s ** 2 + t ** 2)
    rs = np.where(r > 0, r, 1.0)
    base = (s + 1j * t) / rs
    inside = r <= tab.s[-1]
    rc = np.clip(r, tab.s[0], tab.s[-1])
    out = np.zeros((2 * tab.n_max + 1, len(s_grid)), dtype=complex)
    tp = t ** p
    for idx, n in enumerate(range(-tab.n_max, tab.n_max + 1)):
        row = tab.coeff(n)
        if not np.any(row):
            continue
        spline = CubicSpline(tab.s, row)
        terms = {(0, 0, 0, 0): 1.0 + 0.0j}
        for _ in range(d):
            terms = _ds_moment_terms(terms, n)
        hvals: dict = {}
        acc = np.zeros_like(base)
        for (a, al, be, ga), c in terms.items():
            if a not in hvals:
                hv = np.zeros_like(r, dtype=complex)
                hv[inside] = (spline.derivative(a) if a else spline)(rc[inside])
                hvals[a] = hv
            acc += c * hvals[a] * s ** al * t ** be / rs ** ga
        out[idx] = np.sum(wt * tp * acc * base ** n, axis=1)
    return out


def radon_derivative_check(h: ScalarGrid, k: int, n_theta: int = 180,
                           n_s: int = 120) -> float:
    """Max relative residual of R(dh/dx_k)(s,Phi) = Phi_k d_s Rh(s,Phi)."""
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    from .operators import _dx, _dy

    dh = _dx(h.values, h.spec) if k == 1 else _dy(h.values, h.spec)
    lhs = radon_forward(ScalarGrid(h.spec, dh), n_theta, n_s)
    rhs = radon_forward(h, n_theta, n_s)
    d_rhs = np.gradient(rhs.values, rhs.s, axis=1, edge_order=2)
    phi_k = np.cos(rhs.theta) if k == 1 else np.sin(rhs.theta)
    resid = lhs.values - phi_k[:, None] * d_rhs
    scale = np.max(np.abs(lhs.values))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(resid)) / scale)
