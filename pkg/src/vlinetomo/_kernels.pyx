# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled ray-integration kernel (hot loop of every forward transform)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, pow

cnp.import_array()


cdef inline double _bilin(double[:, :, ::1] comps, Py_ssize_t p,
                          double fx, double fy,
                          Py_ssize_t nx, Py_ssize_t ny) nogil:
    cdef Py_ssize_t i0, j0
    cdef double wx, wy
    if fx < 0.0 or fx > nx - 1 or fy < 0.0 or fy > ny - 1:
        return 0.0
    i0 = <Py_ssize_t>fx
    j0 = <Py_ssize_t>fy
    if i0 > nx - 2:
        i0 = nx - 2
    if j0 > ny - 2:
        j0 = ny - 2
    wx = fx - i0
    wy = fy - j0
    return ((1.0 - wy) * ((1.0 - wx) * comps[p, j0, i0] + wx * comps[p, j0, i0 + 1])
            + wy * ((1.0 - wx) * comps[p, j0 + 1, i0] + wx * comps[p, j0 + 1, i0 + 1]))


def integrate_rays(double[:, :, ::1] comps, double x0, double y0,
                   double hx, double hy,
                   double[::1] ox, double[::1] oy,
                   double[::1] dx, double[::1] dy,
                   double[::1] tmax, double[:, ::1] weights,
                   double step, int moment=0):
    """Trapezoid quadrature of t^moment * sum_p w[r,p] f_p along each ray."""
    cdef Py_ssize_t nray = ox.shape[0]
    cdef Py_ssize_t ncomp = comps.shape[0]
    cdef Py_ssize_t ny = comps.shape[1]
    cdef Py_ssize_t nx = comps.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(nray)
    cdef double[::1] out_v = out
    cdef Py_ssize_t r, it, p, nt
    cdef double t, dt, px, py, fx, fy, val, acc, w

    with nogil:
        for r in range(nray):
            nt = <Py_ssize_t>ceil(tmax[r] / step) + 1
            if nt < 2:
                nt = 2
            dt = tmax[r] / (nt - 1)
            acc = 0.0
            for it in range(nt):
                t = it * dt
                fx = (ox[r] + t * dx[r] - x0) / hx
                fy = (oy[r] + t * dy[r] - y0) / hy
                val = 0.0
                for p in range(ncomp):
                    w = weights[r, p]
                    if w != 0.0:
                        val += w * _bilin(comps, p, fx, fy, nx, ny)
                if moment != 0:
                    val *= pow(t, moment)
                if it == 0 or it == nt - 1:
                    acc += 0.5 * val
                else:
                    acc += val
            out_v[r] = acc * dt
    return out
