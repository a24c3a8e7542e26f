# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay numerically interchangeable with
numpy_backend; the dispatcher treats the two as drop-in equals and the
test suite asserts parity."""

from libc.math cimport exp, expm1, fabs

import numpy as np

name = "cython"

cdef double M_2PI = 6.283185307179586476925286766559


cdef void _lorentz(const double[::1] x, double center, double fwhm,
                   double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double half = 0.5 * fwhm
    cdef double amp = fwhm / M_2PI
    cdef double d
    for i in range(n):
        d = x[i] - center
        out[i] = amp / (half * half + d * d)


def lorentzian_profile(x, double center, double fwhm, out=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if out is None:
        out = np.empty_like(x)
    _lorentz(x, center, fwhm, out)
    return out


cdef void _sideband(const double[::1] x, double e0, double alpha,
                    double nu_c, double kbt, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double inv_c2 = 1.0 / (nu_c * nu_c)
    cdef double nu, phi, occ, t
    for i in range(n):
        nu = fabs(x[i] - e0)
        if nu == 0.0:
            out[i] = 0.0
            continue
        phi = alpha * nu * exp(-nu * nu * inv_c2)
        occ = 0.0
        if kbt > 0.0:
            t = nu / kbt
            if t < 700.0:
                occ = 1.0 / expm1(t)
        if x[i] < e0:
            out[i] = (occ + 1.0) * phi
        else:
            out[i] = occ * phi


def sideband_profile(x, double e0, double alpha, double nu_c, double kbt,
                     out=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if out is None:
        out = np.empty_like(x)
    _sideband(x, e0, alpha, nu_c, kbt, out)
    return out


cdef void _model(const double[::1] x, const double[::1] centers,
                 const double[::1] fwhms, const double[::1] areas,
                 double baseline, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k, n = x.shape[0], m = centers.shape[0]
    cdef double half, amp, d
    for i in range(n):
        out[i] = baseline
    for k in range(m):
        half = 0.5 * fwhms[k]
        amp = areas[k] * fwhms[k] / M_2PI
        for i in range(n):
            d = x[i] - centers[k]
            out[i] += amp / (half * half + d * d)


def multi_lorentz_model(x, centers, fwhms, areas, double baseline=0.0,
                        out=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    fwhms = np.ascontiguousarray(fwhms, dtype=np.float64)
    areas = np.ascontiguousarray(areas, dtype=np.float64)
    if out is None:
        out = np.empty_like(x)
    _model(x, centers, fwhms, areas, baseline, out)
    return out


cdef void _jacobian(const double[::1] x, const double[::1] centers,
                    const double[::1] fwhms, const double[::1] areas,
                    double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, k, n = x.shape[0], m = centers.shape[0]
    cdef double c, w, a, half, d, q, term
    for k in range(m):
        c = centers[k]
        w = fwhms[k]
        a = areas[k]
        half = 0.5 * w
        for i in range(n):
            d = x[i] - c
            q = half * half + d * d
            term = a * w / (M_2PI * q)
            out[i, 3 * k] = term * 2.0 * d / q
            out[i, 3 * k + 1] = term * (1.0 / w - w / (2.0 * q))
            out[i, 3 * k + 2] = term / a


def multi_lorentz_jacobian(x, centers, fwhms, areas, out=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    fwhms = np.ascontiguousarray(fwhms, dtype=np.float64)
    areas = np.ascontiguousarray(areas, dtype=np.float64)
    if out is None:
        out = np.empty((x.shape[0], 3 * centers.shape[0]), dtype=np.float64)
    _jacobian(x, centers, fwhms, areas, out)
    return out


cdef void _convolve_reflect(const double[::1] v, const double[::1] kernel,
                            double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, idx, n = v.shape[0], width = kernel.shape[0]
    cdef Py_ssize_t m = (width - 1) // 2
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(width):
            idx = i + j - m
            # triangular-wave index fold, same as numpy's reflect padding
            while idx < 0 or idx >= n:
                if idx < 0:
                    idx = -idx
                if idx >= n:
                    idx = 2 * n - 2 - idx
            s += v[idx] * kernel[j]
        out[i] = s


def convolve_reflect(values, kernel):
    values = np.ascontiguousarray(values, dtype=np.float64)
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    if kernel.shape[0] % 2 != 1:
        raise ValueError("kernel must have odd length")
    if values.shape[0] == 1:
        return values * float(kernel.sum())
    out = np.empty_like(values)
    _convolve_reflect(values, kernel, out)
    return out


cdef double _trapz(const double[::1] v, double dx) noexcept nogil:
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double s = 0.0
    if n < 2:
        return 0.0
    for i in range(n):
        s += v[i]
    return dx * (s - 0.5 * (v[0] + v[n - 1]))


def trapezoid_uniform(values, double dx):
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _trapz(values, dx)
