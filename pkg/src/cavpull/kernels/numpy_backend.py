"""Vectorized numpy implementations of the hot kernels.

This is the fallback used when the compiled extension is unavailable; both
backends implement the same signatures and must agree to float precision
(summations may differ in the last few ulp because numpy sums pairwise).
"""

import numpy as np

name = "numpy"


def lorentzian_profile(x, center, fwhm, out=None):
    """Unit-area Lorentzian density (fwhm/(2*pi)) / ((fwhm/2)^2 + (x-center)^2)."""
    x = np.asarray(x, dtype=np.float64)
    if out is None:
        out = np.empty_like(x)
    d = x - center
    np.multiply(d, d, out=out)
    out += (0.5 * fwhm) ** 2
    np.divide(fwhm / (2.0 * np.pi), out, out=out)
    return out


def sideband_profile(x, e0, alpha, nu_c, kbt, out=None):
    """One-phonon emission profile around a line at e0, unnormalized.

    Below e0 (phonon emission): (n(nu)+1) * phi(nu); above (absorption):
    n(nu) * phi(nu), with nu = |x - e0|, phi(nu) = alpha*nu*exp(-nu^2/nu_c^2)
    and n the thermal occupation at kbt = k_B*T. The bin at exactly e0 is 0;
    kbt = 0 zeroes the absorption side entirely.
    """
    x = np.asarray(x, dtype=np.float64)
    nu = np.abs(x - e0)
    phi = alpha * nu * np.exp(-(nu * nu) / (nu_c * nu_c))
    if kbt > 0.0:
        with np.errstate(over="ignore", divide="ignore"):
            n = 1.0 / np.expm1(nu / kbt)          # inf at nu=0 -> handled below
        n = np.where(np.isfinite(n), n, 0.0)       # overflow far in the tail -> 0
    else:
        n = np.zeros_like(nu)
    values = np.where(x < e0, (n + 1.0) * phi, n * phi)
    values[nu == 0.0] = 0.0
    if out is None:
        return values
    out[...] = values
    return out


def multi_lorentz_model(x, centers, fwhms, areas, baseline, out=None):
    """Sum of unit-area Lorentzians scaled by their areas, plus a constant."""
    x = np.asarray(x, dtype=np.float64)
    if out is None:
        out = np.full_like(x, baseline)
    else:
        out[...] = baseline
    for c, w, a in zip(centers, fwhms, areas):
        d = x - c
        out += (a * w / (2.0 * np.pi)) / ((0.5 * w) ** 2 + d * d)
    return out


def multi_lorentz_jacobian(x, centers, fwhms, areas, out=None):
    """Partial derivatives of multi_lorentz_model w.r.t. raw peak parameters.

    Column layout: (d/dcenter, d/dfwhm, d/darea) per peak, in peak order.
    The baseline column is a constant and is left to the caller.
    """
    x = np.asarray(x, dtype=np.float64)
    k = len(centers)
    if out is None:
        out = np.empty((x.size, 3 * k), dtype=np.float64)
    for i, (c, w, a) in enumerate(zip(centers, fwhms, areas)):
        d = x - c
        q = (0.5 * w) ** 2 + d * d
        term = (a * w / (2.0 * np.pi)) / q
        out[:, 3 * i] = term * (2.0 * d / q)
        out[:, 3 * i + 1] = term * (1.0 / w - 0.5 * w / q)
        out[:, 3 * i + 2] = term / a
    return out


def convolve_reflect(values, kernel):
    """'Same'-length convolution with reflect boundary handling.

    The kernel must have odd length 2m+1 with m < len(values).
    """
    values = np.asarray(values, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    m = (kernel.size - 1) // 2
    if m == 0:
        return values * kernel[0]
    padded = np.pad(values, m, mode="reflect")
    return np.convolve(padded, kernel[::-1], mode="valid")


def trapezoid_uniform(values, dx):
    """Trapezoid-rule integral of uniformly sampled values with step dx."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))
