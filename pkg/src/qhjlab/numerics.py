"""Finite-difference stencils and quadrature helpers on uniform grids.

Third derivatives are noise-sensitive, so everything downstream of the
Schwarzian uses the 4th-order interior stencils here and excludes a boundary
margin where only one-sided differences would be available.
"""

import numpy as np

#: points at each boundary excluded from residual/interior checks
BOUNDARY_MARGIN = 5


def deriv1(f, h):
    """First derivative on a uniform grid.

    4th-order 5-point central stencil in the interior; 2nd-order one-sided at
    the edges (edge values are for array completeness only and should not be
    trusted inside the boundary margin).
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    if n < 5:
        return np.gradient(f, h, edge_order=min(2, n - 1))
    out = np.empty_like(f)
    out[2:-2] = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    out[1] = (f[2] - f[0]) / (2.0 * h)
    out[-2] = (f[-1] - f[-3]) / (2.0 * h)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return out


def deriv2(f, h):
    """Second derivative, 4th-order central in the interior."""
    f = np.asarray(f, dtype=float)
    n = f.size
    if n < 5:
        d = np.gradient(f, h, edge_order=min(2, n - 1))
        return np.gradient(d, h, edge_order=min(2, n - 1))
    out = np.empty_like(f)
    out[2:-2] = (-f[4:] + 16.0 * f[3:-1] - 30.0 * f[2:-2]
                 + 16.0 * f[1:-3] - f[:-4]) / (12.0 * h * h)
    out[0] = (f[0] - 2.0 * f[1] + f[2]) / (h * h)
    out[1] = (f[0] - 2.0 * f[1] + f[2]) / (h * h)
    out[-2] = (f[-3] - 2.0 * f[-2] + f[-1]) / (h * h)
    out[-1] = (f[-3] - 2.0 * f[-2] + f[-1]) / (h * h)
    return out


def deriv1_complex(f, h):
    f = np.asarray(f)
    if np.iscomplexobj(f):
        return deriv1(f.real, h) + 1j * deriv1(f.imag, h)
    return deriv1(f, h)


def interior_slice(n, margin=BOUNDARY_MARGIN):
    """Slice selecting the interior of an n-point grid, excluding `margin`
    points at each end."""
    if n <= 2 * margin:
        raise ValueError(f"grid of {n} points has no interior at margin {margin}")
    return slice(margin, n - margin)


def simpson_weights(n, h):
    """Composite Simpson weights for n grid points (n odd preferred; a
    trapezoid panel is appended when n is even)."""
    if n < 3:
        raise ValueError("need at least 3 points for Simpson quadrature")
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 1  # points covered by Simpson panels
    w[1:m - 1:2] = 4.0
    w[2:m - 1:2] = 2.0
    w[0] = 1.0
    w[m - 1] = 1.0
    w *= h / 3.0
    if n % 2 == 0:
        w[-2] += h / 2.0
        w[-1] += h / 2.0
    return w
