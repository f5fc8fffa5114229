"""Fast Cauchy transforms of Chebyshev-represented densities.

The transform of a Chebyshev basis function over [-1, 1],

    I_n(s) = int T_n(t) / (s - t) dt,

obeys I_{n+1} = 2 s I_n - I_{n-1} - 2 J_n with J_n = int T_n dt, seeded by
I_0 = log((s+1)/(s-1)) and I_1 = s I_0 - 2. Near the cut |s + sqrt(s^2-1)|
is close to 1 and the forward recurrence is stable, which is exactly where
plain quadrature is expensive; away from the cut a fixed Gauss grid is
cheap and accurate. Together they give vectorized transforms at arbitrary
points, which 2D transforms consume row by row.
"""

from functools import lru_cache

import numpy as np

from .quadrature import _chebfit_from_values, _chebpts, _leggauss_cached

#: forward recurrence is used while |phi_plus|^degree stays below this
_GROWTH_CAP = 1e6

_FAR_PANELS = 16
_FAR_ORDER = 24


@lru_cache(maxsize=128)
def _t_moments(n):
    """J_k = int_{-1}^{1} T_k(t) dt for k < n."""
    k = np.arange(n)
    J = np.zeros(n)
    even = k % 2 == 0
    J[even] = 2.0 / (1.0 - k[even] ** 2)
    return J


def _phi_plus_abs(sigma):
    root = np.sqrt(sigma * sigma - 1.0)
    w = sigma + root
    small = np.abs(w) < 1.0
    w = np.where(small, sigma - root, w)
    return np.abs(w)


def _recurrence_values(coeffs, sigma):
    """sum_n c_n I_n(sigma) by the forward recurrence (vectorized)."""
    n = len(coeffs)
    J = _t_moments(n)
    i_prev = np.log((sigma + 1.0) / (sigma - 1.0))
    total = coeffs[0] * i_prev
    if n == 1:
        return total
    i_cur = sigma * i_prev - 2.0
    total = total + coeffs[1] * i_cur
    for k in range(1, n - 1):
        i_next = 2.0 * sigma * i_cur - i_prev - 2.0 * J[k]
        total = total + coeffs[k + 1] * i_next
        i_prev, i_cur = i_cur, i_next
    return total


class CauchyTransform1D:
    """Vectorized z -> int f(t)/(z - t) dt for a compactly supported f."""

    def __init__(self, f):
        self.f = f
        a, b = f.support
        self.a, self.b = a, b
        self.mid = 0.5 * (a + b)
        self.half = 0.5 * (b - a)
        # same Chebyshev coefficients that back the test function
        self.coeffs = np.asarray(f.coefficients, dtype=float)
        xi, wi = _leggauss_cached(_FAR_ORDER)
        edges = np.linspace(a, b, _FAR_PANELS + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        self._nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
        self._wvals = ((half[:, None] * wi[None, :]).ravel()
                       * np.asarray(f(self._nodes)))
        self._growth_floor = _GROWTH_CAP ** (1.0 / max(len(self.coeffs), 2))

    def __call__(self, zeta):
        # the interval scaling cancels: dt = half ds against 1/(half (s0 - s))
        zeta = np.asarray(zeta, dtype=complex)
        flat = np.atleast_1d(zeta).ravel()
        sigma = (flat - self.mid) / self.half
        out = np.empty(flat.shape, dtype=complex)
        near = _phi_plus_abs(sigma) < self._growth_floor
        if np.any(near):
            out[near] = _recurrence_values(self.coeffs, sigma[near])
        far = ~near
        if np.any(far):
            kern = 1.0 / (flat[far][:, None] - self._nodes[None, :])
            out[far] = kern @ self._wvals
        return out.reshape(zeta.shape) if zeta.shape else out[0]


class Cheb2DFit:
    """Tensor Chebyshev fit of a smooth function on a rectangle."""

    def __init__(self, coeffs, rect):
        self.coeffs = coeffs
        self.rect = tuple(float(v) for v in rect)

    @classmethod
    def from_values(cls, values, rect):
        degx = values.shape[0] - 1
        degy = values.shape[1] - 1

        def fit_axis(vals, degree):
            re = np.apply_along_axis(_chebfit_from_values, 0, vals.real, degree)
            if np.iscomplexobj(vals):
                return re + 1j * np.apply_along_axis(
                    _chebfit_from_values, 0, vals.imag, degree)
            return re

        cx = fit_axis(values, degx)
        cxy = fit_axis(cx.T, degy).T
        return cls(cxy, rect)

    def support_rect(self):
        return self.rect

    def eval_xy(self, x, y):
        ax, bx, ay, by = self.rect
        sx = (2.0 * np.asarray(x, dtype=float) - (ax + bx)) / (bx - ax)
        sy = (2.0 * np.asarray(y, dtype=float) - (ay + by)) / (by - ay)
        return np.polynomial.chebyshev.chebval2d(sx, sy, self.coeffs)


def cauchy_on_real(phi, ws, order=24, splits=4):
    """(r * phi)(w) for real w, vectorized over the w-array.

    The inner v-integral of each separable term splits at v = 0 (where the
    line of 1D transforms crosses the cut) and the transforms vectorize
    over all w at once.
    """
    ws = np.asarray(ws, dtype=float)
    flat = np.atleast_1d(ws).ravel()
    out = np.zeros(flat.shape, dtype=complex)
    xi, wi = _leggauss_cached(order)
    for c, fx, fy in phi.terms:
        ctf = CauchyTransform1D(fx)
        va, vb = fy.support
        edges = sorted({va, vb} | ({0.0} if va < 0.0 < vb else set()))
        for lo, hi in zip(edges[:-1], edges[1:]):
            sub = np.linspace(lo, hi, splits + 1)
            for slo, shi in zip(sub[:-1], sub[1:]):
                mid, half = 0.5 * (slo + shi), 0.5 * (shi - slo)
                for node, weight in zip(mid + half * xi, half * wi):
                    fv = float(fy(node))
                    if fv == 0.0:
                        continue
                    out += c * weight * fv * ctf(flat - 1j * node)
    return out.reshape(ws.shape) if ws.shape else out[0]


def cauchy_fit_2d(phi, rect, degree=48):
    """Chebyshev fit of the plane Cauchy transform (r * phi) on a rectangle.

    Works row by row: all sample points of one y-row share their imaginary
    part, so the inner v-integral of each separable term uses one panel
    split and the 1D transforms vectorize along the row.
    """
    ax, bx, ay, by = rect
    xs = 0.5 * (ax + bx) + 0.5 * (bx - ax) * _chebpts(degree)
    ys = 0.5 * (ay + by) + 0.5 * (by - ay) * _chebpts(degree)
    xi, wi = _leggauss_cached(16)
    values = np.zeros((degree + 1, degree + 1), dtype=complex)
    transforms = [(c, CauchyTransform1D(fx), fy) for c, fx, fy in phi.terms]
    for j, yr in enumerate(ys):
        row = np.zeros(degree + 1, dtype=complex)
        for c, ctf, fy in transforms:
            va, vb = fy.support
            breaks = sorted({va, vb} | ({yr} if va < yr < vb else set()))
            for lo, hi in zip(breaks[:-1], breaks[1:]):
                mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
                for node, weight in zip(mid + half * xi, half * wi):
                    fv = float(fy(node))
                    if fv == 0.0:
                        continue
                    row += c * weight * fv * ctf(xs + 1j * (yr - node))
        values[:, j] = row
    return Cheb2DFit.from_values(values, rect)
