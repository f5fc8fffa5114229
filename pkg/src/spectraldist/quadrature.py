"""1D test functions and integration primitives.

Test functions are C-infinity bumps of compact support, stored as Chebyshev
series on their support interval; derivatives come from differentiating the
series. Integration is composite Gauss-Legendre with panel refinement;
principal values use pole subtraction as the primary path, with an
epsilon-regularized evaluator kept as an independent oracle.

All integrand callables passed to the routines here must be vectorized:
they receive a float64 ndarray of nodes and return an ndarray of values
(real or complex).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from . import _kernels
from .errors import AccuracyError, BoundaryError, CapabilityError, DomainError

#: Degree of the master Chebyshev fit of the unit bump. 64 (the original
#: target) resolves values to ~1e-7 only; ~200 is needed before series
#: differentiation of order <= 6 becomes limited by double-precision
#: rounding rather than truncation.
MASTER_DEGREE = 220

#: Highest derivative order supported by `deriv`.
DERIV_CAP = 6

#: Default relative tolerance for regular integrals.
REL_TOL_REGULAR = 1e-10

#: Default relative tolerance for principal-value integrals.
REL_TOL_PV = 1e-8

_SNIP = 1e-16


def _snip_tail(coeffs):
    """Drop trailing coefficients below the double-precision decay floor."""
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(coeffs) > _SNIP * scale)[0]
    return np.array(coeffs[: keep[-1] + 1]) if len(keep) else np.zeros(1)


@lru_cache(maxsize=1)
def _unit_bump_coeffs():
    def f(s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) < 1.0
        out = np.zeros_like(s)
        out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        return out

    return _snip_tail(_cheb.chebinterpolate(f, MASTER_DEGREE))


class TestFunction1D:
    """Compactly supported smooth function on [center-radius, center+radius].

    Values come from a Chebyshev series in the scaled variable
    s = (t - center)/radius; the value and every derivative are exactly 0
    for |s| >= 1. Instances are immutable after construction.
    """

    __slots__ = ("center", "radius", "coefficients", "_deriv_cache")

    def __init__(self, center, radius, coefficients):
        if not radius > 0:
            raise DomainError(f"radius must be positive, got {radius}")
        self.center = float(center)
        self.radius = float(radius)
        self.coefficients = np.ascontiguousarray(coefficients, dtype=np.float64)
        self._deriv_cache = {}

    @classmethod
    def from_callable(cls, func, center, radius, degree=MASTER_DEGREE):
        """Fit ``func`` on the support interval by Chebyshev interpolation."""
        coeffs = _cheb.chebinterpolate(
            lambda s: np.asarray(func(center + radius * np.asarray(s)), dtype=float),
            degree,
        )
        return cls(center, radius, _snip_tail(coeffs))

    @property
    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        vals = _kernels.masked_series_eval(
            self.coefficients, self.center, self.radius, np.atleast_1d(t_arr)
        )
        return vals.reshape(t_arr.shape) if t_arr.shape else vals[0]

    def _coeffs_for_order(self, k):
        if k not in self._deriv_cache:
            ck = _cheb.chebder(self.coefficients, k) / self.radius**k
            self._deriv_cache[k] = np.ascontiguousarray(
                ck if len(ck) else np.zeros(1)
            )
        return self._deriv_cache[k]

    def deriv(self, k, t):
        """k-th derivative at ``t``; exactly 0 outside the support."""
        if k < 0 or int(k) != k:
            raise DomainError(f"derivative order must be a nonnegative integer, got {k}")
        if k > DERIV_CAP:
            raise CapabilityError(f"derivative order {k} exceeds supported cap {DERIV_CAP}")
        if k == 0:
            return self(t)
        t_arr = np.asarray(t, dtype=np.float64)
        vals = _kernels.masked_series_eval(
            self._coeffs_for_order(int(k)), self.center, self.radius,
            np.atleast_1d(t_arr),
        )
        return vals.reshape(t_arr.shape) if t_arr.shape else vals[0]

    def derivative(self, k=1):
        """The k-th derivative as a new TestFunction1D on the same support."""
        if k > DERIV_CAP:
            raise CapabilityError(f"derivative order {k} exceeds supported cap {DERIV_CAP}")
        return TestFunction1D(self.center, self.radius, self._coeffs_for_order(int(k)))

    def scaled(self, factor):
        return TestFunction1D(self.center, self.radius, self.coefficients * float(factor))

    def times_identity(self):
        """The function t -> t * f(t), exact in the Chebyshev basis."""
        c = self.radius * _cheb.chebmulx(self.coefficients)
        c[: len(self.coefficients)] += self.center * self.coefficients
        return TestFunction1D(self.center, self.radius, _snip_tail(c))

    def multiply(self, other, degree=MASTER_DEGREE):
        """Pointwise product with another TestFunction1D, refit on the
        intersection of the supports (a zero function if they are disjoint)."""
        lo = max(self.support[0], other.support[0])
        hi = min(self.support[1], other.support[1])
        if hi - lo <= 0:
            mid = 0.5 * (self.support[0] + other.support[1])
            return TestFunction1D(mid, 1.0, np.zeros(1))
        center, radius = 0.5 * (lo + hi), 0.5 * (hi - lo)
        coeffs = _cheb.chebinterpolate(
            lambda s: self(center + radius * np.asarray(s))
            * other(center + radius * np.asarray(s)),
            degree,
        )
        return TestFunction1D(center, radius, _snip_tail(coeffs))

    def is_zero(self):
        return not np.any(self.coefficients)

    def __repr__(self):
        return (f"TestFunction1D(center={self.center:g}, radius={self.radius:g}, "
                f"degree={len(self.coefficients) - 1})")


def make_bump(center, radius):
    """The bump t -> exp(-1/(1-s^2)), s = (t-center)/radius, 0 outside.

    Peak value exp(-1) at the center; support [center-radius, center+radius].
    """
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    return TestFunction1D(center, radius, _unit_bump_coeffs())


@lru_cache(maxsize=1)
def _smoothstep_coeffs():
    # antiderivative of the unit bump, normalized to reach exactly 1 at s=1
    bc = _cheb.chebint(_unit_bump_coeffs())
    lo = _cheb.chebval(-1.0, bc)
    total = _cheb.chebval(1.0, bc) - lo
    return bc, lo, total


def _smoothstep(u):
    """C-infinity ramp: 0 for u <= -1, 1 for u >= 1."""
    bc, lo, total = _smoothstep_coeffs()
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1.0, 1.0, 0.0)
    mid = (u > -1.0) & (u < 1.0)
    if np.any(mid):
        out = np.array(out, dtype=float)
        out[mid] = (_cheb.chebval(u[mid], bc) - lo) / total
    return out


def make_plateau(a, b, margin, max_degree=2048, fit_tol=5e-12):
    """Smooth cutoff equal to 1 on [a, b] and 0 outside [a-margin, b+margin].

    The ramps are bump antiderivatives, so the result is C-infinity. The
    Chebyshev degree is raised until the fit error is below ``fit_tol``.
    Derivatives of the fit do not vanish identically on the flat part; their
    size scales like fit_error * (oscillation rate / support radius)^k, so
    callers that need flat derivatives (completeness checks) should build
    wide plateaus rather than tight ones.
    """
    if not (b > a and margin > 0):
        raise DomainError("need b > a and margin > 0")

    def plateau(t):
        t = np.asarray(t, dtype=float)
        up = _smoothstep(2.0 * (t - (a - margin)) / margin - 1.0)
        down = _smoothstep(2.0 * ((b + margin) - t) / margin - 1.0)
        return up * down

    center = 0.5 * (a + b)
    radius = 0.5 * (b - a) + margin
    degree = 256
    probe = center + radius * np.cos(np.linspace(0.0, np.pi, 2003))
    target = plateau(probe)
    while True:
        f = TestFunction1D.from_callable(plateau, center, radius, degree=degree)
        err = np.max(np.abs(f(probe) - target))
        if err <= fit_tol or degree >= max_degree:
            break
        degree *= 2
    if err > fit_tol:
        raise AccuracyError(
            f"plateau fit stalled at error {err:.2e}", best=f, estimated_error=err
        )
    return f


def deriv(f, k, t):
    """k-th derivative of a TestFunction1D at ``t`` (k <= 6)."""
    return f.deriv(k, t)


class ChebFit:
    """Plain Chebyshev fit of a smooth function on [a, b] (no support mask).

    Used for derived densities (pushforwards, principal-value transforms)
    that are smooth on an interval but not compactly supported. Valid only
    on the fit interval.
    """

    __slots__ = ("a", "b", "coefficients")

    def __init__(self, a, b, coefficients):
        self.a = float(a)
        self.b = float(b)
        self.coefficients = np.asarray(coefficients, dtype=complex if
                                       np.iscomplexobj(coefficients) else float)

    @classmethod
    def from_callable(cls, func, a, b, degree=128):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        vals = np.asarray(func(mid + half * _chebpts(degree)))
        return cls.from_values(vals, a, b)

    @classmethod
    def from_values(cls, vals, a, b):
        """Fit from values sampled at the Chebyshev points of [a, b]."""
        vals = np.asarray(vals)
        degree = len(vals) - 1
        if np.iscomplexobj(vals):
            coeffs = _chebfit_from_values(vals.real, degree).astype(complex)
            coeffs += 1j * _chebfit_from_values(vals.imag, degree)
        else:
            coeffs = _chebfit_from_values(vals, degree)
        return cls(a, b, _snip_tail_complex(coeffs))

    def __call__(self, t):
        s = (np.asarray(t, dtype=float) - 0.5 * (self.a + self.b)) / (0.5 * (self.b - self.a))
        return _kernels.series_eval(self.coefficients, s)

    def derivative(self, k=1):
        half = 0.5 * (self.b - self.a)
        return ChebFit(self.a, self.b, _cheb.chebder(self.coefficients, k) / half**k)

    def integral(self):
        """Integral over [a, b], exact from the coefficients."""
        n = np.arange(len(self.coefficients))
        weights = np.zeros(len(n))
        even = n % 2 == 0
        weights[even] = 2.0 / (1.0 - n[even] ** 2)
        return 0.5 * (self.b - self.a) * np.dot(weights, self.coefficients)


@lru_cache(maxsize=64)
def _chebpts(degree):
    # Chebyshev points of the first kind, the nodes chebinterpolate uses
    return np.cos(np.pi * (2.0 * np.arange(degree + 1) + 1.0) / (2.0 * (degree + 1)))


def _chebfit_from_values(vals, degree):
    n = degree + 1
    k = np.arange(n)
    theta = np.pi * (2.0 * k + 1.0) / (2.0 * n)
    basis = np.cos(np.outer(np.arange(n), theta))
    coeffs = (2.0 / n) * basis @ vals
    coeffs[0] *= 0.5
    return coeffs


def _snip_tail_complex(coeffs):
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return np.zeros(1, dtype=coeffs.dtype)
    keep = np.nonzero(np.abs(coeffs) > _SNIP * scale)[0]
    return np.array(coeffs[: keep[-1] + 1]) if len(keep) else np.zeros(1, dtype=coeffs.dtype)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes/weights on an interval; exact through ``order``."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @classmethod
    def gauss_legendre(cls, n, a, b):
        xi, wi = _leggauss_cached(n)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return cls(nodes=mid + half * xi, weights=half * wi, order=2 * n - 1)


@lru_cache(maxsize=32)
def _leggauss_cached(n):
    xi, wi = np.polynomial.legendre.leggauss(n)
    return xi, wi


@dataclass(frozen=True)
class PVResult:
    """A principal-value integral with a two-level refinement error estimate."""

    value: complex
    estimated_error: float


def _panel_nodes(breaks, n):
    xi, wi = _leggauss_cached(n)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    half = 0.5 * (breaks[1:] - breaks[:-1])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return nodes, weights


def _split_breaks(breaks):
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    out = np.empty(2 * len(breaks) - 1)
    out[0::2] = breaks
    out[1::2] = mid
    return out


def _composite_refine(f, breaks, rel_tol, abs_tol=1e-14, order=16, max_levels=12):
    """Composite Gauss-Legendre on the given panels, halving panels until two
    consecutive levels agree. Returns (value, error_estimate)."""
    breaks = np.asarray(breaks, dtype=float)
    nodes, weights = _panel_nodes(breaks, order)
    prev = np.sum(weights * f(nodes))
    for _ in range(max_levels):
        breaks = _split_breaks(breaks)
        nodes, weights = _panel_nodes(breaks, order)
        cur = np.sum(weights * f(nodes))
        err = abs(cur - prev)
        if err <= max(abs_tol, rel_tol * abs(cur)):
            return cur, err
        prev = cur
    raise AccuracyError(
        f"integration did not converge to rel_tol={rel_tol:g} "
        f"(last change {err:.3e})", best=cur, estimated_error=err,
    )


def integrate(f, a, b, rel_tol=REL_TOL_REGULAR, abs_tol=1e-14, order=16,
              max_levels=12, breakpoints=()):
    """Integral of a vectorized callable over [a, b].

    Panels refine until two levels agree within tolerance; non-convergence
    raises AccuracyError carrying the best estimate. Extra interior
    ``breakpoints`` seed the initial panel set (useful when f is only
    piecewise smooth).
    """
    if not b > a:
        if b == a:
            return 0.0
        raise DomainError(f"need a < b, got [{a}, {b}]")
    pts = [a] + [p for p in sorted(breakpoints) if a < p < b] + [b]
    value, _ = _composite_refine(f, np.array(pts), rel_tol, abs_tol, order, max_levels)
    return value


def graded_breaks(a, b, point, min_width, ratio=2.0):
    """Panel breakpoints on [a, b] geometrically graded toward ``point``.

    The panels adjacent to ``point`` (or to the endpoint nearest it when the
    point lies outside) have width about ``min_width``.
    """
    if not b > a:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    out = {a, b}

    def ladder(start, stop):
        # steps from `start` toward `stop` with geometrically growing width
        width = min_width
        t = start
        pts = []
        direction = 1.0 if stop > start else -1.0
        while (stop - t) * direction > 1.5 * width:
            t = t + direction * width
            pts.append(t)
            width *= ratio
        return pts

    if a < point < b:
        out.add(point)
        out.update(ladder(point, a))
        out.update(ladder(point, b))
    else:
        nearest = a if point <= a else b
        far = b if point <= a else a
        out.update(ladder(nearest, far))
    return np.array(sorted(out))


def pv_integrate(density, pole, a, b, rel_tol=REL_TOL_PV, abs_tol=1e-14,
                 order=16, max_levels=12):
    """PV integral of density(w)/(pole - w) over [a, b].

    Interior poles use the subtraction method: the smooth difference quotient
    (density(w) - density(pole))/(pole - w) is integrated by panels split at
    the pole, and the analytic term density(pole) * ln|(pole-a)/(b-pole)| is
    added. A pole outside (a, b) makes the integral regular and it is
    computed directly.
    """
    if not b > a:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    if not (a < pole < b):
        min_w = min(1e-3 * (b - a), max(1e-8, 0.25 * min(abs(pole - a), abs(pole - b))))
        breaks = graded_breaks(a, b, pole, min_w)
        value, err = _composite_refine(
            lambda w: density(w) / (pole - w), breaks, rel_tol, abs_tol,
            order=order, max_levels=max_levels,
        )
        return PVResult(value=value, estimated_error=err)

    rho0 = density(np.array([pole]))[0]

    def subtracted(w):
        return (density(w) - rho0) / (pole - w)

    breaks = np.array([a, pole, b])
    value, err = _composite_refine(subtracted, breaks, rel_tol, abs_tol,
                                   order=order, max_levels=max_levels)
    value = value + rho0 * np.log(abs((pole - a) / (b - pole)))
    return PVResult(value=value, estimated_error=err)


def _side_sign(side):
    if side in (1, "+", "+1", "plus"):
        return 1.0
    if side in (-1, "-", "-1", "minus"):
        return -1.0
    raise DomainError(f"side must be '+' or '-', got {side!r}")


def plemelj_bracket(density, x, side, a, b, rel_tol=REL_TOL_PV):
    """Boundary value integral density(w)/(x +- i0 - w) over [a, b].

    Sokhotski-Plemelj: the result is the PV integral minus (side) i*pi times
    the density at x. Requires x strictly inside (a, b).
    """
    if not (a < x < b):
        raise BoundaryError(
            f"plemelj_bracket needs a < x < b (got x={x} on [{a}, {b}]); "
            "outside the interval the integral is regular"
        )
    sign = _side_sign(side)
    pv = pv_integrate(density, x, a, b, rel_tol=rel_tol)
    rho_x = density(np.array([x]))[0]
    return pv.value - sign * 1j * np.pi * rho_x


def extrapolate_to_zero(xs, ys):
    """Neville polynomial extrapolation of samples (xs, ys) to x = 0."""
    xs = np.asarray(xs, dtype=float)
    ys = list(np.asarray(ys, dtype=complex))
    n = len(xs)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            ys[i] = (xs[i] * ys[i - 1] - xs[i - j] * ys[i]) / (xs[i] - xs[i - j])
    return ys[n - 1]


def plemelj_epsilon_oracle(density, x, side, a, b, eps_ladder=(1e-2, 1e-3, 1e-4),
                           rel_tol=1e-9):
    """Independent check of `plemelj_bracket` by the epsilon limit.

    Evaluates the regular integrals density(w)/(x +- i eps - w) on a ladder of
    eps values and Richardson-extrapolates to eps = 0.
    """
    sign = _side_sign(side)
    vals = []
    for eps in eps_ladder:
        z = x + sign * 1j * eps

        def f(w):
            return density(w) / (z - w)

        breaks = graded_breaks(a, b, x, min_width=eps / 4.0)
        val, _ = _composite_refine(f, breaks, rel_tol, max_levels=8)
        vals.append(val)
    return extrapolate_to_zero(np.asarray(eps_ladder), vals)
