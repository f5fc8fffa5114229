"""Two-dimensional distribution algebra on the complex plane.

Test functions on C are finite sums of separable terms c * fX(x) * fY(y)
with compactly supported smooth 1D factors; the class is closed under
products, multiplication by z, and Wirtinger derivatives, which is all the
smearing calculus downstream needs. Distribution atoms (delta derivatives,
principal-value powers, plain densities) act on test functions through
quadrature; the principal-value powers follow the annulus-limit definition
with Richardson extrapolation in the excluded radius.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import AccuracyError, CapabilityError, DomainError
from .quadrature import (
    DERIV_CAP,
    ChebFit,
    TestFunction1D,
    _leggauss_cached,
    extrapolate_to_zero,
    graded_breaks,
    integrate,
    make_bump,
    pv_integrate,
)


class TestFunction2D:
    """Smooth compactly supported function on C.

    Stored as a list of separable terms (coeff, factor_x, factor_y) meaning
    sum_k c_k * fX_k(x) * fY_k(y) at z = x + iy. A plain product bump is a
    single term; z*phi and products of test functions produce more terms but
    stay in the class.
    """

    __slots__ = ("terms",)

    def __init__(self, factor_x, factor_y, coeff=1.0):
        self.terms = [(complex(coeff), factor_x, factor_y)]

    @classmethod
    def from_terms(cls, terms):
        obj = cls.__new__(cls)
        obj.terms = [(complex(c), fx, fy) for c, fx, fy in terms]
        return obj

    @property
    def factor_x(self):
        if len(self.terms) != 1:
            raise DomainError("factor_x is defined only for single-product functions")
        return self.terms[0][1]

    @property
    def factor_y(self):
        if len(self.terms) != 1:
            raise DomainError("factor_y is defined only for single-product functions")
        return self.terms[0][2]

    def support_rect(self):
        """Hull (ax, bx, ay, by) of the term supports."""
        ax = min(fx.support[0] for _, fx, _ in self.terms)
        bx = max(fx.support[1] for _, fx, _ in self.terms)
        ay = min(fy.support[0] for _, _, fy in self.terms)
        by = max(fy.support[1] for _, _, fy in self.terms)
        return (ax, bx, ay, by)

    def eval_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = None
        for c, fx, fy in self.terms:
            term = c * fx(x) * fy(y)
            out = term if out is None else out + term
        return out

    def eval_outer(self, x, y):
        """Values on the tensor grid x (outer) times y (inner)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = None
        for c, fx, fy in self.terms:
            term = c * np.outer(fx(x), fy(y))
            out = term if out is None else out + term
        return out

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return self.eval_xy(z.real, z.imag)

    def partial_xy(self, kx, ky, x, y):
        """Mixed partial d^kx/dx^kx d^ky/dy^ky at (x, y)."""
        out = None
        for c, fx, fy in self.terms:
            term = c * fx.deriv(kx, x) * fy.deriv(ky, y)
            out = term if out is None else out + term
        return out

    def wirtinger(self, k, z):
        """Holomorphic derivative (d/dz)^k = (1/2 (d/dx - i d/dy))^k at z."""
        if k > DERIV_CAP:
            raise CapabilityError(f"derivative order {k} exceeds supported cap {DERIV_CAP}")
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        total = 0.0
        for j in range(k + 1):
            total = total + comb(k, j) * (-1j) ** j * self.partial_xy(k - j, j, x, y)
        return total / 2.0**k

    def dbar_value(self, z):
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        return 0.5 * (self.partial_xy(1, 0, x, y) + 1j * self.partial_xy(0, 1, x, y))

    def dbar(self):
        """The conjugate derivative as a new TestFunction2D."""
        terms = []
        for c, fx, fy in self.terms:
            terms.append((0.5 * c, fx.derivative(1), fy))
            terms.append((0.5j * c, fx, fy.derivative(1)))
        return TestFunction2D.from_terms(terms)

    def times_z(self):
        """The function z -> z * phi(z)."""
        terms = []
        for c, fx, fy in self.terms:
            terms.append((c, fx.times_identity(), fy))
            terms.append((1j * c, fx, fy.times_identity()))
        return TestFunction2D.from_terms(terms)

    def multiply(self, other):
        terms = []
        for c1, fx1, fy1 in self.terms:
            for c2, fx2, fy2 in other.terms:
                fx = fx1.multiply(fx2)
                fy = fy1.multiply(fy2)
                if not (fx.is_zero() or fy.is_zero()):
                    terms.append((c1 * c2, fx, fy))
        if not terms:
            zero = TestFunction1D(0.0, 1.0, np.zeros(1))
            terms = [(0.0, zero, zero)]
        return TestFunction2D.from_terms(terms)

    def scaled(self, coeff):
        return TestFunction2D.from_terms(
            [(c * coeff, fx, fy) for c, fx, fy in self.terms]
        )

    def restrict_real(self):
        """The slice x -> phi(x + i*0) as a callable of a real array."""
        return lambda x: self.eval_xy(np.asarray(x, dtype=float), 0.0)

    def __repr__(self):
        return f"TestFunction2D({len(self.terms)} term(s), rect={self.support_rect()})"


class Evaluable2D:
    """Adapter giving an arbitrary callable the 2D test-function surface
    needed by the quadrature paths (values + a bounding rectangle)."""

    __slots__ = ("_func", "_rect")

    def __init__(self, func, rect):
        self._func = func
        self._rect = tuple(float(v) for v in rect)

    def support_rect(self):
        return self._rect

    def eval_xy(self, x, y):
        return self._func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def eval_outer(self, x, y):
        X, Y = np.meshgrid(np.asarray(x, dtype=float), np.asarray(y, dtype=float),
                           indexing="ij")
        return self._func(X, Y)


def make_product_bump(center, radius_x, radius_y):
    """Product bump centered at a complex point."""
    center = complex(center)
    return TestFunction2D(make_bump(center.real, radius_x),
                          make_bump(center.imag, radius_y))


def dbar(phi, z):
    """Conjugate derivative (1/2)(d/dx + i d/dy) of phi at z."""
    return phi.dbar_value(z)


@dataclass(frozen=True)
class DistAtom:
    """One atom of a distribution on C.

    kind: 'delta_deriv' (coefficient * d^k delta(z - point)),
          'pv_power'    (coefficient * PV / (z - point)^(order+1)),
          'density2d'   (coefficient * density(z) d2z on rect).
    The coefficient may be a scalar or a matrix.
    """

    kind: str
    point: complex = 0.0
    order: int = 0
    coefficient: object = 1.0
    density: object = None
    rect: tuple = None


def _tensor_quad(phi, rect, rel_tol=1e-9, order=12, max_levels=7, kernel=None):
    """Tensor-product Gauss-Legendre over a rectangle with joint refinement.

    ``kernel``, if given, maps the complex mesh to extra factor values.
    """
    ax, bx, ay, by = rect
    if bx <= ax or by <= ay:
        return 0.0
    xi, wi = _leggauss_cached(order)
    nx = ny = 2
    prev = None
    for _ in range(max_levels):
        ex = np.linspace(ax, bx, nx + 1)
        ey = np.linspace(ay, by, ny + 1)
        xm, xh = 0.5 * (ex[1:] + ex[:-1]), 0.5 * (ex[1:] - ex[:-1])
        ym, yh = 0.5 * (ey[1:] + ey[:-1]), 0.5 * (ey[1:] - ey[:-1])
        xs = (xm[:, None] + xh[:, None] * xi[None, :]).ravel()
        ws_x = (xh[:, None] * wi[None, :]).ravel()
        ys = (ym[:, None] + yh[:, None] * xi[None, :]).ravel()
        ws_y = (yh[:, None] * wi[None, :]).ravel()
        vals = phi.eval_outer(xs, ys)
        if kernel is not None:
            vals = vals * kernel(xs[:, None] + 1j * ys[None, :])
        cur = ws_x @ vals @ ws_y
        if prev is not None:
            err = abs(cur - prev)
            if err <= max(1e-15, rel_tol * max(abs(cur), 1e-30)):
                return cur
        prev = cur
        nx *= 2
        ny *= 2
    raise AccuracyError("2D tensor quadrature did not converge",
                        best=cur, estimated_error=err)


def _polar_radial_profile(phi, z0, kplus1, rho, ntheta):
    """Angular transforms g(rho) = int phi(z0 + rho e^{i t}) e^{-i kplus1 t} dt."""
    theta = 2.0 * np.pi * np.arange(ntheta) / ntheta
    phase = np.exp(-1j * kplus1 * theta) * (2.0 * np.pi / ntheta)
    xs = z0.real + np.outer(rho, np.cos(theta))
    ys = z0.imag + np.outer(rho, np.sin(theta))
    vals = phi.eval_xy(xs, ys)
    return vals @ phase


def _polar_panels(phi, z0, kplus1, breaks, order=24, ntheta=96):
    """Per-panel radial integrals of g(rho) * rho^(1-kplus1) on the given
    radial panels, with one internal theta/order refinement check."""
    xi, wi = _leggauss_cached(order)

    def panel_values(nth):
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        half = 0.5 * (breaks[1:] - breaks[:-1])
        rho = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
        wr = (half[:, None] * wi[None, :]).ravel()
        g = _polar_radial_profile(phi, z0, kplus1, rho, nth)
        contrib = g * rho ** (1 - kplus1) * wr
        return contrib.reshape(len(breaks) - 1, order).sum(axis=1)

    coarse = panel_values(ntheta)
    fine = panel_values(2 * ntheta)
    err = float(np.sum(np.abs(fine - coarse)))
    return fine, err


def cauchy_transform(phi, z, rel_tol=1e-9):
    """(r * phi)(z) = integral of phi(w)/(z - w) over the plane.

    Far from the support the kernel is smooth and a tensor rule is used;
    inside or near the support the integral switches to polar coordinates
    about z, where the Jacobian removes the 1/|w - z| singularity.
    """
    z = complex(z)
    ax, bx, ay, by = phi.support_rect()
    dx = max(ax - z.real, 0.0, z.real - bx)
    dy = max(ay - z.imag, 0.0, z.imag - by)
    dist = np.hypot(dx, dy)
    size = max(bx - ax, by - ay)
    if dist > 0.75 * size:
        return _tensor_quad(phi, (ax, bx, ay, by), rel_tol=rel_tol,
                            kernel=lambda w: 1.0 / (z - w))
    corners = [complex(ax, ay), complex(ax, by), complex(bx, ay), complex(bx, by)]
    rmax = max(abs(z - c) for c in corners)
    nseg = 8
    breaks = rmax * (np.arange(nseg + 1) / nseg)
    prev = None
    order, ntheta = 16, 64
    for _ in range(5):
        vals, _ = _polar_panels(phi, z, 1, breaks, order=order, ntheta=ntheta)
        cur = -np.sum(vals)
        if prev is not None and abs(cur - prev) <= max(1e-14, rel_tol * abs(cur)):
            return cur
        prev = cur
        breaks = np.sort(np.concatenate([breaks, 0.5 * (breaks[1:] + breaks[:-1])]))
        order = min(order + 8, 32)
        ntheta *= 2
    raise AccuracyError("cauchy transform did not converge",
                        best=cur, estimated_error=abs(cur - prev))


def _pv_power_ladder(order):
    # smallest excluded radius is limited by angular cancellation noise
    # amplified like rho^(-order); shift the ladder up for high orders
    if order <= 1:
        return (1e-1, 1e-2, 1e-3, 1e-4)
    if order <= 3:
        return (1e-1, 3e-2, 1e-2, 3e-3)
    return (4e-1, 3e-1, 2e-1, 1e-1)


def atom_apply(atom, phi, rel_tol=1e-9):
    """Action of a distribution atom on a test function.

    delta_deriv: coefficient * (-1)^k (d/dz)^k phi at the point.
    pv_power:    annulus-excluded limit of phi(z)/(z - point)^(order+1),
                 Richardson-extrapolated in the excluded radius.
    density2d:   plain 2D quadrature of density * phi.
    """
    if atom.order > DERIV_CAP:
        raise CapabilityError(f"atom order {atom.order} exceeds supported cap {DERIV_CAP}")
    if atom.kind == "delta_deriv":
        k = atom.order
        val = (-1.0) ** k * phi.wirtinger(k, atom.point)
        return np.multiply(atom.coefficient, complex(val))
    if atom.kind == "pv_power":
        val = pv_power_apply(phi, complex(atom.point), atom.order, rel_tol=rel_tol)
        return np.multiply(atom.coefficient, val)
    if atom.kind == "density2d":
        ax, bx, ay, by = atom.rect if atom.rect is not None else phi.support_rect()
        px, qx, py, qy = phi.support_rect()
        rect = (max(ax, px), min(bx, qx), max(ay, py), min(by, qy))
        if rect[1] <= rect[0] or rect[3] <= rect[2]:
            return np.multiply(atom.coefficient, 0.0)
        dens = atom.density

        def f(x, y):
            return phi.eval_xy(x, y) * dens(x + 1j * y)

        val = _tensor_quad(Evaluable2D(f, rect), rect, rel_tol=rel_tol)
        return np.multiply(atom.coefficient, complex(val))
    raise DomainError(f"unknown atom kind {atom.kind!r}")


def pv_power_apply(phi, z0, order, rel_tol=1e-9, eps_ladder=None):
    """Annulus-limit value of    lim  int_{|z-z0|>eps} phi(z)/(z-z0)^(order+1) d2z.

    The radial panels share one grid whose interior breakpoints are the eps
    ladder; partial sums give the annulus values and the limit comes from
    Neville extrapolation in eps^2 (the error expansion is even in eps).
    """
    z0 = complex(z0)
    ax, bx, ay, by = phi.support_rect()
    corners = [complex(ax, ay), complex(ax, by), complex(bx, ay), complex(bx, by)]
    rmax = max(abs(z0 - c) for c in corners)
    ladder = np.asarray(eps_ladder if eps_ladder is not None else _pv_power_ladder(order))
    ladder = np.sort(ladder[ladder < rmax])[::-1]
    if len(ladder) == 0:
        return 0.0 + 0.0j
    outer = np.geomspace(ladder[0], rmax, 12)[1:]
    breaks = np.concatenate([ladder[::-1], outer])

    def annulus_values(brks, order_gl, nth):
        vals, err = _polar_panels(phi, z0, order + 1, brks, order=order_gl, ntheta=nth)
        return vals, err

    order_gl, nth = 24, 96
    prev = None
    for _ in range(4):
        vals, _ = annulus_values(breaks, order_gl, nth)
        # partial sums from each ladder point outwards
        idx = [int(np.searchsorted(breaks, e)) for e in ladder]
        annuli = np.array([np.sum(vals[i:]) for i in idx])
        cur = extrapolate_to_zero(ladder**2, annuli)
        if prev is not None and abs(cur - prev) <= max(1e-13, rel_tol * abs(cur)):
            return cur
        prev = cur
        breaks = np.sort(np.concatenate([breaks, 0.5 * (breaks[1:] + breaks[:-1])]))
        nth *= 2
    if abs(cur - prev) > max(1e-10, 1e3 * rel_tol * abs(cur)):
        raise AccuracyError("annulus-limit quadrature did not converge",
                            best=cur, estimated_error=abs(cur - prev))
    return cur


def _cauchy_lower(f, support, omega, eps, order=24):
    """int f(x) / (x - omega + i eps) dx with panels graded toward omega."""
    a, b = support
    breaks = graded_breaks(a, b, omega, min_width=max(eps / 4.0, 1e-9))
    xi, wi = _leggauss_cached(order)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    half = 0.5 * (breaks[1:] - breaks[:-1])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return np.sum(weights * f(nodes) / (nodes - omega + 1j * eps))


def pv_product_check(f, g, h, eps_ladder=(1e-2, 1e-3, 1e-4), rel_tol=1e-7):
    """Both sides of the product identity for two principal-value kernels
    sharing the integration variable:

        PV/(x-w) * PV/(y-w) = (PV/(x-w) - PV/(y-w))/(y-x) + pi^2 d(x-w) d(y-w)

    smeared with f(x) g(y) h(w). Each PV factor on the left is regularized
    separately by (x-w)/((x-w)^2 + e^2) and the product extrapolated in e;
    the regularized factor is the real part of the 1D Cauchy transform at
    w - ie, so the triple integral factorizes into 1D transforms. The right
    side combines the smooth difference quotient of the PV transform of h
    with the triple overlap term. Returns (lhs, rhs).
    """
    ah, bh = h.support
    af, bf = f.support
    ag, bg = g.support

    def lhs_at(eps):
        def integrand(omegas):
            out = np.empty(len(omegas))
            for i, w in enumerate(omegas):
                cf = _cauchy_lower(f, (af, bf), w, eps)
                cg = _cauchy_lower(g, (ag, bg), w, eps)
                out[i] = cf.real * cg.real
            return h(omegas) * out

        return integrate(integrand, ah, bh, rel_tol=1e-9, order=16,
                         max_levels=6).real

    lhs = complex(extrapolate_to_zero(np.asarray(eps_ladder),
                                      [lhs_at(e) for e in eps_ladder])).real

    # PV transform of h, fitted once on the hull of the f and g supports
    lo, hi = min(af, ag), max(bf, bg)
    ph = ChebFit.from_callable(
        lambda ts: np.array([pv_integrate(h, float(t), ah, bh).value
                             for t in np.atleast_1d(ts)]),
        lo, hi, degree=160,
    )
    ph_prime = ph.derivative(1)

    def quotient(x, y):
        d = y - x
        near = np.abs(d) < 1e-9
        safe = np.where(near, 1.0, d)
        q = (ph(x) - ph(y)) / safe
        if np.any(near):
            q = np.where(near, -ph_prime(0.5 * (x + y)), q)
        return q

    smooth = _tensor_quad(
        Evaluable2D(lambda X, Y: f(X) * g(Y) * quotient(X, Y), (af, bf, ag, bg)),
        (af, bf, ag, bg), rel_tol=1e-9,
    )
    lo3 = max(af, ag, ah)
    hi3 = min(bf, bg, bh)
    if hi3 > lo3:
        overlap = integrate(lambda w: f(w) * g(w) * h(w), lo3, hi3, rel_tol=1e-11)
    else:
        overlap = 0.0
    rhs = complex(smooth).real + np.pi**2 * overlap
    return lhs, rhs
