"""Rank-one perturbation H = Omega + |g><h| of the multiplication operator.

Everything reduces to brackets of the unperturbed resolvent through the
scalar function C(z) = 1 - <h| (z - Omega)^-1 |g>:

* off the slit P(K), the perturbed resolvent bracket is Krein's formula;
* on the slit, C jumps to C1(x) +- i pi C2(x) given by the PV and delta
  brackets, and the continuous spectral density kappa(x) assembles from the
  bra/ket functionals A, A', B, B';
* eigenvalues are zeros of C, found by the argument principle and polished
  by Newton; a double zero at the origin yields a Jordan pair (p0, a) built
  from inverse-moment integrals.

The two-slit mirror-symmetric model (example2) drives all three regimes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneracyError,
    DegeneratePoleError,
    DomainError,
    NearPoleError,
    RegimeError,
    SearchError,
    SpectralSingularityError,
)
from .multop import (
    DomainG,
    MultOpModel,
    ProfileP,
    StateFunction,
    bracket_delta,
    inner_product,
    level_set,
    pushforward,
)
from .quadrature import (
    _composite_refine,
    _leggauss_cached,
    extrapolate_to_zero,
    graded_breaks,
    integrate,
    make_bump,
    pv_integrate,
)

IMAGINARY_PAIR = "imaginary_pair"
REAL_PAIR = "real_pair"
JORDAN_AT_ZERO = "jordan_at_zero"
UNDETERMINED = "undetermined"

#: |C(0)| and |C'(0)| below this flag a double zero
DOUBLE_ZERO_TOL = 1e-8

#: C2 magnitudes below this take the delta-only branch of kappa
C2_FLOOR = 1e-12


class Perturbation:
    """Real rank-one perturbation data |g><h| with supports compact in G."""

    def __init__(self, g, h, model=None):
        if not (g.is_real() and h.is_real()):
            raise DomainError("g and h must be real-valued")
        self.g = g
        self.h = h
        if model is not None:
            for state in (g, h):
                lo, hi = state.support_hull()
                for _, bump_fn in state.terms:
                    blo, bhi = bump_fn.support
                    if not model.domain.contains_support(blo, bhi):
                        raise DomainError(
                            f"perturbation support [{blo:.6g}, {bhi:.6g}] "
                            "is not compact in the domain")

    def slit_intervals(self, model):
        """P-images of the pieces of supp(g h): the jump set of C."""
        segs = _common_support(self.g, self.h)
        out = []
        for piece in model.pieces:
            for slo, shi in segs:
                lo, hi = max(piece.lo, slo), min(piece.hi, shi)
                if hi <= lo:
                    continue
                vals = model.profile(np.array([lo, hi]))
                out.append((float(np.min(vals)), float(np.max(vals))))
        return out


def _segments_of(state):
    if hasattr(state, "support_segments"):
        return state.support_segments()
    if hasattr(state, "support_hull"):
        return [state.support_hull()]
    return None


def _common_support(f1, f2):
    """Intersection segments of two states' supports (None if unknown)."""
    s1, s2 = _segments_of(f1), _segments_of(f2)
    if s1 is None or s2 is None:
        return None
    out = []
    for lo1, hi1 in s1:
        for lo2, hi2 in s2:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi > lo:
                out.append((lo, hi))
    return out if out else [(0.0, 0.0)]


def _range_cauchy(fit, a, b, z, power=1, rel_tol=1e-10):
    """integral of fit(w) / (z - w)^power over [a, b] for complex z."""
    z = complex(z)
    x = min(max(z.real, a), b)
    dist = abs(z - complex(x, 0.0))
    if dist == 0.0:
        raise DomainError(f"resolvent kernel evaluated on the cut at z={z}")
    if dist >= 0.25 * (b - a):
        breaks = np.array([a, b])
        levels = 8
    else:
        breaks = graded_breaks(a, b, x, min_width=max(dist / 4.0, 1e-9))
        levels = 4
    val, _ = _composite_refine(lambda w: fit(w) / (z - w) ** power, breaks,
                               rel_tol, max_levels=levels)
    return val


class PairDensity:
    """Cached pushforward of conj(f1) * f2 with resolvent-type brackets.

    at(z)    -> <f1| (z - Omega)^-power |f2>
    pv(x)    -> <f1| PV/(x - Omega) |f2>
    delta(x) -> <f1| delta(x - Omega) |f2>

    Points at distance >= 0.1 interval lengths from a range use a fixed
    Gauss grid shared across calls (vectorized over z); closer points fall
    back to per-point graded panels.
    """

    _FAR_FACTOR = 0.1

    def __init__(self, model, f1, f2, degree=200):
        self.model = model
        self.f1 = f1
        self.f2 = f2
        self.density = pushforward(
            model, lambda y: np.conj(np.asarray(f1(y))) * np.asarray(f2(y)),
            degree=degree, support=_common_support(f1, f2))
        self._far = []
        xi, wi = _leggauss_cached(24)
        for rlo, rhi, fit in self.density.fits:
            edges = np.linspace(rlo, rhi, 9)
            mid = 0.5 * (edges[1:] + edges[:-1])
            half = 0.5 * (edges[1:] - edges[:-1])
            nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
            weights = (half[:, None] * wi[None, :]).ravel()
            self._far.append((nodes, weights * fit(nodes)))

    def at_many(self, zs, power=1):
        zs = np.asarray(zs, dtype=complex)
        flat = np.atleast_1d(zs).ravel()
        out = np.zeros(flat.shape, dtype=complex)
        for (rlo, rhi, fit), (nodes, wvals) in zip(self.density.fits, self._far):
            clip = np.clip(flat.real, rlo, rhi)
            dist = np.abs(flat - clip)
            far = dist >= self._FAR_FACTOR * (rhi - rlo)
            if np.any(far):
                kern = 1.0 / (flat[far][:, None] - nodes[None, :]) ** power
                out[far] += kern @ wvals
            for i in np.nonzero(~far)[0]:
                out[i] += _range_cauchy(fit, rlo, rhi, flat[i], power=power)
        return out.reshape(zs.shape) if zs.shape else out[0]

    def at(self, z, power=1):
        return self.at_many(complex(z), power=power)

    def pv(self, x):
        total = 0.0
        for rlo, rhi, fit in self.density.fits:
            total += pv_integrate(fit, float(x), rlo, rhi).value
        return total

    def delta(self, x):
        return bracket_delta(self.model, self.f1, self.f2, x)


class BracketSession:
    """All pair densities needed for perturbed brackets of one probe pair."""

    def __init__(self, model, pert, f1, f2):
        self.model = model
        self.pert = pert
        self.d_hg = PairDensity(model, pert.h, pert.g)
        self.d_12 = PairDensity(model, f1, f2)
        self.d_1g = PairDensity(model, f1, pert.g)
        self.d_h2 = PairDensity(model, pert.h, f2)

    def c_at(self, z):
        return 1.0 - self.d_hg.at(z)

    def resolvent(self, z):
        c = self.c_at(z)
        if abs(c) < 1e-12:
            raise NearPoleError(f"C(z) = {c:.3e} at z = {z}: too close to a pole")
        return self.d_12.at(z) + self.d_1g.at(z) * self.d_h2.at(z) / c

    def resolvent_many(self, zs):
        c = 1.0 - self.d_hg.at_many(zs)
        if np.any(np.abs(c) < 1e-12):
            bad = np.asarray(zs)[np.abs(c) < 1e-12]
            raise NearPoleError(f"C vanishes near z = {bad[0]}")
        return self.d_12.at_many(zs) \
            + self.d_1g.at_many(zs) * self.d_h2.at_many(zs) / c

    def kappa(self, x):
        return _kappa_from_parts(
            x,
            c1=1.0 - self.d_hg.pv(x), c2=self.d_hg.delta(x),
            d12=self.d_12.delta(x), pv1g=self.d_1g.pv(x),
            pvh2=self.d_h2.pv(x), d1g=self.d_1g.delta(x),
            dh2=self.d_h2.delta(x),
            b_dead=_level_values_vanish(self.model, self.pert.g, x),
            bp_dead=_level_values_vanish(self.model, self.pert.h, x),
        )


def _level_values_vanish(model, state, x, tol=1e-6):
    """Whether the state's level-set delta-ket is numerically negligible.

    The threshold is generous because the dropped kappa corrections carry
    one such factor each: values at 1e-6 contribute below the density
    tolerances. A genuine regime violation (C2 = 0 by cancellation between
    level-set points while g, h stay of order one) still trips the check.
    """
    ls = level_set(model, x)
    return all(abs(complex(np.asarray(state(y)).item())) * w <= tol
               for y, w in ls.points)


@dataclass(frozen=True)
class CBoundary:
    """Boundary values of C on the slit: C(x +- i0) = C1 +- i pi C2."""

    x: float
    C1: float
    C2: float

    @property
    def plus(self):
        return self.C1 + 1j * np.pi * self.C2

    @property
    def minus(self):
        return self.C1 - 1j * np.pi * self.C2

    @property
    def modulus_squared(self):
        return self.C1**2 + np.pi**2 * self.C2**2


def _on_slit(pert, model, z, pad=0.0):
    if z.imag != 0.0:
        return False
    return any(lo - pad <= z.real <= hi + pad
               for lo, hi in pert.slit_intervals(model))


def c_value(model, pert, z, density=None):
    """Krein's scalar C(z) = 1 - <h| (z - Omega)^-1 |g> off the slit."""
    z = complex(z)
    if _on_slit(pert, model, z):
        raise DomainError(
            f"z = {z} lies on the slit; use c_boundary for the jump values")
    d = density if density is not None else PairDensity(model, pert.h, pert.g)
    return 1.0 - d.at(z)


def c_boundary(model, pert, x, density=None):
    """Jump data of C on the real axis at x."""
    d = density if density is not None else PairDensity(model, pert.h, pert.g)
    return CBoundary(x=float(x), C1=float(np.real(1.0 - d.pv(x))),
                     C2=float(np.real(d.delta(x))))


def krein_resolvent_bracket(model, pert, z, f1, f2, session=None):
    """<f1| R(z) |f2> by Krein's formula at a regular point z."""
    s = session if session is not None else BracketSession(model, pert, f1, f2)
    if _on_slit(pert, model, complex(z)):
        raise DomainError(f"z = {z} lies on the slit")
    return s.resolvent(complex(z))


def apply_h(model, pert, f):
    """The perturbed operator applied to a state: H f = P f + g <h|f>."""
    coupling = inner_product(model, pert.h, f)

    def hf(y):
        y = np.asarray(y, dtype=float)
        return model.profile(y) * np.asarray(f(y)) + np.asarray(pert.g(y)) * coupling

    return hf


def resolvent_smear(model, pert, phi, f1, f2, eps_ladder=(1e-1, 1e-2, 1e-3),
                    session=None, x_order=12, u_order=12):
    """Smeared perturbed resolvent  lim  int_{|u|>eps} <f1|R(x+iu)|f2> phi.

    The u-panels share one grid whose interior breakpoints are the epsilon
    ladder; partial sums give the excluded-strip integrals and the limit is
    Neville-extrapolated in epsilon.
    """
    s = session if session is not None else BracketSession(model, pert, f1, f2)
    ax, bx, ay, by = phi.support_rect()
    u_max = max(abs(ay), abs(by))
    ladder = np.sort(np.asarray(eps_ladder))
    if ladder[0] <= 0 or ladder[-1] >= u_max:
        raise DomainError("epsilon ladder must sit inside the u-support")

    outer = []
    w = ladder[-1]
    while w < u_max:
        outer.append(min(2 * w, u_max))
        w *= 2
    breaks = np.concatenate([ladder, outer])
    breaks = np.unique(breaks)


    xi, wi = _leggauss_cached(u_order)

    def x_integral(u):
        def f(xs):
            return s.resolvent_many(xs + 1j * u) \
                * phi.eval_xy(xs, np.full_like(xs, u))

        val, _ = _composite_refine(f, np.array([ax, bx]), 1e-8, max_levels=5,
                                   order=x_order)
        return val

    panel_vals = np.zeros(len(breaks) - 1, dtype=complex)
    for i in range(len(breaks) - 1):
        mid = 0.5 * (breaks[i] + breaks[i + 1])
        half = 0.5 * (breaks[i + 1] - breaks[i])
        for node, weight in zip(mid + half * xi, half * wi):
            panel_vals[i] += weight * (x_integral(node) + x_integral(-node))

    vals = []
    for e in ladder:
        i = int(np.searchsorted(breaks, e))
        vals.append(np.sum(panel_vals[i:]))
    return extrapolate_to_zero(ladder, vals)


def _kappa_from_parts(x, c1, c2, d12, pv1g, pvh2, d1g, dh2, b_dead, bp_dead):
    dsq = c1 * c1 + np.pi**2 * c2 * c2
    if dsq <= 1e-20:
        raise SpectralSingularityError(
            f"|C(x +- i0)|^2 = {dsq:.3e} vanishes at x = {x}")
    if abs(c2) <= C2_FLOOR:
        if b_dead and bp_dead:
            # all correction terms carry a factor C2, B or B': the density
            # collapses to the plain delta bracket here
            return d12
        raise RegimeError(
            f"C2(x) = 0 at x = {x} while the delta-brackets of g/h do not "
            "vanish; the density factorization is undefined there")
    return d12 + (pv1g * c2 * pvh2 + pv1g * c1 * dh2 + d1g * c1 * pvh2
                  - np.pi**2 * d1g * c2 * dh2) / dsq


def kappa_bracket(model, pert, x, f1, f2, session=None):
    """<f1| kappa(x) |f2>: the continuous spectral density bracket."""
    s = session if session is not None else BracketSession(model, pert, f1, f2)
    return s.kappa(float(x))


@dataclass(frozen=True)
class AlphaDyad:
    """Unnormalized generalized eigenvector dyad at a point of the slit.

    kappa(x) = p(x) + coefficient * |ket><bra| with the single complex
    coefficient 1/((C1^2 + pi^2 C2^2) C2); no square root is ever taken.
    """

    x: float
    boundary: CBoundary
    ket_parts: tuple  # (C1-weighted delta part, C2-weighted PV part) closures
    bra_parts: tuple
    coefficient: complex

    def ket_bracket(self, f1):
        """<f1 | ket> = C1 <f1|d(x-W)|g> + C2 <f1|PV/(x-W)|g>."""
        dpart, pvpart = self.ket_parts
        return self.boundary.C1 * dpart(f1) + self.boundary.C2 * pvpart(f1)

    def bra_bracket(self, f2):
        dpart, pvpart = self.bra_parts
        return self.boundary.C1 * dpart(f2) + self.boundary.C2 * pvpart(f2)


def alpha_dyad(model, pert, x):
    """The |alpha><alpha'| factorization data of kappa at x (needs C2 != 0).

    Returns an AlphaDyad carrying the unnormalized ket/bra functionals and
    the complex coefficient; p(x) brackets come from p_bracket.
    """
    boundary = c_boundary(model, pert, x)
    if abs(boundary.C2) <= C2_FLOOR:
        raise RegimeError(
            f"C2({x}) = 0: kappa reduces to the delta bracket, no dyad")
    dsq = boundary.modulus_squared
    if dsq <= C2_FLOOR**2:
        raise SpectralSingularityError(f"|C(x +- i0)|^2 vanishes at x = {x}")

    def ket_delta(f1):
        return bracket_delta(model, f1, pert.g, x)

    def ket_pv(f1):
        return PairDensity(model, f1, pert.g).pv(x)

    def bra_delta(f2):
        return bracket_delta(model, pert.h, f2, x)

    def bra_pv(f2):
        return PairDensity(model, pert.h, f2).pv(x)

    return AlphaDyad(
        x=float(x), boundary=boundary,
        ket_parts=(ket_delta, ket_pv), bra_parts=(bra_delta, bra_pv),
        coefficient=1.0 / (dsq * boundary.C2),
    )


def p_bracket(model, pert, x, f1, f2):
    """<f1| p(x) |f2> with p(x) = delta(x-W) - B B'/C2."""
    boundary = c_boundary(model, pert, x)
    if abs(boundary.C2) <= C2_FLOOR:
        raise RegimeError(f"C2({x}) = 0: p(x) is undefined, kappa is the delta")
    return (bracket_delta(model, f1, f2, x)
            - bracket_delta(model, f1, pert.g, x)
            * bracket_delta(model, pert.h, f2, x) / boundary.C2)


@dataclass(frozen=True)
class ResidueDyad:
    """Residue of R(z) at a simple zero z0 of C:
    r = R_W(z0)|g><h|R_W(z0) / C'(z0)."""

    z0: complex
    scale: complex  # 1 / C'(z0)

    def left_values(self, model, pert, y):
        return np.asarray(pert.g(y)) / (self.z0 - model.profile(y))

    def right_values(self, model, pert, y):
        return np.asarray(pert.h(y)) / (self.z0 - model.profile(y))

    def bracket(self, model, pert, f1, f2):
        left = PairDensity(model, f1, pert.g).at(self.z0)
        right = PairDensity(model, pert.h, f2).at(self.z0)
        return left * right * self.scale


@dataclass(frozen=True)
class PointSpectrumEntry:
    z0: complex
    kind: str  # "simple_pole" | "double_zero_jordan"
    residue: object = None
    pair: object = None


def residue(model, pert, z0, density=None):
    """Residue dyad of the perturbed resolvent at a zero of C."""
    d = density if density is not None else PairDensity(model, pert.h, pert.g)
    z0 = complex(z0)
    c0 = 1.0 - d.at(z0)
    if abs(c0) > 1e-6:
        raise DomainError(f"C({z0}) = {c0:.3e}: not a zero of C")
    cp = d.at(z0, power=2)
    if abs(cp) < DOUBLE_ZERO_TOL:
        raise DegeneratePoleError(
            f"C'({z0}) = {cp:.3e}: degenerate pole, use jordan_pair")
    return ResidueDyad(z0=z0, scale=1.0 / cp)


class RankOneOperator:
    """|left> scale <right| acting on states by bilinear pairing with right."""

    def __init__(self, left, right, scale):
        self.left = left
        self.right = right
        self.scale = scale

    def apply(self, model, f):
        pairing = 0.0 + 0.0j
        for a, b in model.domain.intervals:
            pairing += integrate(lambda y: self.right(y) * np.asarray(f(y)),
                                 a, b, rel_tol=1e-11)
        pairing *= self.scale

        def out(y):
            return self.left(y) * pairing

        return out

    def bracket(self, model, f1, f2):
        lhs = 0.0 + 0.0j
        rhs = 0.0 + 0.0j
        for a, b in model.domain.intervals:
            lhs += integrate(lambda y: np.conj(np.asarray(f1(y))) * self.left(y),
                             a, b, rel_tol=1e-11)
            rhs += integrate(lambda y: self.right(y) * np.asarray(f2(y)),
                             a, b, rel_tol=1e-11)
        return lhs * self.scale * rhs


class OperatorSum:
    def __init__(self, parts):
        self.parts = list(parts)

    def apply(self, model, f):
        applied = [part.apply(model, f) for part in self.parts]

        def out(y):
            return sum(fn(y) for fn in applied)

        return out

    def bracket(self, model, f1, f2):
        return sum(part.bracket(model, f1, f2) for part in self.parts)


def jordan_pair(model, pert):
    """Laurent data (p0, a) of R(z) at a double zero of C at the origin:
    a is the z^-2 coefficient, p0 the z^-1 coefficient; p0^2 = p0, a^2 = 0,
    a p0 = p0 a = a."""
    if _on_slit(pert, model, 0j):
        raise DomainError("the origin lies on the slit")
    d = PairDensity(model, pert.h, pert.g)
    c0 = 1.0 - d.at(0.0 + 0.0j)
    cp0 = d.at(0.0 + 0.0j, power=2)
    if abs(c0) > DOUBLE_ZERO_TOL or abs(cp0) > DOUBLE_ZERO_TOL:
        raise DomainError(
            f"no double zero at 0: C(0) = {c0:.3e}, C'(0) = {cp0:.3e}")
    for rlo, rhi in [(p.range_lo, p.range_hi) for p in model.pieces]:
        if rlo <= 0.0 <= rhi:
            raise DomainError("0 in P(G): inverse moments are unbounded")

    def moment(k):
        total = 0.0 + 0.0j
        for rlo, rhi, fit in d.density.fits:
            total += integrate(lambda w: fit(w) / w**k, rlo, rhi, rel_tol=1e-11)
        return complex(total)

    m3 = moment(3)
    if abs(m3) < 1e-12:
        raise DegeneracyError(f"<h| (1/W)^3 |g> = {m3:.3e} vanishes")

    profile = model.profile
    g, h = pert.g, pert.h

    def u(k):
        return lambda y: np.asarray(g(y)) / profile(y) ** k

    def v(k):
        return lambda y: np.asarray(h(y)) / profile(y) ** k

    a_op = RankOneOperator(u(1), v(1), 1.0 / m3)
    p0_op = OperatorSum([RankOneOperator(u(2), v(1), 1.0 / m3),
                         RankOneOperator(u(1), v(2), 1.0 / m3)])
    return p0_op, a_op


def _winding_number(d_hg, box, order=128):
    """(1/2 pi i) contour integral of C'/C around a rectangle."""
    x0, x1, y0, y1 = box
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1),
               complex(x0, y1), complex(x0, y0)]

    xi, wi = _leggauss_cached(order)
    zs, jac = [], []
    for start, stop in zip(corners[:-1], corners[1:]):
        mid = 0.5 * (start + stop)
        half = 0.5 * (stop - start)
        zs.append(mid + half * xi)
        jac.append(half * wi)
    zs = np.concatenate(zs)
    jac = np.concatenate(jac)
    c = 1.0 - d_hg.at_many(zs)
    cp = d_hg.at_many(zs, power=2)
    return np.sum(jac * cp / c) / (2j * np.pi)


def _newton_zero(d_hg, z, tol=1e-12, max_iter=60):
    for _ in range(max_iter):
        c = 1.0 - d_hg.at(z)
        cp = d_hg.at(z, power=2)
        step = c / cp
        z = z - step
        if abs(step) <= tol * (1.0 + abs(z)):
            return z
    raise SearchError(f"newton polish stalled near z = {z}")


def find_point_spectrum(model, pert, region, max_depth=24, min_box=1e-7):
    """Zeros of C inside a rectangle (re_lo, re_hi, im_lo, im_hi).

    Argument-principle counting on subdivided boxes isolates simple zeros,
    which are Newton-polished; a double zero at the origin (detected from
    |C(0)|, |C'(0)|) is classified as a Jordan entry and its winding count
    is deflated. The region must avoid the slit.
    """
    x0, x1, y0, y1 = (float(v) for v in region)
    if not (x1 > x0 and y1 > y0):
        raise DomainError(f"bad region {region}")
    if y0 < 0.0 < y1:
        for lo, hi in pert.slit_intervals(model):
            if lo < x1 and x0 < hi:
                raise DomainError(
                    f"region {region} crosses the slit [{lo:.6g}, {hi:.6g}]")

    d_hg = PairDensity(model, pert.h, pert.g)
    entries = []

    jordan_here = False
    if x0 < 0.0 < x1 and y0 < 0.0 < y1:
        c0 = 1.0 - d_hg.at(0j)
        cp0 = d_hg.at(0j, power=2)
        if abs(c0) <= DOUBLE_ZERO_TOL and abs(cp0) <= DOUBLE_ZERO_TOL:
            jordan_here = True
            entries.append(PointSpectrumEntry(
                z0=0j, kind="double_zero_jordan", pair=jordan_pair(model, pert)))

    def contains_origin(box):
        return box[0] < 0.0 < box[1] and box[2] < 0.0 < box[3]

    def count_in(box, attempts=4):
        grow = 1.0
        for _ in range(attempts):
            try:
                n = _winding_number(d_hg, box)
            except (ZeroDivisionError, FloatingPointError):
                n = None
            if n is not None and abs(n.imag) < 0.2 \
                    and abs(n.real - round(n.real)) < 0.2:
                raw = int(round(n.real))
                if jordan_here and contains_origin(box):
                    raw -= 2
                return raw, box
            # a zero sits on (or hugs) the boundary: jitter the box outward
            grow += 0.0371
            cx, cy = 0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3])
            hx, hy = 0.5 * (box[1] - box[0]) * grow, 0.5 * (box[3] - box[2]) * grow
            box = (cx - hx, cx + hx, cy - hy, cy + hy)
        raise SearchError(f"argument principle failed to stabilize on {box}")

    stack = [(x0, x1, y0, y1)]
    boxes_seen = 0
    zeros = []
    while stack:
        boxes_seen += 1
        if boxes_seen > 4 * max_depth**2:
            raise SearchError("zero search exceeded its subdivision budget")
        box = stack.pop()
        n, box = count_in(box)
        if n <= 0:
            continue
        bw, bh = box[1] - box[0], box[3] - box[2]
        if n == 1:
            try:
                z = _newton_zero(d_hg, complex(0.5 * (box[0] + box[1]),
                                               0.5 * (box[2] + box[3])))
            except SearchError:
                z = None
            if z is not None and box[0] <= z.real <= box[1] \
                    and box[2] <= z.imag <= box[3]:
                if all(abs(z - z_prev) > 1e-9 for z_prev in zeros):
                    zeros.append(z)
                continue
        if max(bw, bh) < min_box:
            raise SearchError(f"could not isolate {n} zeros in tiny box {box}")
        cx, cy = 0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3])
        stack.extend([
            (box[0], cx, box[2], cy), (cx, box[1], box[2], cy),
            (box[0], cx, cy, box[3]), (cx, box[1], cy, box[3]),
        ])

    for z in zeros:
        entries.append(PointSpectrumEntry(
            z0=z, kind="simple_pole",
            residue=residue(model, pert, z, density=d_hg)))
    entries.sort(key=lambda e: (round(e.z0.real, 9), round(e.z0.imag, 9)))
    return entries


def example2_build(c, amplitude, bump_shape):
    """Two-slit mirror model: domain (-c,-1) u (1,c), identity profile,
    g even, h = -g on the right slit and +g on the left.

    Classifies the regime from C(0) and C(1): one conjugate pair of
    imaginary eigenvalues, one pair of real eigenvalues in (-1, 1), a
    Jordan block at 0, or undetermined (the case C(0) > 0 <= C(1) is out
    of scope).
    """
    c = float(c)
    if not c > 1.0:
        raise DomainError(f"need c > 1, got {c}")
    if isinstance(bump_shape, dict):
        center, radius = float(bump_shape["center"]), float(bump_shape["radius"])
    else:
        center, radius = (float(v) for v in bump_shape)
    if not (1.0 < center - radius and center + radius < c):
        raise DomainError(
            f"bump support [{center - radius}, {center + radius}] escapes (1, {c})")

    model = MultOpModel(DomainG([(-c, -1.0), (1.0, c)]), ProfileP.identity())
    right = make_bump(center, radius)
    left = make_bump(-center, radius)
    amp = float(amplitude)
    g = StateFunction([(amp, right), (amp, left)], model.domain)
    h = StateFunction([(-amp, right), (amp, left)], model.domain)
    pert = Perturbation(g, h, model=model)

    d_hg = PairDensity(model, pert.h, pert.g)
    c0 = float(np.real(1.0 - d_hg.at(0j)))
    c_at_1 = float(np.real(1.0 - d_hg.at(1.0 + 0j)))
    tol = 1e-10
    if c0 < -tol:
        classification = IMAGINARY_PAIR
    elif abs(c0) <= tol:
        classification = JORDAN_AT_ZERO
    elif c_at_1 < 0.0:
        classification = REAL_PAIR
    else:
        classification = UNDETERMINED
    return model, pert, classification
