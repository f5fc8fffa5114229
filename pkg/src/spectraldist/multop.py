"""Multiplication operator on L2 of a finite union of bounded open intervals.

The operator multiplies by a smooth profile P with nonvanishing derivative,
so each interval of the domain is a monotonic piece and the level set of x
collects one root per piece whose P-range contains x. The co-area weights
1/|P'(y)| turn level-set sums into the generalized-eigenvector brackets: the
delta bracket is the weighted sum over the level set, the principal-value
bracket integrates the pushforward density against the PV kernel, and the
smeared operator action is plain pointwise multiplication by phi(P(y)).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as _poly

from . import _kernels
from .errors import DomainError, ModelError
from .quadrature import ChebFit, _chebpts, integrate, pv_integrate

#: samples per interval when checking that P' keeps one sign
_SLOPE_SAMPLES = 2048


@dataclass(frozen=True)
class DomainG:
    """Finite union of disjoint bounded open intervals."""

    intervals: tuple

    def __init__(self, intervals):
        ivs = tuple((float(a), float(b)) for a, b in intervals)
        if not ivs:
            raise ModelError("domain needs at least one interval")
        for a, b in ivs:
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ModelError(f"bad interval ({a}, {b})")
        if len(set(ivs)) != len(ivs):
            raise ModelError("duplicate intervals in domain")
        for (a1, b1) in ivs:
            for (a2, b2) in ivs:
                if (a1, b1) != (a2, b2) and a1 < b2 and a2 < b1:
                    raise ModelError(
                        f"intervals ({a1},{b1}) and ({a2},{b2}) overlap")
        object.__setattr__(self, "intervals", tuple(sorted(ivs)))

    @property
    def total_length(self):
        return sum(b - a for a, b in self.intervals)

    def contains_support(self, lo, hi):
        return any(a < lo and hi < b for a, b in self.intervals)


class ProfileP:
    """Polynomial multiplication profile with cached derivative."""

    __slots__ = ("coefficients", "_dcoeffs")

    def __init__(self, coefficients):
        c = np.atleast_1d(np.asarray(coefficients, dtype=float))
        if c.size < 2 or not np.any(c[1:]):
            raise ModelError("profile must be non-constant")
        self.coefficients = c
        d = _poly.polyder(c)
        self._dcoeffs = d if d.size else np.zeros(1)

    @classmethod
    def identity(cls):
        return cls([0.0, 1.0])

    def __call__(self, y):
        return _poly.polyval(np.asarray(y, dtype=float), self.coefficients)

    def slope(self, y):
        return _poly.polyval(np.asarray(y, dtype=float), self._dcoeffs)


@dataclass(frozen=True)
class _Piece:
    lo: float
    hi: float
    range_lo: float
    range_hi: float
    increasing: bool
    y_grid: np.ndarray
    p_grid: np.ndarray


@dataclass(frozen=True)
class LevelSet:
    """Roots of P(y) = x inside the domain with co-area weights 1/|P'|."""

    x: float
    points: tuple  # ((y, weight), ...)


class MultOpModel:
    """Domain + profile bundle with validated monotonic pieces."""

    def __init__(self, domain, profile, x_resolution=512):
        if not isinstance(domain, DomainG):
            domain = DomainG(domain)
        self.domain = domain
        self.profile = profile
        self.x_resolution = int(x_resolution)
        self.pieces = []
        min_slope = np.inf
        for a, b in domain.intervals:
            ys = np.linspace(a, b, _SLOPE_SAMPLES)
            slopes = profile.slope(ys)
            min_slope = min(min_slope, float(np.min(np.abs(slopes))))
            flips = np.nonzero(slopes[:-1] * slopes[1:] < 0)[0]
            if len(flips) or np.any(slopes == 0.0):
                loc = self._bisect_slope_zero(ys, slopes, flips)
                raise ModelError(
                    f"profile derivative changes sign inside ({a}, {b}) "
                    f"near y = {loc:.12g}; critical points are unsupported")
            pa, pb = float(profile(a)), float(profile(b))
            increasing = pb > pa
            y_grid = np.linspace(a, b, 1025)
            p_grid = profile(y_grid)
            self.pieces.append(_Piece(
                lo=a, hi=b, range_lo=min(pa, pb), range_hi=max(pa, pb),
                increasing=increasing, y_grid=y_grid, p_grid=p_grid,
            ))
        self.min_profile_slope = min_slope

    def _bisect_slope_zero(self, ys, slopes, flips):
        if not len(flips):
            return ys[int(np.argmin(np.abs(slopes)))]
        i = flips[0]
        lo, hi = ys[i], ys[i + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.profile.slope(lo) * self.profile.slope(mid) <= 0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    @property
    def ranges(self):
        return [(p.range_lo, p.range_hi) for p in self.pieces]

    def piece_roots(self, piece, xs):
        """Roots of P(y) = x on one piece for an array of x values.

        Values outside the piece's open range come back as NaN.
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.full_like(xs, np.nan)
        inside = (xs > piece.range_lo) & (xs < piece.range_hi)
        if not np.any(inside):
            return ys
        pg, yg = piece.p_grid, piece.y_grid
        if not piece.increasing:
            pg, yg = pg[::-1], yg[::-1]
        guess = np.interp(xs[inside], pg, yg)
        ys[inside] = _kernels.newton_polish_poly(
            self.profile.coefficients, xs[inside], guess, piece.lo, piece.hi,
            tol=1e-14,
        )
        return ys


class StateFunction:
    """Finite sum of bumps supported strictly inside the domain."""

    __slots__ = ("terms",)

    def __init__(self, terms, domain=None):
        self.terms = tuple((complex(c), b) for c, b in terms)
        if domain is not None:
            for _, b in self.terms:
                lo, hi = b.support
                if not domain.contains_support(lo, hi):
                    raise DomainError(
                        f"bump support [{lo:.6g}, {hi:.6g}] is not strictly "
                        "inside the domain")

    @classmethod
    def single(cls, bump, domain=None, coeff=1.0):
        return cls([(coeff, bump)], domain=domain)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = None
        for c, b in self.terms:
            term = c * b(y)
            out = term if out is None else out + term
        if out is not None and np.all(out.imag == 0.0):
            return out.real
        return out

    def support_hull(self):
        lo = min(b.support[0] for _, b in self.terms)
        hi = max(b.support[1] for _, b in self.terms)
        return lo, hi

    def support_segments(self):
        """Merged supports of the individual bumps (sorted, disjoint)."""
        segs = sorted(b.support for _, b in self.terms)
        merged = [list(segs[0])]
        for lo, hi in segs[1:]:
            if lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [tuple(seg) for seg in merged]

    def is_real(self, samples=None):
        return all(c.imag == 0.0 for c, _ in self.terms)

    def scaled(self, factor):
        return StateFunction([(c * factor, b) for c, b in self.terms])


def level_set(model, x):
    """Level set of the profile at height x, with co-area weights."""
    pts = []
    for piece in model.pieces:
        y = model.piece_roots(piece, np.array([float(x)]))[0]
        if np.isfinite(y):
            w = 1.0 / abs(float(model.profile.slope(y)))
            pts.append((float(y), w))
    return LevelSet(x=float(x), points=tuple(pts))


def _value_of(f, y):
    vals = f(y)
    return np.asarray(vals)


def bracket_delta(model, f1, f2, x):
    """<f1| delta(x - Omega) |f2> as a weighted sum over the level set."""
    ls = level_set(model, x)
    total = 0.0 + 0.0j
    for y, w in ls.points:
        total += np.conj(complex(np.asarray(f1(y)).item())) \
            * complex(np.asarray(f2(y)).item()) * w
    return _realify(total)


def _realify(val):
    if abs(val.imag) <= 1e-300 or val.imag == 0.0:
        return val.real
    return val


class Pushforward:
    """Pushforward of a density along the profile: per-piece Chebyshev fits
    of x -> sum over the level set of w(y) / |P'(y)|."""

    __slots__ = ("fits",)

    def __init__(self, fits):
        self.fits = fits

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape if x.shape else (1,), dtype=complex)
        flat_x = np.atleast_1d(x)
        for rlo, rhi, fit in self.fits:
            inside = (flat_x > rlo) & (flat_x < rhi)
            if np.any(inside):
                out[inside] += fit(flat_x[inside])
        if np.all(out.imag == 0.0):
            out = out.real
        return out.reshape(x.shape) if x.shape else out[0]

    @property
    def ranges(self):
        return [(rlo, rhi) for rlo, rhi, _ in self.fits]


def pushforward(model, w, degree=200, support=None):
    """Fit the pushforward density of ``w`` on every piece range.

    ``support`` optionally restricts to the y-intervals carrying w (one
    (lo, hi) pair or a list of them, e.g. the support segments of a state);
    each piece then fits on the P-image of its carried part, which puts the
    density's vanishing edges at the endpoints of the Chebyshev grid where
    they are resolved best.
    """
    if support is None and hasattr(w, "support_segments"):
        support = w.support_segments()
    elif support is None and hasattr(w, "support_hull"):
        support = [w.support_hull()]
    elif support is not None and np.ndim(support) == 1:
        support = [tuple(support)]
    fits = []
    for piece in model.pieces:
        if support is None:
            ylo, yhi = piece.lo, piece.hi
        else:
            parts = [(max(piece.lo, lo), min(piece.hi, hi))
                     for lo, hi in support if min(piece.hi, hi) > max(piece.lo, lo)]
            if not parts:
                continue
            ylo = min(lo for lo, _ in parts)
            yhi = max(hi for _, hi in parts)
        if support is None:
            rlo, rhi = piece.range_lo, piece.range_hi
        else:
            pvals = model.profile(np.array([ylo, yhi]))
            rlo, rhi = float(np.min(pvals)), float(np.max(pvals))
        mid, half = 0.5 * (rlo + rhi), 0.5 * (rhi - rlo)
        xs = mid + half * _chebpts(degree)
        ys = model.piece_roots(piece, xs)
        good = np.isfinite(ys)
        vals = np.zeros(len(xs), dtype=complex)
        vals[good] = np.asarray(w(ys[good]), dtype=complex) \
            / np.abs(model.profile.slope(ys[good]))
        if np.all(vals.imag == 0.0):
            vals = vals.real
        fits.append((rlo, rhi, ChebFit.from_values(vals, rlo, rhi)))
    return Pushforward(fits)


def bracket_pv(model, f1, f2, x, density=None):
    """<f1| PV/(x - Omega) |f2> through the pushforward density.

    ``density`` may carry a precomputed Pushforward of conj(f1) * f2 to
    amortize the fits over many x values.
    """
    if density is None:
        density = pushforward(model, lambda y: np.conj(f1(y)) * f2(y))
    total = 0.0 + 0.0j
    for (rlo, rhi, fit) in density.fits:
        res = pv_integrate(lambda w_: fit(w_), float(x), rlo, rhi)
        total += res.value
    return _realify(complex(total))


def coarea_residual(model, w, degree=200):
    """|integral of w over the domain - integral of its pushforward|."""
    direct = 0.0 + 0.0j
    for a, b in model.domain.intervals:
        direct += integrate(w, a, b, rel_tol=1e-12)
    pf = pushforward(model, w, degree=degree)
    through = 0.0 + 0.0j
    for rlo, rhi, fit in pf.fits:
        through += integrate(fit, rlo, rhi, rel_tol=1e-12)
    return abs(complex(direct) - complex(through))


def mult_spectral_apply(model, phi, f):
    """Smeared action of the multiplication operator: y -> phi(P(y)) f(y).

    2D test functions act through their boundary slice phi(x + i0).
    """
    slice_fn = phi.restrict_real() if hasattr(phi, "restrict_real") else phi

    def applied(y):
        y = np.asarray(y, dtype=float)
        return slice_fn(model.profile(y)) * f(y)

    return applied


def inner_product(model, f, g, rel_tol=1e-12):
    """L2 inner product over the domain, conjugate-linear in the first slot."""
    total = 0.0 + 0.0j
    for a, b in model.domain.intervals:
        total += integrate(lambda y: np.conj(f(y)) * g(y), a, b, rel_tol=rel_tol)
    return _realify(complex(total))


def inner_via_levelsets(model, f, g, degree=320):
    """The same inner product routed through the co-area decomposition,
    collapsing the generalized-eigenvector orthogonality relation."""
    pf = pushforward(model, lambda y: np.conj(f(y)) * g(y), degree=degree)
    total = 0.0 + 0.0j
    for rlo, rhi, fit in pf.fits:
        total += integrate(fit, rlo, rhi, rel_tol=1e-12)
    return _realify(complex(total))
