"""Property harness: distributional identities as executable checks.

Each check smears both sides of an operator identity against test functions
and probe states and emits a CheckReport with absolute and relative errors.
For the perturbed multiplication operator the continuous-spectrum work is
routed through Chebyshev fits of x -> <f1|kappa(x)|f2> on the smooth slit
segments, so double-smeared relations cost two fits and a few quadratures.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._cauchy import cauchy_fit_2d
from .errors import AccuracyError, IncompleteInputError, RegimeError
from .krein import (
    BracketSession,
    PairDensity,
    apply_h,
    c_boundary,
    kappa_bracket,
)
from .matspec import JordanForm, mat_resolvent_apply, mat_spectral_apply
from .multop import (
    MultOpModel,
    StateFunction,
    bracket_delta,
    inner_product,
    mult_spectral_apply,
    pushforward,
)
from .quadrature import (
    ChebFit,
    _composite_refine,
    _leggauss_cached,
    extrapolate_to_zero,
    integrate,
    make_bump,
    pv_integrate,
)


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one smeared-identity comparison."""

    name: str
    lhs: object
    rhs: object
    abs_err: float
    rel_err: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "name": self.name,
            "lhs": _jsonify(self.lhs),
            "rhs": _jsonify(self.rhs),
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "details": {k: _jsonify(v) for k, v in self.details.items()},
        }


def _jsonify(v):
    if isinstance(v, np.ndarray):
        return [[_jsonify(x) for x in row] for row in np.atleast_2d(v)]
    if isinstance(v, (complex, np.complexfloating)):
        return [float(np.real(v)), float(np.imag(v))]
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def _norm(v):
    if isinstance(v, np.ndarray):
        return float(np.linalg.norm(v))
    return abs(complex(v))


def make_report(name, lhs, rhs, tolerance, **details):
    diff = np.asarray(lhs) - np.asarray(rhs)
    abs_err = _norm(diff)
    scale = max(_norm(lhs), _norm(rhs))
    rel_err = abs_err / scale if scale > 0 else 0.0
    passed = abs_err <= tolerance or rel_err <= tolerance
    return CheckReport(name=name, lhs=lhs, rhs=rhs, abs_err=abs_err,
                       rel_err=rel_err, tolerance=tolerance, passed=passed,
                       details=details)


def _pv_loose(fit, pole, lo, hi):
    """PV integral of a fitted density, tolerating the fit's edge noise.

    Poles hugging a segment edge amplify the ~1e-9 wiggle of the fitted
    density; the refinement then stalls below any practical tolerance while
    the value is already far more accurate than the checks need.
    """
    try:
        return pv_integrate(fit, pole, lo, hi, rel_tol=1e-7, abs_tol=1e-9,
                            max_levels=6).value
    except AccuracyError as err:
        return err.best


def seeded_probe_states(model, seed, count=2, bumps=2):
    """Reproducible bump-sum probe states supported inside the domain."""
    rng = np.random.default_rng(seed)
    states = []
    intervals = model.domain.intervals
    for _ in range(count):
        terms = []
        for _ in range(bumps):
            a, b = intervals[rng.integers(len(intervals))]
            width = b - a
            radius = rng.uniform(0.12, 0.3) * width
            center = rng.uniform(a + 1.05 * radius, b - 1.05 * radius)
            coeff = rng.uniform(0.4, 1.4) * rng.choice([-1.0, 1.0])
            terms.append((coeff, make_bump(center, radius)))
        states.append(StateFunction(terms, domain=model.domain))
    return states


class ComposedState:
    """Callable state with explicit support segments, for fits and brackets."""

    __slots__ = ("_fn", "_segments")

    def __init__(self, fn, segments):
        self._fn = fn
        self._segments = _merge_segments(segments)

    def __call__(self, y):
        return self._fn(y)

    def support_segments(self):
        return self._segments

    def support_hull(self):
        return self._segments[0][0], self._segments[-1][1]

    def is_real(self):
        return False


def _merge_segments(segs):
    segs = sorted(tuple(s) for s in segs)
    merged = [list(segs[0])]
    for lo, hi in segs[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [tuple(s) for s in merged]


def _segments_of_state(state):
    if hasattr(state, "support_segments"):
        return state.support_segments()
    return [state.support_hull()]


def _slit_segments(model, pert):
    """Smooth pieces of the continuous spectrum: each P-range split at the
    edges of the slit (where the kappa branch switches)."""
    slits = pert.slit_intervals(model)
    segments = []
    for piece in model.pieces:
        edges = {piece.range_lo, piece.range_hi}
        for lo, hi in slits:
            for e in (lo, hi):
                if piece.range_lo < e < piece.range_hi:
                    edges.add(e)
        edges = sorted(edges)
        segments.extend(zip(edges[:-1], edges[1:]))
    return segments


class SlitScan:
    """Chebyshev fits of x -> <f1|kappa(x)|f2> over the slit segments."""

    def __init__(self, model, pert, f1, f2, degree=72, session=None):
        self.session = session or BracketSession(model, pert, f1, f2)
        self.segments = _slit_segments(model, pert)
        self.fits = []
        for lo, hi in self.segments:
            fit = ChebFit.from_callable(
                lambda xs: np.array([self.session.kappa(float(x))
                                     for x in np.atleast_1d(xs)]),
                lo, hi, degree=degree)
            self.fits.append(fit)

    def integral(self):
        return sum(fit.integral() for fit in self.fits)

    def weighted_integral(self, weight):
        total = 0.0 + 0.0j
        for (lo, hi), fit in zip(self.segments, self.fits):
            total += integrate(lambda xs: fit(xs) * weight(xs), lo, hi,
                               rel_tol=1e-10, max_levels=8)
        return total

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape, dtype=complex)
        for (lo, hi), fit in zip(self.segments, self.fits):
            inside = (x >= lo) & (x <= hi)
            out[inside] = fit(x[inside])
        return out


class _BoundaryFits:
    """Chebyshev fits of C1, C2 and 1/(C1^2 + pi^2 C2^2) on slit segments."""

    def __init__(self, model, pert, degree=72):
        self.model = model
        self.pert = pert
        d_hg = PairDensity(model, pert.h, pert.g)
        self.segments = _slit_segments(model, pert)
        self.c1 = []
        self.c2 = []
        for lo, hi in self.segments:
            self.c1.append(ChebFit.from_callable(
                lambda xs: np.array([1.0 - d_hg.pv(float(x))
                                     for x in np.atleast_1d(xs)]),
                lo, hi, degree=degree))
            self.c2.append(ChebFit.from_callable(
                lambda xs: np.array([float(np.real(d_hg.delta(float(x))))
                                     for x in np.atleast_1d(xs)]),
                lo, hi, degree=degree))

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c1 = np.ones(x.shape)
        c2 = np.zeros(x.shape)
        for (lo, hi), f1_, f2_ in zip(self.segments, self.c1, self.c2):
            inside = (x >= lo) & (x <= hi)
            c1[inside] = np.real(f1_(x[inside]))
            c2[inside] = np.real(f2_(x[inside]))
        return c1, c2


def mu_apply(model, pert, phi, f, boundary_fits=None, degree=64):
    """The smeared spectral density as an operator:  mu(phi) f  in L2.

    mu(phi)f(y) = phi(P(y)) f(y) + g(y) [ PV_x s_A(x)/(x - P(y)) dx
                  + s_B(P(y)) ], where s_A, s_B weight the PV- and
    delta-type kets of kappa by phi and the boundary data of C.
    """
    bf = boundary_fits or _BoundaryFits(model, pert)
    d_hf = PairDensity(model, pert.h, f)

    segments = []
    phi_lo, phi_hi = phi.support
    for lo, hi in bf.segments:
        lo2, hi2 = max(lo, phi_lo), min(hi, phi_hi)
        if hi2 > lo2:
            segments.append((lo2, hi2))

    s_a_fits, s_b_fits = [], []
    for lo, hi in segments:
        def build(xs):
            xs = np.atleast_1d(xs)
            c1, c2 = bf.eval(xs)
            dsq = c1**2 + np.pi**2 * c2**2
            apf = np.array([d_hf.pv(float(x)) for x in xs])
            bpf = np.array([complex(d_hf.delta(float(x))) for x in xs])
            sa = phi(xs) * (c2 * apf + c1 * bpf) / dsq
            sb = phi(xs) * (c1 * apf - np.pi**2 * c2 * bpf) / dsq
            return sa, sb

        from .quadrature import _chebpts
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        sa_vals, sb_vals = build(mid + half * _chebpts(degree))
        s_a_fits.append((lo, hi, ChebFit.from_values(sa_vals, lo, hi)))
        s_b_fits.append((lo, hi, ChebFit.from_values(sb_vals, lo, hi)))

    g = pert.g
    profile = model.profile

    def _mu_tail(pole, gval):
        # the PV-type kets carry the kernel 1/(x - P(y)): the integration
        # variable is x, so the pole-form integral flips sign
        tail = 0.0 + 0.0j
        for lo, hi, fit in s_a_fits:
            tail -= _pv_loose(fit, pole, lo, hi)
        for lo, hi, fit in s_b_fits:
            if lo < pole < hi:
                tail += complex(np.asarray(fit(pole)).item())
        return gval * tail

    def applied(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        py = profile(y)
        out = phi(py) * np.asarray(f(y)).astype(complex)
        gy = np.asarray(g(y))
        for i in np.nonzero(gy)[0]:
            out[i] += _mu_tail(float(py[i]), float(gy[i]))
        return out

    return ComposedState(applied, _segments_of_state(f) + _segments_of_state(g))


def check_multiplicative(target, phi1, phi2, probes=None, tolerance=None,
                         **context):
    """M(phi1) M(phi2) = M(phi1 phi2), dispatched on the target kind."""
    if isinstance(target, JordanForm):
        tol = 1e-7 if tolerance is None else tolerance
        lhs = mat_spectral_apply(target, phi1) @ mat_spectral_apply(target, phi2)
        rhs = mat_spectral_apply(target, phi1.multiply(phi2))
        return make_report("multiplicative/matrix", lhs, rhs, tol, **context)
    if isinstance(target, MultOpModel):
        tol = 1e-12 if tolerance is None else tolerance
        f = probes[0]
        seq = mult_spectral_apply(target, phi1,
                                  mult_spectral_apply(target, phi2, f))
        prod = mult_spectral_apply(target, phi1.multiply(phi2), f)
        ys = np.concatenate([np.linspace(a + 1e-9, b - 1e-9, 101)
                             for a, b in target.domain.intervals])
        lhs = np.max(np.abs(seq(ys) - prod(ys)))
        return make_report("multiplicative/multop", lhs, 0.0, tol, **context)
    model, pert = target
    tol = 1e-4 if tolerance is None else tolerance
    f1, f2 = probes
    bf = context.pop("boundary_fits", None) or _BoundaryFits(model, pert)
    u = mu_apply(model, pert, phi2, f2, boundary_fits=bf)
    w = mu_apply(model, pert, phi1, u, boundary_fits=bf)
    lhs = inner_product(model, f1, w, rel_tol=3e-7)
    scan = SlitScan(model, pert, f1, f2)
    rhs = scan.weighted_integral(lambda xs: phi1(xs) * phi2(xs))
    return make_report("multiplicative/perturbed", complex(lhs), complex(rhs),
                       tol, **context)


def check_orthogonality(model, pert, phi1, phi2, f1, f2, tolerance=1e-4,
                        **context):
    """The three smeared orthogonality families of the spectral density:
    kappa-kappa, <alpha'|alpha>, and p annihilating alpha. Returns one
    CheckReport per family."""
    bf = _BoundaryFits(model, pert)
    reports = []

    # family 1: kappa(x) kappa(x') = delta(x - x') kappa(x)
    first = check_multiplicative((model, pert), phi1, phi2,
                                 probes=(f1, f2), tolerance=tolerance,
                                 boundary_fits=bf,
                                 family="kappa_pair", **context)
    reports.append(replace(first, name="orthogonality/kappa_pair"))

    # family 2: <alpha'(x)|alpha(x')> = delta(x - x'), in the unnormalized
    # convention  iint phi1 phi2 <bra(x)|ket(x')> = int phi1 phi2 D C2 dx
    a2 = _smeared_alpha_ket(model, pert, phi2, bf)
    b1 = _smeared_alpha_bra(model, pert, phi1, bf)
    lhs = 0.0 + 0.0j
    for a, b in model.domain.intervals:
        lhs += integrate(lambda y: b1(y) * a2(y), a, b, rel_tol=3e-7)

    def dc2(xs):
        c1, c2 = bf.eval(np.atleast_1d(xs))
        return phi1(xs) * phi2(xs) * (c1**2 + np.pi**2 * c2**2) * c2

    rhs = 0.0
    for lo, hi in bf.segments:
        rhs += integrate(dc2, lo, hi, rel_tol=1e-10, max_levels=8)
    reports.append(make_report("orthogonality/alpha_pair", complex(lhs),
                               complex(rhs), tolerance,
                               family="alpha_pair", **context))

    # family 3: p(x) |alpha(x')> = 0
    v = _p_apply(model, pert, phi1, a2, bf)
    lhs3 = inner_product(model, f1, v, rel_tol=3e-7)
    reports.append(make_report("orthogonality/p_annihilates_alpha",
                               complex(lhs3), 0.0, tolerance,
                               family="p_alpha", **context))
    return reports


def _smeared_alpha_ket(model, pert, phi, bf):
    """y-function  int dx phi(x) (C1 B + C2 A)(x)  of the unnormalized ket."""
    g = pert.g
    profile = model.profile
    phi_c2 = []
    for (lo, hi), c1f, c2f in zip(bf.segments, bf.c1, bf.c2):
        plo, phi_hi = phi.support
        lo2, hi2 = max(lo, plo), min(hi, phi_hi)
        if hi2 > lo2:
            fit = ChebFit.from_callable(
                lambda xs: phi(xs) * np.real(c2f(xs)), lo2, hi2, degree=96)
            phi_c2.append((lo2, hi2, fit))

    def ket(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        py = profile(y)
        c1v, _ = bf.eval(py)
        out = np.asarray(g(y)).astype(complex) * c1v * phi(py)
        gy = np.asarray(g(y))
        for i in np.nonzero(gy)[0]:
            tail = 0.0
            for lo, hi, fit in phi_c2:
                tail -= _pv_loose(fit, float(py[i]), lo, hi)
            out[i] += gy[i] * tail
        return out

    return ComposedState(ket, _segments_of_state(g))


def _smeared_alpha_bra(model, pert, phi, bf):
    h = pert.h
    profile = model.profile
    phi_c2 = []
    for (lo, hi), c1f, c2f in zip(bf.segments, bf.c1, bf.c2):
        plo, phi_hi = phi.support
        lo2, hi2 = max(lo, plo), min(hi, phi_hi)
        if hi2 > lo2:
            fit = ChebFit.from_callable(
                lambda xs: phi(xs) * np.real(c2f(xs)), lo2, hi2, degree=96)
            phi_c2.append((lo2, hi2, fit))

    def bra(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        py = profile(y)
        c1v, _ = bf.eval(py)
        hy = np.asarray(h(y))
        out = hy.astype(complex) * c1v * phi(py)
        for i in np.nonzero(hy)[0]:
            tail = 0.0
            for lo, hi, fit in phi_c2:
                tail -= _pv_loose(fit, float(py[i]), lo, hi)
            out[i] += hy[i] * tail
        return out

    return ComposedState(bra, _segments_of_state(h))


def _p_apply(model, pert, phi, w, bf):
    """pi(phi) w with p(x) = delta(x - W) - B B'/C2; the B'/C2 ratio stays
    bounded because both push h forward."""
    hw = pushforward(model, lambda y: np.asarray(pert.h(y)) * np.asarray(w(y)),
                     support=_segments_of_state(pert.h))
    hg = pushforward(model, lambda y: np.asarray(pert.h(y)) * np.asarray(pert.g(y)),
                     support=_segments_of_state(pert.h))
    g = pert.g
    profile = model.profile

    def applied(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        py = profile(y)
        out = phi(py) * np.asarray(w(y)).astype(complex)
        gy = np.asarray(g(y))
        for i in np.nonzero(gy)[0]:
            num = complex(np.asarray(hw(py[i])).item())
            den = complex(np.asarray(hg(py[i])).item())
            if abs(den) > 1e-280:
                out[i] -= gy[i] * phi(py[i]) * num / den
        return out

    return ComposedState(applied, _segments_of_state(w) + _segments_of_state(g))


def check_eigenrelation(model, pert, phi, f1, f2, entries=(), tolerance=1e-4,
                        discrete_tolerance=1e-7, **context):
    """H kappa(x) = x kappa(x) smeared against phi, plus the plain L2
    eigenvalue relation for any discrete entries. Returns a list of reports."""
    reports = []
    hf2 = ComposedState(apply_h(model, pert, f2),
                        _segments_of_state(f2) + _segments_of_state(pert.g))
    lhs_scan = SlitScan(model, pert, f1, hf2)
    lhs = lhs_scan.weighted_integral(phi)
    rhs_scan = SlitScan(model, pert, f1, f2)
    rhs = rhs_scan.weighted_integral(lambda xs: np.asarray(xs) * phi(xs))
    reports.append(make_report("eigenrelation/continuous", complex(lhs),
                               complex(rhs), tolerance, **context))

    worst = 0.0
    for entry in entries:
        if entry.kind != "simple_pole":
            continue
        z0 = entry.z0
        alpha = lambda y: entry.residue.left_values(model, pert, y)
        h_alpha = apply_h(model, pert, alpha)
        num = 0.0
        den = 0.0
        for a, b in model.domain.intervals:
            num += integrate(lambda y: np.abs(h_alpha(y) - z0 * alpha(y)) ** 2,
                             a, b, rel_tol=1e-9)
            den += integrate(lambda y: np.abs(alpha(y)) ** 2, a, b,
                             rel_tol=1e-9)
        worst = max(worst, float(np.sqrt(num.real / den.real)))
    if entries:
        reports.append(make_report("eigenrelation/discrete", worst, 0.0,
                                   discrete_tolerance, **context))
    return reports


def check_completeness(model, pert, f1, f2, entries=None, tolerance=1e-4,
                       scan=None, **context):
    """Point-spectrum dyads plus the integrated continuous density must
    resolve the identity: sum_i <f1|r_i|f2> + int kappa dx = <f1|f2>."""
    if entries is None:
        raise IncompleteInputError(
            "completeness needs the point spectrum; pass entries=[] only "
            "when C has no zeros")
    point = 0.0 + 0.0j
    for entry in entries:
        if entry.kind == "simple_pole":
            point += entry.residue.bracket(model, pert, f1, f2)
        else:
            p0, _a = entry.pair
            # the nilpotent leg multiplies the derivative of the test
            # function, which vanishes for phi == 1
            point += p0.bracket(model, f1, f2)
    scan = scan or SlitScan(model, pert, f1, f2)
    cont = scan.integral()
    rhs = inner_product(model, f1, f2)
    return make_report("completeness", complex(point + cont), complex(rhs),
                       tolerance, **context)


def check_cross_component(model, pert, entries, phi_pole, phi_slit, f1, f2,
                          tolerance=1e-6, **context):
    """Disjoint spectral components annihilate each other:
    M(phi_pole) M(phi_slit) = 0 when the supports split pole vs slit."""
    u = mu_apply(model, pert, phi_slit, f2)
    lhs = 0.0 + 0.0j
    for entry in entries:
        if entry.kind != "simple_pole":
            continue
        weight = complex(phi_pole(entry.z0))
        if weight == 0.0:
            continue
        left = PairDensity(model, f1, pert.g).at(entry.z0)
        right = PairDensity(model, pert.h, u).at(entry.z0)
        lhs += weight * left * right * entry.residue.scale
    return make_report("cross_component", complex(lhs), 0.0, tolerance,
                       **context)


def _strip_smear(value_fn, rect, eps_ladder, x_order=12, u_order=12,
                 x_rel_tol=1e-8):
    """lim int_{|u|>eps} int dx value_fn(x-array, u), extrapolated in eps."""
    ax, bx, ay, by = rect
    u_max = max(abs(ay), abs(by))
    ladder = np.sort(np.asarray(eps_ladder))
    outer = []
    w = ladder[-1]
    while w < u_max:
        outer.append(min(2 * w, u_max))
        w *= 2
    breaks = np.unique(np.concatenate([ladder, outer]))
    xi, wi = _leggauss_cached(u_order)

    def x_integral(u):
        val, _ = _composite_refine(lambda xs: value_fn(xs, u),
                                   np.array([ax, bx]), x_rel_tol,
                                   max_levels=5, order=x_order)
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


def _combined_resolvent_argument(phi1, phi2, degree=96):
    """psi = (r*phi1) phi2 + phi1 (r*phi2) as a masked evaluable."""
    fit1 = cauchy_fit_2d(phi1, phi2.support_rect(), degree=degree)
    fit2 = cauchy_fit_2d(phi2, phi1.support_rect(), degree=degree)

    def psi(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        m2 = phi2.eval_xy(x, y)
        m1 = phi1.eval_xy(x, y)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        live2 = m2 != 0.0
        if np.any(live2):
            xb, yb = np.broadcast_arrays(x, y)
            out[live2] += fit1.eval_xy(xb[live2], yb[live2]) * m2[live2]
        live1 = m1 != 0.0
        if np.any(live1):
            xb, yb = np.broadcast_arrays(x, y)
            out[live1] += m1[live1] * fit2.eval_xy(xb[live1], yb[live1])
        return out

    ax1, bx1, ay1, by1 = phi1.support_rect()
    ax2, bx2, ay2, by2 = phi2.support_rect()
    rect = (min(ax1, ax2), max(bx1, bx2), min(ay1, ay2), max(by1, by2))
    from .distalg import Evaluable2D

    return Evaluable2D(psi, rect)


def check_resolvent_equation(target, phi1, phi2, probes=None, tolerance=None,
                             eps_ladder=(1e-1, 1e-2, 1e-3), **context):
    """R(phi1) R(phi2) = -R((r*phi1) phi2 + phi1 (r*phi2))."""
    psi = _combined_resolvent_argument(phi1, phi2)
    if isinstance(target, JordanForm):
        tol = 1e-5 if tolerance is None else tolerance
        lhs = mat_resolvent_apply(target, phi1) @ mat_resolvent_apply(target, phi2)
        rhs = -mat_resolvent_apply(target, psi)
        return make_report("resolvent_equation/matrix", lhs, rhs, tol, **context)

    model, pert = target
    tol = 1e-4 if tolerance is None else tolerance
    f1, f2 = probes
    session = BracketSession(model, pert, f1, f2)

    # u = R(phi2) f2 = f2 * (r*phi2)(P(y)) + g * smear of <h|R_W f2>/C
    from ._cauchy import cauchy_on_real

    transform_fits = []
    for piece in model.pieces:
        rlo, rhi = piece.range_lo, piece.range_hi
        fit = ChebFit.from_callable(lambda ws: cauchy_on_real(phi2, ws),
                                    rlo, rhi, degree=64)
        transform_fits.append((rlo, rhi, fit))

    d_h2 = session.d_h2
    d_hg = session.d_hg

    def coupling_vals(xs, u):
        zs = xs + 1j * u
        return d_h2.at_many(zs) / (1.0 - d_hg.at_many(zs)) \
            * phi2.eval_xy(xs, np.full_like(xs, u))

    c2_coupling = _strip_smear(coupling_vals, phi2.support_rect(), eps_ladder)

    def u_fn(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        py = model.profile(y)
        tvals = np.zeros(py.shape, dtype=complex)
        for rlo, rhi, fit in transform_fits:
            inside = (py >= rlo) & (py <= rhi)
            tvals[inside] = fit(py[inside])
        return np.asarray(f2(y)) * tvals + np.asarray(pert.g(y)) * c2_coupling

    u_state = ComposedState(u_fn, _segments_of_state(f2) + _segments_of_state(pert.g))
    d_1u = PairDensity(model, f1, u_state)
    d_hu = PairDensity(model, pert.h, u_state)
    d_1g = session.d_1g

    def lhs_vals(xs, u):
        zs = xs + 1j * u
        c = 1.0 - d_hg.at_many(zs)
        vals = d_1u.at_many(zs) + d_1g.at_many(zs) * d_hu.at_many(zs) / c
        return vals * phi1.eval_xy(xs, np.full_like(xs, u))

    lhs = _strip_smear(lhs_vals, phi1.support_rect(), eps_ladder)

    def rhs_vals(xs, u):
        zs = xs + 1j * u
        return session.resolvent_many(zs) * psi.eval_xy(xs, np.full_like(xs, u))

    rhs = -_strip_smear(rhs_vals, psi.support_rect(), eps_ladder)
    return make_report("resolvent_equation/perturbed", complex(lhs),
                       complex(rhs), tol, **context)
