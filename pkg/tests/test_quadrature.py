import numpy as np
import pytest
from scipy.integrate import quad

from spectraldist.errors import (
    AccuracyError,
    BoundaryError,
    CapabilityError,
    DomainError,
)
from spectraldist.quadrature import (
    ChebFit,
    QuadratureRule,
    deriv,
    integrate,
    make_bump,
    make_plateau,
    plemelj_bracket,
    plemelj_epsilon_oracle,
    pv_integrate,
)

# frozen oracle: adaptive Gauss-Kronrod (scipy.integrate.quad) at tol 1e-12
BUMP_INTEGRAL = 0.44399381616807937

# frozen oracle: symbolic differentiation of exp(-1/(1-s^2)),
# evaluated in 30-digit arithmetic; entries (order, s, value)
BUMP_DERIVS = [
    (1, 0.2, -0.1531536811887365),
    (1, 0.5, -0.4686171344279587),
    (1, 0.8, -0.7676114076804483),
    (2, 0.2, -0.8269235216961294),
    (2, 0.5, -1.3537828327918806),
    (2, 0.8, 1.693957273121977),
    (3, 0.2, -0.9395305486938037),
    (3, 0.5, -2.3141586885331296),
    (3, 0.8, 54.68982663012125),
    (4, 0.2, -5.234917267731572),
    (4, 0.5, 2.818131025147011),
    (4, 0.8, 674.2085286957652),
    (5, 0.2, -7.336935517736658),
    (5, 0.5, 168.79530613881352),
    (5, 0.8, 2093.1792013223558),
    (6, 0.2, -13.92218357965671),
    (6, 0.5, 2733.0177288200694),
    (6, 0.8, -258866.16706187293),
]

# double-precision floors for series differentiation (pointwise-relative for
# low orders; orders 5-6 are rounding-limited and only meaningful relative to
# the derivative's sup over the support, frozen from the symbolic oracle)
DERIV_RTOL = {1: 1e-10, 2: 1e-9, 3: 1e-7, 4: 1e-6}
DERIV_SUP = {5: 596357.772591356, 6: 81474746.39137371}
DERIV_SCALED_TOL = {5: 1e-7, 6: 1e-6}


def test_bump_peak_value():
    b = make_bump(0.0, 1.0)
    assert abs(b(0.0) - np.exp(-1.0)) < 1e-12


def test_bump_compact_support_exact():
    b = make_bump(0.3, 0.7)
    outside = np.array([-0.4, 1.0, 1.5, 37.0, -12.0])
    assert np.all(b(outside) == 0.0)
    for k in range(7):
        assert np.all(b.deriv(k, outside) == 0.0)


def test_bump_integral_against_frozen_oracle():
    # re-derive the frozen value with the independent oracle
    val, err = quad(lambda t: np.exp(-1.0 / (1.0 - t * t)) if abs(t) < 1 else 0.0,
                    -1, 1, epsabs=1e-14, epsrel=1e-13, limit=200)
    assert abs(val - BUMP_INTEGRAL) < 1e-12
    b = make_bump(0.0, 1.0)
    assert abs(integrate(b, -1.0, 1.0) - BUMP_INTEGRAL) < 1e-10
    # shifted/scaled bump integrates to radius * the unit value
    b2 = make_bump(2.0, 0.5)
    assert abs(integrate(b2, 1.5, 2.5) - 0.5 * BUMP_INTEGRAL) < 1e-10


def test_deriv_trivial():
    b = make_bump(0.0, 1.0)
    assert deriv(b, 1, 0.0) == pytest.approx(0.0, abs=1e-12)
    tt = np.linspace(-0.9, 0.9, 11)
    assert np.allclose(deriv(b, 0, tt), b(tt), rtol=0, atol=0)


def test_deriv2_at_center_symbolic():
    b = make_bump(0.0, 1.0)
    assert abs(deriv(b, 2, 0.0) - (-2.0 * np.exp(-1.0))) < 1e-9


@pytest.mark.parametrize("order,s,expected", BUMP_DERIVS)
def test_deriv_symbolic_spot_values(order, s, expected):
    b = make_bump(0.0, 1.0)
    got = deriv(b, order, s)
    if order in DERIV_RTOL:
        assert abs(got - expected) <= DERIV_RTOL[order] * max(abs(expected), 1.0)
    else:
        assert abs(got - expected) <= DERIV_SCALED_TOL[order] * DERIV_SUP[order]


def test_deriv_chain_rule_scaling():
    b1 = make_bump(0.0, 1.0)
    b2 = make_bump(1.0, 2.0)  # same profile, radius 2, center 1
    s = 0.5
    assert b2(1.0 + 2.0 * s) == pytest.approx(b1(s), rel=1e-13)
    assert deriv(b2, 3, 1.0 + 2.0 * s) == pytest.approx(deriv(b1, 3, s) / 8.0, rel=1e-7)


def test_deriv_cap():
    b = make_bump(0.0, 1.0)
    with pytest.raises(CapabilityError):
        deriv(b, 7, 0.0)


def test_make_bump_bad_radius():
    with pytest.raises(DomainError):
        make_bump(0.0, 0.0)
    with pytest.raises(DomainError):
        make_bump(0.0, -2.0)


def test_integrate_trivial():
    one = lambda t: np.ones_like(t)
    assert integrate(one, 0.0, 1.0) == pytest.approx(1.0, abs=1e-13)
    assert integrate(lambda t: t * t, 0.0, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-13)


def test_integrate_nonconvergence_carries_best():
    rough = lambda t: np.sqrt(np.abs(t - 0.3))
    with pytest.raises(AccuracyError) as exc:
        integrate(rough, 0.0, 1.0, rel_tol=1e-14, max_levels=2)
    assert exc.value.best is not None
    assert abs(exc.value.best - integrate(rough, 0.0, 1.0, rel_tol=1e-8,
                                          breakpoints=(0.3,))) < 1e-2


def test_quadrature_rule_invariants():
    rule = QuadratureRule.gauss_legendre(8, -2.0, 5.0)
    assert rule.weights.sum() == pytest.approx(7.0, rel=1e-14)
    # exact for polynomials up to the stated order
    for p in range(rule.order + 1):
        exact = (5.0 ** (p + 1) - (-2.0) ** (p + 1)) / (p + 1)
        assert np.sum(rule.weights * rule.nodes**p) == pytest.approx(exact, rel=1e-12)


def test_pv_constant_symmetric_is_zero():
    r = pv_integrate(lambda w: np.ones_like(w), 0.0, -1.0, 1.0)
    assert abs(r.value) < 1e-12


def test_pv_constant_asymmetric_log():
    r = pv_integrate(lambda w: np.ones_like(w), 0.0, -1.0, 2.0)
    assert abs(r.value - (-np.log(2.0))) < 1e-12


def test_pv_even_bump_is_zero():
    b = make_bump(0.0, 1.0)
    r = pv_integrate(b, 0.0, -1.0, 1.0)
    assert abs(r.value) < 1e-11
    assert r.estimated_error < 1e-8


def test_pv_pole_outside_is_regular():
    b = make_bump(0.0, 1.0)
    r = pv_integrate(b, 2.0, -1.0, 1.0)
    direct = integrate(lambda w: b(w) / (2.0 - w), -1.0, 1.0)
    assert abs(r.value - direct) < 1e-10


def test_pv_linearity():
    rng = np.random.default_rng(7)
    f = make_bump(-0.1, 0.8)
    g = make_bump(0.2, 0.6)
    a, b = -1.0, 1.0
    for _ in range(3):
        al, be = rng.normal(size=2)
        combo = lambda w: al * f(w) + be * g(w)
        lhs = pv_integrate(combo, 0.05, a, b).value
        rhs = al * pv_integrate(f, 0.05, a, b).value + be * pv_integrate(g, 0.05, a, b).value
        assert abs(lhs - rhs) < 1e-10


def test_pv_antisymmetry_even_density():
    # even density about the pole over a symmetric window -> exact cancellation
    b = make_bump(0.4, 0.3)
    r = pv_integrate(b, 0.4, 0.4 - 0.5, 0.4 + 0.5)
    assert abs(r.value) < 1e-11


def test_plemelj_bump_sides():
    b = make_bump(0.0, 1.0)
    plus = plemelj_bracket(b, 0.0, "+", -1.0, 1.0)
    minus = plemelj_bracket(b, 0.0, "-", -1.0, 1.0)
    assert abs(plus - (-1j * np.pi * np.exp(-1.0))) < 1e-10
    assert abs(minus - (+1j * np.pi * np.exp(-1.0))) < 1e-10


def test_plemelj_constant_combined():
    one = lambda w: np.ones_like(np.asarray(w, dtype=float))
    got = plemelj_bracket(one, 0.0, "+", -1.0, 2.0)
    assert abs(got - (-np.log(2.0) - 1j * np.pi)) < 1e-10


def test_plemelj_boundary_error():
    b = make_bump(0.0, 1.0)
    with pytest.raises(BoundaryError):
        plemelj_bracket(b, -1.0, "+", -1.0, 1.0)
    with pytest.raises(BoundaryError):
        plemelj_bracket(b, 1.5, "+", -1.0, 1.0)


@pytest.mark.parametrize("x", [-0.42, 0.0, 0.17, 0.55])
@pytest.mark.parametrize("side", ["+", "-"])
def test_plemelj_epsilon_consistency(x, side):
    # invariant: subtraction path and Richardson-extrapolated epsilon limit
    # agree below 1e-6 for bump densities
    b = make_bump(0.1, 0.8)
    direct = plemelj_bracket(b, x, side, -0.9, 1.1)
    oracle = plemelj_epsilon_oracle(b, x, side, -0.9, 1.1)
    assert abs(direct - oracle) < 1e-6


def test_plateau_flat_and_supported():
    p = make_plateau(-1.0, 1.0, 1.0)
    tt = np.linspace(-0.9, 0.9, 41)
    assert np.max(np.abs(p(tt) - 1.0)) < 1e-11
    assert np.all(p(np.array([-2.0, 2.0, 5.0])) == 0.0)
    ramp = p(np.array([-1.5, 1.5]))
    assert np.all((ramp > 0.4) & (ramp < 0.6))


def test_plateau_wide_has_flat_derivatives():
    # derivative flatness improves like 1/radius^k; wide plateaus are the
    # ones completeness checks rely on
    p = make_plateau(-5.0, 5.0, 5.0)
    tt = np.linspace(-4.0, 4.0, 21)
    assert np.max(np.abs(p.deriv(1, tt))) < 1e-9
    assert np.max(np.abs(p.deriv(2, tt))) < 1e-8


def test_product_and_times_identity():
    f = make_bump(0.0, 1.0)
    g = make_bump(0.5, 1.0)
    prod = f.multiply(g)
    tt = np.linspace(-0.6, 1.4, 37)
    assert np.allclose(prod(tt), f(tt) * g(tt), atol=1e-12)
    tf = f.times_identity()
    assert np.allclose(tf(tt), tt * f(tt), atol=1e-13)
    # disjoint supports give the zero function
    h = make_bump(5.0, 1.0)
    assert f.multiply(h).is_zero()


def test_chebfit_roundtrip():
    fit = ChebFit.from_callable(np.cos, -2.0, 1.0, degree=40)
    tt = np.linspace(-2.0, 1.0, 101)
    assert np.max(np.abs(fit(tt) - np.cos(tt))) < 1e-13
    assert np.max(np.abs(fit.derivative(1)(tt) + np.sin(tt))) < 1e-11
