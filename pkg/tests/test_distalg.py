import math

import numpy as np
import pytest

from spectraldist.distalg import (
    DistAtom,
    Evaluable2D,
    TestFunction2D,
    atom_apply,
    cauchy_transform,
    dbar,
    make_product_bump,
    pv_power_apply,
    pv_product_check,
    _tensor_quad,
)
from spectraldist.errors import CapabilityError
from spectraldist.quadrature import make_bump, make_plateau

# frozen oracle: adaptive Gauss-Kronrod integral of the unit bump
BUMP_INTEGRAL = 0.44399381616807937


def _fd_wirtinger(phi, z, h=1e-4):
    """Finite-difference holomorphic derivative, Richardson-extrapolated."""
    def d(hh):
        dx = (phi(z + hh) - phi(z - hh)) / (2 * hh)
        dy = (phi(z + 1j * hh) - phi(z - 1j * hh)) / (2 * hh)
        return 0.5 * (dx - 1j * dy)

    d1, d2 = d(h), d(h / 2)
    return (4 * d2 - d1) / 3


def test_dbar_center_of_real_product_bump():
    phi = make_product_bump(0.3 + 0.1j, 1.0, 0.8)
    assert abs(dbar(phi, 0.3 + 0.1j)) < 1e-12


def test_dbar_of_conjugate_coordinate():
    # local model of zbar = x - i y through plateau factors
    px = make_plateau(-1.0, 1.0, 1.0)
    py = make_plateau(-1.0, 1.0, 1.0)
    zbar = TestFunction2D.from_terms([
        (1.0, px.times_identity(), py),
        (-1j, px, py.times_identity()),
    ])
    assert abs(dbar(zbar, 0.0) - 1.0) < 1e-9
    assert abs(dbar(zbar, 0.2 - 0.3j) - 1.0) < 1e-9


def test_dbar_outside_support():
    phi = make_product_bump(0.0, 1.0, 1.0)
    assert dbar(phi, 5.0 + 5.0j) == 0.0


def test_cauchy_far_field():
    phi = make_product_bump(0.0, 1.0, 1.0)
    mass = _tensor_quad(phi, phi.support_rect(), rel_tol=1e-11)
    for z in (40.0 + 13.0j, -25.0 + 2.0j, 60.0j):
        val = cauchy_transform(phi, z)
        assert abs(val - mass / z) < 5.0 * abs(mass) / abs(z) ** 2


def test_cauchy_even_bump_at_center():
    phi = make_product_bump(0.0, 1.0, 1.0)
    assert abs(cauchy_transform(phi, 0.0)) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_dbar_delta_identity(seed):
    # -(1/pi) int (1/z) dbar(phi) d2z = phi(0)
    rng = np.random.default_rng(100 + seed)
    cx, cy = rng.normal(scale=0.25, size=2)
    rx, ry = rng.uniform(0.8, 1.4, size=2)
    phi = make_product_bump(complex(cx, cy), rx, ry)
    lhs = cauchy_transform(phi.dbar(), 0.0) / np.pi
    assert abs(lhs - phi(0.0)) < 1e-6


def test_atom_delta_value():
    phi = make_product_bump(0.2 + 0.1j, 1.0, 1.1)
    z0 = 0.4 + 0.3j
    atom = DistAtom(kind="delta_deriv", point=z0, order=0)
    assert abs(atom_apply(atom, phi) - phi(z0)) < 1e-13


def test_atom_delta_first_derivative_vs_finite_differences():
    phi = make_product_bump(0.2 + 0.1j, 1.0, 1.1)
    z0 = 0.5 + 0.2j
    atom = DistAtom(kind="delta_deriv", point=z0, order=1)
    got = atom_apply(atom, phi)
    assert abs(got - (-_fd_wirtinger(phi, z0))) < 1e-8


def test_atom_linearity():
    phi = make_product_bump(0.0, 1.0, 1.0)
    psi = make_product_bump(0.3 + 0.2j, 0.8, 0.9)
    z0 = 0.25 + 0.15j
    atom1 = DistAtom(kind="delta_deriv", point=z0, order=1, coefficient=1.0)
    atom3 = DistAtom(kind="delta_deriv", point=z0, order=1, coefficient=3.0 - 2.0j)
    assert abs(atom_apply(atom3, phi) - (3.0 - 2.0j) * atom_apply(atom1, phi)) < 1e-14
    combined = TestFunction2D.from_terms(phi.terms + psi.terms)
    assert abs(atom_apply(atom1, combined)
               - atom_apply(atom1, phi) - atom_apply(atom1, psi)) < 1e-13


@pytest.mark.parametrize("order", [1, 2, 3])
def test_delta_deriv_leibniz(order):
    phi1 = make_product_bump(0.1, 1.2, 1.0)
    phi2 = make_product_bump(-0.1 + 0.1j, 1.0, 1.2)
    prod = phi1.multiply(phi2)
    z0 = 0.05 + 0.04j
    lhs = prod.wirtinger(order, z0)
    rhs = sum(
        math.comb(order, j) * phi1.wirtinger(j, z0) * phi2.wirtinger(order - j, z0)
        for j in range(order + 1)
    )
    assert abs(lhs - rhs) < 1e-7 * max(1.0, abs(rhs))


def test_pv_power_zero_matches_cauchy_transform():
    phi = make_product_bump(0.0, 1.0, 1.0)
    for z0 in (0.2 + 0.1j, -0.3 - 0.25j):
        atom_val = atom_apply(DistAtom(kind="pv_power", point=z0, order=0), phi)
        assert abs(atom_val - (-cauchy_transform(phi, z0))) < 1e-7


@pytest.mark.parametrize("order", [1, 2])
def test_pv_power_matches_derivative_form(order):
    # the annulus limit of 1/(z-z0)^(k+1) acts like (1/k!) times the Cauchy
    # kernel applied to the k-th holomorphic derivative of the test function
    phi = make_product_bump(0.1, 1.0, 1.1)
    z0 = 0.15 - 0.1j
    rect = phi.support_rect()
    dk = Evaluable2D(lambda x, y: phi.wirtinger(order, x + 1j * y), rect)
    closed = -cauchy_transform(dk, z0) / math.factorial(order)
    annulus = pv_power_apply(phi, z0, order)
    assert abs(annulus - closed) < 1e-6 * max(1.0, abs(closed))


def test_atom_order_cap():
    phi = make_product_bump(0.0, 1.0, 1.0)
    with pytest.raises(CapabilityError):
        atom_apply(DistAtom(kind="delta_deriv", point=0.0, order=7), phi)


def test_density2d_atom_total_mass():
    phi = make_product_bump(0.5 + 0.25j, 0.7, 0.4)
    atom = DistAtom(kind="density2d", density=lambda z: np.ones_like(z),
                    rect=(-2.0, 2.0, -2.0, 2.0))
    got = atom_apply(atom, phi)
    assert abs(got - 0.7 * 0.4 * BUMP_INTEGRAL**2) < 1e-9


def test_pv_product_identity_overlapping():
    f = make_bump(0.0, 1.0)
    lhs, rhs = pv_product_check(f, f, f)
    assert abs(lhs - rhs) < 1e-4 * abs(rhs)


def test_pv_product_identity_disjoint_h():
    # h away from f, g: the coincidence term vanishes and both sides reduce
    # to the smooth double principal-value integral
    f = make_bump(0.0, 0.8)
    g = make_bump(0.2, 0.7)
    h = make_bump(3.0, 0.5)
    lhs, rhs = pv_product_check(f, g, h)
    assert abs(lhs - rhs) < 1e-5 * max(1.0, abs(rhs))


def test_pv_product_random_triples():
    rng = np.random.default_rng(41)
    for _ in range(2):
        f = make_bump(rng.normal(scale=0.2), rng.uniform(0.7, 1.1))
        g = make_bump(rng.normal(scale=0.2), rng.uniform(0.7, 1.1))
        h = make_bump(rng.normal(scale=0.2), rng.uniform(0.7, 1.1))
        lhs, rhs = pv_product_check(f, g, h)
        assert abs(lhs - rhs) < 1e-4 * max(abs(rhs), 0.1)
