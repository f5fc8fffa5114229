import numpy as np
import pytest

from spectraldist.distalg import TestFunction2D, make_product_bump
from spectraldist.errors import CapabilityError, ConditioningError, DomainError
from spectraldist.matspec import (
    jordan_decompose,
    mat_resolvent_apply,
    mat_spectral_apply,
    unitary_spectral_apply,
)
from spectraldist.quadrature import make_plateau


def wide_plateau_2d(half_width=4.0):
    p = make_plateau(-half_width, half_width, half_width)
    return TestFunction2D(p, p)


def test_decompose_identity():
    form = jordan_decompose(np.eye(2))
    assert form.eigenvalues == (1.0 + 0.0j,)
    assert np.allclose(form.projectors[0], np.eye(2))
    assert np.allclose(form.nilpotents[0], 0.0)


def test_decompose_nilpotent_block():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    form = jordan_decompose(A)
    assert form.eigenvalues == (0.0 + 0.0j,)
    assert np.allclose(form.projectors[0], np.eye(2))
    assert np.allclose(form.nilpotents[0], A, atol=1e-12)
    assert form.block_sizes == (2,)


def test_decompose_diag():
    form = jordan_decompose(np.diag([1.0, 2.0]))
    assert sorted(l.real for l in form.eigenvalues) == [1.0, 2.0]
    for lam, p in zip(form.eigenvalues, form.projectors):
        want = np.diag([1.0, 0.0]) if lam == 1.0 else np.diag([0.0, 1.0])
        assert np.allclose(p, want, atol=1e-12)


def test_decompose_invariants_similarity():
    rng = np.random.default_rng(3)
    J = np.zeros((5, 5), dtype=complex)
    J[0, 0] = J[1, 1] = 1.5
    J[0, 1] = 1.0  # one 2-block
    J[2, 2] = -0.5
    J[3, 3] = 2.0 + 1.0j
    J[4, 4] = -1.0j
    S = np.eye(5) + 0.3 * rng.normal(size=(5, 5))
    A = S @ J @ np.linalg.inv(S)
    form = jordan_decompose(A)
    n = form.dimension
    total = sum(form.projectors, np.zeros((n, n), dtype=complex))
    assert np.linalg.norm(total - np.eye(n)) < 1e-10
    for i, p in enumerate(form.projectors):
        assert np.linalg.norm(p @ p - p) < 1e-10
        for j, q in enumerate(form.projectors):
            if i != j:
                assert np.linalg.norm(p @ q) < 1e-10
    for a, p in zip(form.nilpotents, form.projectors):
        assert np.linalg.norm(a @ p - a) < 1e-9
    assert np.linalg.norm(form.reconstruct() - A) < 1e-8
    assert sorted(form.block_sizes) == [1, 1, 1, 2]


def test_decompose_ill_conditioned_cluster_raises():
    # eigenvalues +-1e-7: splitting them needs projectors of norm ~5e6,
    # whose relations cannot hold to 1e-10 in double precision
    eps = 1e-7
    A = np.array([[0.0, 1.0], [eps**2, 0.0]])
    with pytest.raises(ConditioningError):
        jordan_decompose(A, cluster_tol=1e-9)
    # treating the pair as one cluster is fine
    form = jordan_decompose(A, cluster_tol=1e-3)
    assert form.block_sizes == (2,)


def test_dimension_cap():
    with pytest.raises(CapabilityError):
        jordan_decompose(np.eye(9))


def test_spectral_apply_diag():
    form = jordan_decompose(np.diag([1.0, 2.0]))
    phi = make_product_bump(1.5, 2.0, 1.0)
    M = mat_spectral_apply(form, phi)
    want = np.diag([complex(phi(1.0 + 0.0j)), complex(phi(2.0 + 0.0j))])
    assert np.linalg.norm(M - want) < 1e-12


def test_spectral_apply_jordan_block():
    lam = 0.5
    A = np.array([[lam, 1.0], [0.0, lam]])
    form = jordan_decompose(A)
    phi = make_product_bump(lam, 1.0, 1.0)
    M = mat_spectral_apply(form, phi)
    want = complex(phi(lam + 0j)) * np.eye(2) \
        + complex(phi.wirtinger(1, lam + 0j)) * np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.linalg.norm(M - want) < 1e-12


@pytest.mark.parametrize("A", [
    np.diag([1.0, 2.0]),
    np.array([[0.5, 1.0], [0.0, 0.5]]),
    np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]]),
])
def test_completeness_wide_plateau(A):
    form = jordan_decompose(A)
    phi = wide_plateau_2d()
    M = mat_spectral_apply(form, phi)
    assert np.linalg.norm(M - np.eye(A.shape[0])) < 1e-8


@pytest.mark.parametrize("A", [
    np.diag([1.0, 2.0]),
    np.array([[0.5, 1.0], [0.0, 0.5]]),
    np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 2.0]]),
])
def test_multiplicativity(A):
    form = jordan_decompose(A)
    lam0 = form.eigenvalues[0]
    phi1 = make_product_bump(lam0 + 0.1, 1.2, 0.9)
    phi2 = make_product_bump(lam0 - 0.15, 1.0, 1.1)
    M1 = mat_spectral_apply(form, phi1)
    M2 = mat_spectral_apply(form, phi2)
    M12 = mat_spectral_apply(form, phi1.multiply(phi2))
    assert np.linalg.norm(M1 @ M2 - M12) < 1e-7


def test_multiplicativity_leibniz_oracle():
    # 2x2 jordan block: M(phi1) M(phi2) must reproduce
    # p*phi1*phi2 + a*(phi1 phi2' + phi2 phi1') at the eigenvalue
    lam = 0.5 + 0.0j
    A = np.array([[0.5, 1.0], [0.0, 0.5]])
    form = jordan_decompose(A)
    phi1 = make_product_bump(0.6, 1.0, 0.9)
    phi2 = make_product_bump(0.3, 1.1, 1.0)
    M1 = mat_spectral_apply(form, phi1)
    M2 = mat_spectral_apply(form, phi2)
    v1, v2 = complex(phi1(lam)), complex(phi2(lam))
    d1, d2 = complex(phi1.wirtinger(1, lam)), complex(phi2.wirtinger(1, lam))
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    want = v1 * v2 * np.eye(2) + (v1 * d2 + v2 * d1) * a
    assert np.linalg.norm(M1 @ M2 - want) < 1e-7


@pytest.mark.parametrize("A", [
    np.diag([1.0, 2.0]),
    np.array([[0.5, 1.0], [0.0, 0.5]]),
])
def test_eigenprojector_relation(A):
    form = jordan_decompose(A)
    phi = make_product_bump(np.mean(np.diag(A)), 2.0, 1.5)
    M = mat_spectral_apply(form, phi)
    Mz = mat_spectral_apply(form, phi.times_z())
    assert np.linalg.norm(A @ M - Mz) < 1e-7


def test_resolvent_apply_regular_region():
    form = jordan_decompose(np.diag([1.0, 2.0]))
    phi = make_product_bump(-1.5 + 0.5j, 0.6, 0.5)  # support away from {1,2}
    R = mat_resolvent_apply(form, phi)
    from spectraldist.distalg import Evaluable2D, _tensor_quad
    rect = phi.support_rect()
    for idx, lam in ((0, 1.0), (1, 2.0)):
        direct = _tensor_quad(
            Evaluable2D(lambda X, Y: phi.eval_xy(X, Y) / (X + 1j * Y - lam), rect),
            rect, rel_tol=1e-10)
        assert abs(R[idx, idx] - direct) < 1e-8
    assert abs(R[0, 1]) < 1e-10 and abs(R[1, 0]) < 1e-10


def test_resolvent_spectral_consistency():
    # -(1/pi) R(dbar phi) = M(phi)
    A = np.array([[0.5, 1.0], [0.0, 0.5]])
    form = jordan_decompose(A)
    phi = make_product_bump(0.4, 1.0, 1.1)
    R = mat_resolvent_apply(form, phi.dbar())
    M = mat_spectral_apply(form, phi)
    assert np.linalg.norm(-R / np.pi - M) < 1e-6


def test_unitary_scalar():
    phi = make_product_bump(1.0, 2.0, 1.8)
    M, tail = unitary_spectral_apply(np.array([[1.0 + 0.0j]]), phi, 64,
                                     return_tail=True)
    assert abs(M[0, 0] - phi(1.0 + 0.0j)) < 1e-6
    assert tail < 1e-7


def test_unitary_matches_matrix_route():
    U = np.diag([1.0 + 0.0j, -1.0 + 0.0j])
    phi = make_product_bump(0.2 + 0.1j, 1.6, 1.5)
    MU = unitary_spectral_apply(U, phi, 64)
    MJ = mat_spectral_apply(jordan_decompose(U), phi)
    assert np.linalg.norm(MU - MJ) < 1e-6


def test_unitary_phi_vanishing_on_circle():
    phi = make_product_bump(0.0, 0.4, 0.4)  # support inside the unit circle
    M, tail = unitary_spectral_apply(np.array([[1j]]), phi, 32, return_tail=True)
    assert np.linalg.norm(M) < max(1e-10, 10 * tail)


def test_unitary_rejects_non_unitary():
    with pytest.raises(DomainError):
        unitary_spectral_apply(np.array([[2.0 + 0.0j]]), make_product_bump(0, 1, 1), 8)


def test_counterexample_family_needs_nilpotent_coefficient():
    # resolvent 1/z - pi C delta(z) gives M(phi) = phi(0) + C dbar(phi)(0);
    # multiplicativity holds iff C^2 = 0 (documented negative case)
    phi1 = make_product_bump(0.3, 1.0, 0.9)
    phi2 = make_product_bump(-0.2, 1.1, 1.0)

    def M_of(C, phi):
        return complex(phi(0.0j)) * np.eye(2) + C * complex(phi.dbar_value(0.0j))

    prod = phi1.multiply(phi2)
    C_nil = np.array([[0.0, 1.0], [0.0, 0.0]])
    lhs = M_of(C_nil, phi1) @ M_of(C_nil, phi2)
    rhs = M_of(C_nil, prod)
    assert np.linalg.norm(lhs - rhs) < 1e-9

    C_bad = np.eye(2)
    lhs = M_of(C_bad, phi1) @ M_of(C_bad, phi2)
    rhs = M_of(C_bad, prod)
    gap = abs(complex(phi1.dbar_value(0.0j)) * complex(phi2.dbar_value(0.0j)))
    assert gap > 1e-4
    assert np.linalg.norm(lhs - rhs) == pytest.approx(np.sqrt(2) * gap, rel=1e-6)
