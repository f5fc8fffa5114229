"""Spectral distributions of finite matrices and finite unitary matrices.

A matrix's spectral data is reduced to Jordan form: eigenprojectors p_i,
nilpotents a_i and clustered eigenvalues lambda_i. Smearing a test function
against the spectral distribution then needs only holomorphic derivatives of
the test function at the eigenvalues,

    M(phi) = sum_i p_i sum_k (1/k!) a_i^k (d^k phi)(lambda_i),

while the resolvent acts through principal-value power atoms located at the
eigenvalues. Unitary matrices instead smear through Fourier coefficients of
the test function restricted to the unit circle.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .distalg import DistAtom, atom_apply
from .errors import CapabilityError, ConditioningError, DomainError
from .quadrature import _leggauss_cached

MAX_DIM = 8

_INVARIANT_TOL = 1e-10


@dataclass(frozen=True)
class JordanForm:
    """Eigenvalues with their eigenprojectors and nilpotent parts.

    Satisfies p_i p_j = delta_ij p_i, sum p_i = 1, a_i = (A - lambda_i) p_i
    with a_i^(cluster size) = 0, and A = sum_i (lambda_i p_i + a_i).
    """

    eigenvalues: tuple
    projectors: tuple
    nilpotents: tuple
    dimension: int

    @property
    def block_sizes(self):
        sizes = []
        for a in self.nilpotents:
            n = 1
            power = np.array(a)
            while np.linalg.norm(power) > 1e-8 and n <= self.dimension:
                power = power @ a
                n += 1
            sizes.append(n)
        return tuple(sizes)

    def reconstruct(self):
        out = np.zeros((self.dimension, self.dimension), dtype=complex)
        for lam, p, a in zip(self.eigenvalues, self.projectors, self.nilpotents):
            out += lam * p + a
        return out


def _cluster(values, tol):
    order = np.argsort(values.real + 1e-12 * values.imag)
    groups = []
    for idx in order:
        for g in groups:
            if abs(values[idx] - values[g[0]]) <= tol:
                g.append(idx)
                break
        else:
            groups.append([idx])
    return groups


def _spectral_projector(A, cluster_vals, tol):
    """Projector onto the invariant subspace of one eigenvalue cluster via
    sorted Schur form and a Sylvester solve (contour-free)."""
    n = A.shape[0]
    cluster_vals = np.asarray(cluster_vals)

    def in_cluster(lam):
        return bool(np.min(np.abs(lam - cluster_vals)) <= 10 * tol)

    T, Q, sdim = sla.schur(A, output="complex", sort=in_cluster)
    m = int(sdim)
    if m != len(cluster_vals):
        raise ConditioningError(
            f"schur sort isolated {m} eigenvalues for a cluster of "
            f"{len(cluster_vals)}; clustering tolerance {tol:g} is ambiguous",
            defect=abs(m - len(cluster_vals)),
        )
    if m == n:
        return np.eye(n, dtype=complex)
    T11, T12, T22 = T[:m, :m], T[:m, m:], T[m:, m:]
    Y = sla.solve_sylvester(T11, -T22, -T12)
    S = np.eye(n, dtype=complex)
    S[:m, m:] = Y
    Sinv = np.eye(n, dtype=complex)
    Sinv[:m, m:] = -Y
    E = np.zeros((n, n), dtype=complex)
    E[:m, :m] = np.eye(m)
    return Q @ (S @ E @ Sinv) @ Q.conj().T


def jordan_decompose(A, cluster_tol=1e-6):
    """Jordan-type spectral data of a small matrix.

    Eigenvalues within ``cluster_tol`` of each other are treated as one
    (possibly defective) eigenvalue; the projector of each cluster comes from
    Schur block extraction, and the nilpotent part is (A - lambda) p.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"need a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n > MAX_DIM:
        raise CapabilityError(f"dimension {n} exceeds supported cap {MAX_DIM}")
    eigvals = np.linalg.eigvals(A)
    groups = _cluster(eigvals, cluster_tol)
    lambdas, projectors, nilpotents = [], [], []
    for g in groups:
        lam = complex(np.mean(eigvals[g]))
        p = _spectral_projector(A, eigvals[g], cluster_tol)
        a = (A - lam * np.eye(n)) @ p
        lambdas.append(lam)
        projectors.append(p)
        nilpotents.append(a)

    form = JordanForm(eigenvalues=tuple(lambdas), projectors=tuple(projectors),
                      nilpotents=tuple(nilpotents), dimension=n)
    _check_invariants(form, A, [len(g) for g in groups])
    return form


def _check_invariants(form, A, sizes):
    n = form.dimension
    resolution = sum(form.projectors, np.zeros((n, n), dtype=complex))
    defect = np.linalg.norm(resolution - np.eye(n))
    for i, p in enumerate(form.projectors):
        defect = max(defect, np.linalg.norm(p @ p - p))
        for j, q in enumerate(form.projectors):
            if i != j:
                defect = max(defect, np.linalg.norm(p @ q))
    if defect > _INVARIANT_TOL:
        raise ConditioningError(
            f"projector relations violated by {defect:.2e}; the similarity is "
            "too ill-conditioned for the requested clustering tolerance",
            defect=defect,
        )
    for a, p, m in zip(form.nilpotents, form.projectors, sizes):
        power = np.eye(n, dtype=complex)
        for _ in range(m):
            power = power @ a
        defect = max(defect, np.linalg.norm(power))
        defect = max(defect, np.linalg.norm(a @ p - a))
    recon = np.linalg.norm(form.reconstruct() - A)
    if max(defect, recon) > 1e-6:
        raise ConditioningError(
            f"jordan data defect {max(defect, recon):.2e} "
            "(nilpotency/reconstruction)", defect=max(defect, recon),
        )


def mat_spectral_apply(form, phi):
    """Smeared spectral distribution of the matrix: returns M(phi)."""
    n = form.dimension
    out = np.zeros((n, n), dtype=complex)
    for lam, p, a, size in zip(form.eigenvalues, form.projectors,
                               form.nilpotents, form.block_sizes):
        if size - 1 > 6:
            raise CapabilityError(f"jordan block of size {size} exceeds the derivative cap")
        term = np.zeros_like(out)
        ak = np.eye(n, dtype=complex)
        fact = 1.0
        for k in range(size):
            if k > 0:
                ak = ak @ a
                fact *= k
            term += (ak / fact) * complex(phi.wirtinger(k, lam))
        out += p @ term
    return out


def mat_resolvent_apply(form, phi, rel_tol=1e-8):
    """Smeared resolvent distribution of the matrix: principal-value power
    atoms at each eigenvalue, weighted by p a^k."""
    n = form.dimension
    out = np.zeros((n, n), dtype=complex)
    for lam, p, a, size in zip(form.eigenvalues, form.projectors,
                               form.nilpotents, form.block_sizes):
        ak = np.eye(n, dtype=complex)
        for k in range(size):
            if k > 0:
                ak = ak @ a
            atom = DistAtom(kind="pv_power", point=lam, order=k,
                            coefficient=p @ ak)
            out += atom_apply(atom, phi, rel_tol=rel_tol)
    return out


def unitary_spectral_apply(U, phi, L, return_tail=False):
    """Smeared spectral distribution of a unitary matrix.

    Sums U^l c_l over |l| <= L, where c_l are the Fourier coefficients of
    phi restricted to the unit circle. The tail estimate is the largest
    coefficient magnitude in the outermost decade of retained modes.
    """
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    if n > MAX_DIM:
        raise CapabilityError(f"dimension {n} exceeds supported cap {MAX_DIM}")
    if np.linalg.norm(U.conj().T @ U - np.eye(n)) > 1e-10:
        raise DomainError("matrix is not unitary to 1e-10")
    if L < 1:
        raise DomainError("truncation order L must be >= 1")
    m = 8
    while m < 8 * (L + 1):
        m *= 2
    theta = 2.0 * np.pi * np.arange(m) / m
    vals = phi.eval_xy(np.cos(theta), np.sin(theta))
    # c_l = (1/2pi) int e^{-i l theta} phi(e^{i theta}) dtheta
    coeffs = np.fft.fft(vals) / m
    c = {}
    for ell in range(-L, L + 1):
        c[ell] = coeffs[ell % m]
    tail_band = [coeffs[ell % m] for ell in range(max(1, L - 4), L + 1)]
    tail_band += [coeffs[(-ell) % m] for ell in range(max(1, L - 4), L + 1)]
    tail = float(np.max(np.abs(tail_band)))

    Uinv = U.conj().T
    out = c[0] * np.eye(n, dtype=complex)
    Upow = np.eye(n, dtype=complex)
    Uneg = np.eye(n, dtype=complex)
    for ell in range(1, L + 1):
        Upow = Upow @ U
        Uneg = Uneg @ Uinv
        out += c[ell] * Upow + c[-ell] * Uneg
    if return_tail:
        return out, tail
    return out
