"""Dense complex linear algebra and special functions.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; :func:`as_matrix`
is the single validation point. Decompositions are delegated to LAPACK
(``geev`` is Hessenberg reduction followed by shifted QR, ``gesdd`` for the
SVD) and post-processed here so that results are deterministic: eigenvalues
come out in a fixed order and singular vectors carry a fixed phase, with
degenerate singular subspaces given a basis-independent canonical basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DomainError, NumericalFailure

__all__ = [
    "as_matrix",
    "kron",
    "SvdResult",
    "svd",
    "EigenGroup",
    "Spectrum",
    "eig_general",
    "numeric_rank",
    "null_space",
    "subspace_intersection",
    "agm",
    "elliptic_k",
    "elliptic_k_complement",
]

# singular values closer than this (relative to the largest) share a subspace
_SV_CLUSTER_RTOL = 1e-10
_PHASE_ATOL = 1e-12


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D complex array (a fresh copy)."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise DomainError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


def kron(a, b):
    """Kronecker product; entry ``((i,k),(j,l))`` equals ``a[i,j] * b[k,l]``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


@dataclass(frozen=True)
class SvdResult:
    """``m = left_vectors @ diag(singular_values) @ right_vectors.conj().T``."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def vh(self):
        return self.right_vectors.conj().T

    def reconstruct(self):
        k = self.singular_values.size
        return (self.left_vectors[:, :k] * self.singular_values) @ self.vh[:k]


def _fix_phase(row):
    """Phase that makes the first non-negligible entry of ``row`` real positive."""
    mags = np.abs(row)
    cut = _PHASE_ATOL * max(mags.max(), 1.0)
    idx = np.flatnonzero(mags > cut)
    if idx.size == 0:
        return 1.0
    z = row[idx[0]]
    return np.conj(z) / abs(z)


def _canonical_rows(rows):
    """Orthonormal basis of the row space of ``rows`` that depends only on the space.

    Standard basis vectors are projected onto the space in index order and
    Gram-Schmidt orthonormalized, keeping the first ``k`` independent ones.
    """
    k, n = rows.shape
    proj = rows.T @ rows.conj()  # projector acting on column vectors
    basis = []
    for j in range(n):
        vec = proj[:, j].copy()
        for b in basis:
            vec -= b * np.vdot(b, vec)
        nrm = np.linalg.norm(vec)
        if nrm > 1e-8:
            basis.append(vec / nrm)
        if len(basis) == k:
            break
    if len(basis) < k:
        return rows
    return np.array(basis)


def svd(m):
    """Full SVD with descending singular values and a deterministic gauge.

    Within each cluster of equal singular values the right vectors are
    replaced by the canonical basis of their span; every right vector then
    has its first non-negligible component made real positive, and the left
    vectors are rotated to match.
    """
    a = as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    r = s.size
    u = u.copy()
    vh = vh.copy()
    smax = s[0] if r else 0.0
    start = 0
    while start < r:
        stop = start + 1
        while stop < r and abs(s[stop] - s[start]) <= _SV_CLUSTER_RTOL * max(smax, 1e-300):
            stop += 1
        if stop - start > 1 and s[start] > _SV_CLUSTER_RTOL * smax:
            old = vh[start:stop]
            new = _canonical_rows(old)
            rot = old.conj() @ new.T  # old_i . new_j
            u[:, start:stop] = u[:, start:stop] @ rot
            vh[start:stop] = new
        start = stop
    for i in range(r):
        ph = _fix_phase(vh[i])
        vh[i] *= ph
        u[:, i] *= np.conj(ph)
    return SvdResult(left_vectors=u, singular_values=s, right_vectors=vh.conj().T)


def numeric_rank(m, tol_rel=1e-10):
    """Number of singular values above ``tol_rel`` times the largest one."""
    s = np.linalg.svd(as_matrix(m), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol_rel * s[0]))


def _rank_abs(m, atol):
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.count_nonzero(s > atol))


def null_space(m, tol_rel=1e-8):
    """Orthonormal columns spanning the numerical kernel of ``m``."""
    a = as_matrix(m)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.count_nonzero(s > tol_rel * scale))
    return vh[rank:].conj().T


def subspace_intersection(a, b, tol=1e-8):
    """Orthonormal basis of ``span(a) ∩ span(b)`` for column-orthonormal ``a``, ``b``."""
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    # principal angles: singular values of a^H b equal to 1 mark shared directions
    u, s, _ = np.linalg.svd(a.conj().T @ b)
    keep = np.flatnonzero(s > 1.0 - tol)
    vecs = a @ u[:, keep]
    if vecs.shape[1] == 0:
        return vecs
    q, _ = np.linalg.qr(vecs)
    return q


@dataclass(frozen=True)
class EigenGroup:
    value: complex
    algebraic: int
    geometric: int
    indices: tuple


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (descending magnitude) with right vectors and tolerance groups."""

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    groups: tuple = field(default_factory=tuple)

    @property
    def leading_magnitude(self):
        return float(np.abs(self.eigenvalues[0]))

    def group_of(self, value, tol):
        for g in self.groups:
            if abs(g.value - value) <= tol:
                return g
        return None


def _order(w):
    mags = np.round(np.abs(w), 12)
    ang = np.round(np.angle(w), 12)
    return np.lexsort((ang, -mags))


def eig_general(m, tol=1e-8):
    """Spectrum of a general square matrix.

    Eigenvalues closer than ``tol`` (absolute, after scaling by the leading
    magnitude) are grouped; each group records its algebraic multiplicity
    and its geometric multiplicity ``dim - rank(M - value*I)`` at threshold
    ``1e-8 * ||M||``.
    """
    a = as_matrix(m)
    n, k = a.shape
    if n != k:
        raise DomainError(f"eig_general needs a square matrix, got {a.shape}")
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver did not converge: {exc}") from exc
    order = _order(w)
    w = w[order]
    v = v[:, order]
    scale = max(float(np.abs(w).max()), 1e-300)
    atol = tol * scale
    norm = float(np.linalg.norm(a, 2))
    groups = []
    members = []
    for i, lam in enumerate(w):
        for gi, grp in enumerate(members):
            center = np.mean(w[list(grp)])
            if abs(lam - center) <= atol:
                grp.append(i)
                break
        else:
            members.append([i])
    for grp in members:
        center = complex(np.mean(w[grp]))
        geo = n - _rank_abs(a - center * np.eye(n), 1e-8 * max(norm, 1e-300))
        geo = max(1, min(geo, len(grp)))
        groups.append(EigenGroup(center, len(grp), geo, tuple(grp)))
    return Spectrum(eigenvalues=w, right_vectors=v, groups=tuple(groups))


def agm(a, b, tol=1e-15):
    """Arithmetic-geometric mean of two non-negative reals."""
    a, b = float(a), float(b)
    for _ in range(200):
        if abs(a - b) < tol * max(abs(a), 1.0):
            return 0.5 * (a + b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    raise NumericalFailure("AGM iteration did not converge")


def elliptic_k(modulus):
    """Complete elliptic integral of the first kind, ``K(k)``, in the modulus convention."""
    k = float(modulus)
    if not (0.0 <= k < 1.0) or math.isnan(k):
        raise DomainError(f"elliptic_k needs 0 <= k < 1, got {modulus!r}")
    return math.pi / (2.0 * agm(1.0, math.sqrt((1.0 - k) * (1.0 + k))))


def elliptic_k_complement(kprime):
    """``K(sqrt(1 - kprime**2))`` evaluated without forming the modulus.

    Stays accurate when the modulus rounds to 1 in floating point.
    """
    kp = float(kprime)
    if not (0.0 < kp <= 1.0):
        raise DomainError(f"complementary modulus must lie in (0, 1], got {kprime!r}")
    return math.pi / (2.0 * agm(1.0, kp))
