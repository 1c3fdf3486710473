"""Translationally invariant MPS, brute-force realization and diagnostics.

A state on ``m`` sites has amplitudes ``Tr(B A[p1] A[p2] ... A[pm])`` with
``B`` the boundary operator (identity for the periodic, translation
invariant closure). Realized vectors are normalized and stored site-major:
site 0 is the most significant digit of the flat index.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, SizeCapError
from .linalg import as_matrix

__all__ = [
    "MAX_AMPLITUDES",
    "MatrixProductState",
    "PureStateVector",
    "SchmidtData",
    "state_vector",
    "expectation_local",
    "connected_correlator",
    "schmidt_decompose",
    "block_entropy",
    "entropy_bits",
]

MAX_AMPLITUDES = 2**22
_ZERO_SCHMIDT_RTOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MatrixProductState:
    """Tensor family ``A[p]`` (shape ``(d, D, D)``) plus a ``D x D`` boundary."""

    tensors: np.ndarray
    boundary: np.ndarray | None = None

    def __post_init__(self):
        t = np.array(self.tensors, dtype=np.complex128)
        if t.ndim != 3 or t.shape[1] != t.shape[2] or t.shape[0] < 1:
            raise DomainError(f"tensors must have shape (d, D, D), got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise DomainError("tensors have non-finite entries")
        if not np.any(t):
            raise DomainError("all tensors are zero")
        D = t.shape[1]
        b = np.eye(D) if self.boundary is None else as_matrix(self.boundary, "boundary")
        if b.shape != (D, D):
            raise DomainError(f"boundary must be {D}x{D}, got {b.shape}")
        object.__setattr__(self, "tensors", _frozen(t))
        object.__setattr__(self, "boundary", _frozen(b))

    @property
    def d(self):
        return self.tensors.shape[0]

    @property
    def D(self):
        return self.tensors.shape[1]

    def with_boundary(self, boundary):
        return MatrixProductState(self.tensors, boundary)

    def scaled(self, factor):
        return MatrixProductState(self.tensors * factor, self.boundary)

    def physical_unitary(self, u):
        """Mix the physical index: ``A'[q] = sum_p u[q, p] A[p]``."""
        u = as_matrix(u, "u")
        return MatrixProductState(np.einsum("qp,pab->qab", u, self.tensors), self.boundary)

    def bond_gauge(self, x):
        """Similarity on the bond: ``A'[p] = X^-1 A[p] X`` (boundary transformed alike)."""
        x = as_matrix(x, "x")
        xi = np.linalg.inv(x)
        return MatrixProductState(
            np.einsum("ab,pbc,cd->pad", xi, self.tensors, x), xi @ self.boundary @ x
        )


@dataclass(frozen=True, eq=False)
class PureStateVector:
    m: int
    local_dim: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        a = _frozen(self.amplitudes).ravel()
        if a.size != self.local_dim**self.m:
            raise DomainError(f"expected {self.local_dim ** self.m} amplitudes, got {a.size}")
        if self.normalized and abs(np.vdot(a, a).real - 1.0) > 1e-12:
            raise DomainError("amplitudes flagged normalized but norm differs from 1")
        object.__setattr__(self, "amplitudes", a)

    def as_tensor(self):
        return self.amplitudes.reshape((self.local_dim,) * self.m)


@dataclass(frozen=True)
class SchmidtData:
    coefficients: np.ndarray
    entropy_bits: float

    @classmethod
    def from_coefficients(cls, coefficients):
        c = np.sort(np.abs(np.asarray(coefficients, dtype=float)))[::-1]
        c = c / math.sqrt(float(np.sum(c**2)))
        c.setflags(write=False)
        return cls(c, entropy_bits(c**2))


def entropy_bits(probabilities):
    """Shannon entropy in bits; weights below ``1e-12`` of the largest are dropped."""
    p = np.asarray(probabilities, dtype=float)
    p = p[p > _ZERO_SCHMIDT_RTOL * p.max()]
    p = p / p.sum()
    return float(max(0.0, -np.sum(p * np.log2(p))))


def state_vector(mps: MatrixProductState, m: int) -> PureStateVector:
    """Normalized amplitudes ``Tr(B A[p1] ... A[pm])`` on ``m`` sites."""
    if m < 1:
        raise DomainError("m must be at least 1")
    if mps.d**m > MAX_AMPLITUDES:
        raise SizeCapError(f"d**m = {mps.d}**{m} exceeds the cap of {MAX_AMPLITUDES}")
    A = np.asarray(mps.tensors)
    # prefix products, index (p1..pk) site-major
    prod = np.einsum("ab,pbc->pac", mps.boundary, A)
    for _ in range(m - 1):
        prod = np.einsum("sab,pbc->spac", prod, A).reshape(-1, mps.D, mps.D)
    amps = np.trace(prod, axis1=1, axis2=2)
    nrm = np.linalg.norm(amps)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise DomainError("MPS realizes the zero vector at this length and boundary")
    return PureStateVector(m, mps.d, amps / nrm, True)


def _check_op(state, op):
    o = as_matrix(op, "op")
    if o.shape != (state.local_dim, state.local_dim):
        raise DomainError(f"operator must be {state.local_dim}x{state.local_dim}, got {o.shape}")
    return o


def _check_site(state, site):
    if not 0 <= site < state.m:
        raise DomainError(f"site {site} outside 0..{state.m - 1}")


def _apply(psi, op, site):
    out = np.tensordot(op, psi, axes=([1], [site]))
    return np.moveaxis(out, 0, site)


def expectation_local(state: PureStateVector, op, site: int) -> complex:
    """``<psi| O_site |psi>``."""
    o = _check_op(state, op)
    _check_site(state, site)
    psi = state.as_tensor()
    return complex(np.vdot(psi, _apply(psi, o, site)))


def connected_correlator(state, op_a, site_i, op_b, site_j) -> complex:
    """``<O_i O_j> - <O_i><O_j>``."""
    a = _check_op(state, op_a)
    b = _check_op(state, op_b)
    _check_site(state, site_i)
    _check_site(state, site_j)
    if site_i == site_j:
        raise DomainError("connected_correlator needs two distinct sites")
    psi = state.as_tensor()
    both = complex(np.vdot(psi, _apply(_apply(psi, b, site_j), a, site_i)))
    return both - expectation_local(state, a, site_i) * expectation_local(state, b, site_j)


def schmidt_decompose(state: PureStateVector, cut: int) -> SchmidtData:
    """Schmidt coefficients across the cut between sites ``cut-1`` and ``cut``."""
    if not 0 < cut < state.m:
        raise DomainError(f"cut must lie in 1..{state.m - 1}, got {cut}")
    mat = state.amplitudes.reshape(state.local_dim**cut, -1)
    s = np.linalg.svd(mat, compute_uv=False)
    s = s[s > _ZERO_SCHMIDT_RTOL * s[0]]
    return SchmidtData.from_coefficients(s)


def block_entropy(state: PureStateVector, block_len: int) -> float:
    """Von Neumann entropy (bits) of sites ``0..block_len-1``."""
    if not 0 < block_len < state.m:
        raise DomainError(f"block_len must lie in 1..{state.m - 1}, got {block_len}")
    return schmidt_decompose(state, block_len).entropy_bits
