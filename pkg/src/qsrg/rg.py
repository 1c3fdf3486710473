"""Exact coarse-graining of translationally invariant MPS.

Two neighbouring sites ``(2j, 2j+1)`` with physical labels ``p, q`` are merged
into the row ``p*d + q`` of the ``d**2 x D**2`` matrix of products
``A[p] @ A[q]``. Its SVD ``W diag(s) Vh`` selects the representative: the
isometry is ``W^dagger`` and the coarse tensors are ``s[l] * Vh[l]`` reshaped
to ``D x D``. The transfer matrix of the coarse state is exactly the square
of the original one; nothing is truncated beyond numerical zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import DomainError, NonConvergentError, NumericalFailure
from .linalg import Spectrum, as_matrix, eig_general, svd
from .mps import MatrixProductState

__all__ = [
    "TransferMatrix",
    "RgStepResult",
    "FixedPointOperator",
    "transfer_matrix",
    "coarse_grain_step",
    "normalize_leading",
    "fixed_point_operator",
    "renormalize_observable",
    "pair_matrix",
]

DEFAULT_DROP_TOL = 1e-12
# eigenvalues this close to the spectral radius are averaged to estimate it;
# a Jordan block splits its eigenvalue by ~sqrt(eps), the mean is exact to ~eps
_LEADING_CLUSTER_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """The ``D**2 x D**2`` operator ``sum_p A[p] (x) conj(A[p])``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, "transfer matrix")
        n = m.shape[0]
        D = math.isqrt(n)
        if m.shape != (n, n) or D * D != n:
            raise DomainError(f"transfer matrix must be D^2 x D^2, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def D(self):
        return math.isqrt(self.dim)

    @cached_property
    def spectrum(self) -> Spectrum:
        return eig_general(self.matrix)

    @cached_property
    def leading_magnitude(self) -> float:
        w = self.spectrum.eigenvalues
        r = float(np.abs(w).max())
        if r == 0.0:
            return 0.0
        near = w[np.abs(w - r) <= _LEADING_CLUSTER_RTOL * r]
        if near.size == 0:
            return r
        return float(abs(np.mean(near)))

    def normalized(self) -> "TransferMatrix":
        lead = self.leading_magnitude
        if lead <= 0.0:
            raise NumericalFailure("transfer matrix has zero spectral radius")
        return TransferMatrix(self.matrix / lead)

    def squared(self) -> "TransferMatrix":
        return TransferMatrix(self.matrix @ self.matrix)

    def as_tensor(self):
        """View with indices ``[i, k, j, l]`` for row ``(i,k)`` and column ``(j,l)``."""
        D = self.D
        return self.matrix.reshape(D, D, D, D)


def transfer_matrix(mps: MatrixProductState) -> TransferMatrix:
    A = np.asarray(mps.tensors)
    D = mps.D
    e = np.einsum("pij,pkl->ikjl", A, A.conj()).reshape(D * D, D * D)
    return TransferMatrix(e)


@dataclass(frozen=True, eq=False)
class RgStepResult:
    coarse_state: MatrixProductState
    isometry: np.ndarray  # d' x d**2, orthonormal rows
    singular_values: np.ndarray
    discarded_weight: float
    fine_dim: int

    @property
    def d_eff(self):
        return self.coarse_state.d


def pair_matrix(mps: MatrixProductState) -> np.ndarray:
    """Rows ``p*d + q`` hold the flattened products ``A[p] @ A[q]``."""
    A = np.asarray(mps.tensors)
    d, D = mps.d, mps.D
    return np.einsum("pab,qbc->pqac", A, A).reshape(d * d, D * D)


def coarse_grain_step(mps: MatrixProductState, drop_tol_rel: float = DEFAULT_DROP_TOL) -> RgStepResult:
    """Merge site pairs and pick the SVD representative."""
    M = pair_matrix(mps)
    if not np.any(np.abs(M) > 0.0):
        raise DomainError("all pair products vanish; the MPS is degenerate")
    res = svd(M)
    s = res.singular_values
    keep = int(np.count_nonzero(s > drop_tol_rel * s[0]))
    total = float(np.sum(s**2))
    dropped = float(np.sum(s[keep:] ** 2))
    vh = res.vh[:keep]
    D = mps.D
    tensors = (s[:keep, None] * vh).reshape(keep, D, D)
    iso = res.left_vectors[:, :keep].conj().T
    kept = s[:keep].copy()
    kept.setflags(write=False)
    iso.setflags(write=False)
    return RgStepResult(
        coarse_state=MatrixProductState(tensors, mps.boundary),
        isometry=iso,
        singular_values=kept,
        discarded_weight=dropped / total if total > 0 else 0.0,
        fine_dim=mps.d,
    )


def normalize_leading(mps: MatrixProductState) -> MatrixProductState:
    """Scale tensors so the transfer matrix has spectral radius 1."""
    lead = transfer_matrix(mps).leading_magnitude
    if lead <= 0.0:
        raise NumericalFailure("leading eigenvalue of the transfer matrix is zero")
    return mps.scaled(1.0 / math.sqrt(lead))


@dataclass(frozen=True, eq=False)
class FixedPointOperator:
    """Limit of ``E**(2**k)``; ``period`` 2 means ``E @ limit`` is the partner."""

    limit: np.ndarray
    period: int
    partner: np.ndarray
    squarings: int
    residual: float


def fixed_point_operator(e: TransferMatrix, max_squarings: int = 64, tol: float = 1e-10) -> FixedPointOperator:
    """Repeatedly square ``e`` (leading magnitude 1) until it stops moving.

    Raises :class:`NonConvergentError` if squaring never settles, or if the
    limit is neither invariant under ``e`` (period 1) nor under ``e**2``
    (period 2).
    """
    E = np.asarray(e.matrix)
    w = e.spectrum.eigenvalues
    unit = w[np.abs(np.abs(w) - 1.0) <= _LEADING_CLUSTER_RTOL]
    # round-off would eventually shrink these; squaring never settles them exactly
    if np.any(np.abs(np.sin(np.angle(unit))) > _LEADING_CLUSTER_RTOL):
        raise NonConvergentError("unimodular eigenvalue with a phase other than 0 or pi")
    P = E.copy()
    residual = math.inf
    for k in range(1, max_squarings + 1):
        P2 = P @ P
        residual = float(np.linalg.norm(P2 - P))
        P = P2
        if not np.all(np.isfinite(P)):
            break
        if residual < tol * max(1.0, float(np.linalg.norm(P))):
            scale = max(1.0, float(np.linalg.norm(P)))
            if np.linalg.norm(E @ P - P) < tol * scale:
                return FixedPointOperator(P, 1, P, k, residual)
            EP = E @ P
            if np.linalg.norm(E @ EP - P) < tol * scale:
                return FixedPointOperator(P, 2, EP, k, residual)
            raise NonConvergentError("powers settle only with a period other than 1 or 2")
    raise NonConvergentError(
        f"repeated squaring did not converge in {max_squarings} steps (last residual {residual:.3g})"
    )


def renormalize_observable(op, step: RgStepResult, position: str = "left") -> np.ndarray:
    """``U (O (x) 1) U^dagger`` (or ``U (1 (x) O) U^dagger`` for ``position='right'``)."""
    o = as_matrix(op, "op")
    d = step.fine_dim
    if o.shape != (d, d):
        raise DomainError(f"operator must be {d}x{d}, got {o.shape}")
    if position == "left":
        big = np.kron(o, np.eye(d))
    elif position == "right":
        big = np.kron(np.eye(d), o)
    else:
        raise DomainError(f"position must be 'left' or 'right', got {position!r}")
    U = step.isometry
    return U @ big @ U.conj().T
