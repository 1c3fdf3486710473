"""Fixed-point analysis of transfer matrices.

Everything here works from the transfer matrix alone, so results do not
depend on the physical basis; bond-gauge freedom is removed explicitly.

Non-defective leading eigenvalue: the limit ``E_inf`` of repeated squaring
is a projector and its rank separates generic dimers (1), GHZ (2) and
product states with a redundant bond (``D**2``). For a rank-one limit the
dimer weights are the eigenvalues of ``R @ L``, with ``R`` and ``L`` the
right and left fixed points reshaped to ``D x D`` matrices.

Defective leading eigenvalue (``D = 2``): the top of the Jordan chain is a
product vector ``v (x) conj(v)`` and the corresponding left vector is
``r (x) conj(r)``. In the basis ``(u, v)`` with ``r.u = 1, r.v = 0`` every
tensor is lower triangular, ``A[p] = [[a_p, 0], [c_p, b_p]]``, and the Gram
data of the vectors ``a, b, c`` are entries of the transformed transfer
matrix. The remaining gauge moves are ``c -> c / s`` and the shear
``c -> c + t (b - a)``.

* W family: ``a`` parallel to ``b`` with ``<b, a> = exp(i theta)``; shear
  makes ``c`` orthogonal to ``a`` (required outright when ``theta = 0``).
* Domain-wall family: ``a`` orthogonal to ``b``. Only
  ``|<a,c> + <b,c>| / |c_perp|`` survives the gauge moves, so the reported
  representative uses ``beta = pi/4, theta = 0`` and carries all of it in
  ``alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import NonConvergentError, UnsupportedCaseError
from .linalg import null_space, numeric_rank, subspace_intersection
from .models import make_preset
from .mps import MatrixProductState, SchmidtData
from .rg import TransferMatrix, fixed_point_operator, transfer_matrix

__all__ = [
    "LABELS",
    "DominantPair",
    "FixedPointReport",
    "dominant_eigenvectors",
    "detect_jordan",
    "classify",
    "fixed_point_mps",
    "jordan_gauge",
    "canonical_transfer_matrix",
    "has_entangled_vector",
]

LABELS = ("Product", "GenericDimer", "GHZ", "WFamily", "DomainWallFamily", "PeriodicOrUnknown")

DEFAULT_TOL = 1e-8
DEFAULT_FIT_TOL = 1e-6
# a Jordan block of size k splits its eigenvalue by ~eps**(1/k) in floating point
_SPLIT_TOL = 1e-6
_GRID = 64


def _unit_tol(tol):
    return max(tol, _SPLIT_TOL)


def _as_matrix_vec(vec):
    D = math.isqrt(vec.size)
    return vec.reshape(D, D)


def _hermitian_psd(mat):
    """Remove the arbitrary phase of an eigenvector of a CP map and symmetrize."""
    tr = np.trace(mat)
    if abs(tr) > 1e-14:
        mat = mat * (abs(tr) / tr)
    else:
        mat = mat * np.exp(-1j * np.angle(mat.flat[np.argmax(np.abs(mat))]))
    return 0.5 * (mat + mat.conj().T)


def _range(m, tol):
    u, s, _ = np.linalg.svd(m)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    return u[:, : int(np.count_nonzero(s > tol * s[0]))]


def has_entangled_vector(basis, tol=DEFAULT_TOL):
    """Whether the span of the columns of ``basis`` holds a vector of Schmidt rank >= 2.

    Vectors of length ``D**2`` are read as ``D x D`` matrices. With two or
    more basis vectors, combinations ``cos(t) b0 + exp(i f) sin(t) b1`` are
    scanned on a 64 x 64 grid.
    """
    basis = np.asarray(basis)
    if basis.ndim == 1:
        basis = basis[:, None]
    if basis.shape[1] == 0:
        return False

    def entangled(vec):
        s = np.linalg.svd(_as_matrix_vec(vec), compute_uv=False)
        return s.size > 1 and s[1] > tol * max(s[0], 1e-300)

    if any(entangled(basis[:, i]) for i in range(basis.shape[1])):
        return True
    if basis.shape[1] == 1:
        return False
    b0, b1 = basis[:, 0], basis[:, 1]
    for t in np.linspace(0.0, 0.5 * math.pi, _GRID):
        for f in np.linspace(0.0, 2 * math.pi, _GRID, endpoint=False):
            if entangled(math.cos(t) * b0 + np.exp(1j * f) * math.sin(t) * b1):
                return True
    return False


def detect_jordan(e: TransferMatrix, eigenvalue: complex, tol: float = DEFAULT_TOL):
    """``(algebraic, geometric)`` multiplicity of ``eigenvalue`` in ``e``."""
    E = np.asarray(e.matrix)
    n = E.shape[0]
    w = e.spectrum.eigenvalues
    scale = max(float(np.abs(w).max()), 1e-300)
    close = w[np.abs(w - eigenvalue) <= _unit_tol(tol) * scale]
    algebraic = int(close.size)
    if algebraic == 0:
        return 0, 0
    center = complex(np.mean(close))
    s = np.linalg.svd(E - center * np.eye(n), compute_uv=False)
    norm = max(float(np.linalg.norm(E, 2)), 1e-300)
    geometric = n - int(np.count_nonzero(s > tol * norm))
    return algebraic, max(1, min(geometric, algebraic))


@dataclass(frozen=True, eq=False)
class DominantPair:
    phi_right: np.ndarray
    phi_left: np.ndarray
    schmidt_rank_right: int
    schmidt_rank_left: int
    degeneracy: int
    algebraic: int = 1
    geometric: int = 1
    lambdas: np.ndarray | None = None  # dimer weights, descending, sum 1

    @property
    def D(self):
        return math.isqrt(self.phi_right.size)

    @property
    def defective(self):
        return self.geometric < self.algebraic


def _dimer_weights(R, L, tol):
    ev = np.linalg.eigvals(R @ L)
    ev = np.real_if_close(ev, tol=1e6)
    ev = np.sort(np.real(ev))[::-1]
    total = ev.sum()
    if total <= 0:
        return None
    ev = ev / total
    ev[np.abs(ev) < tol] = 0.0
    return ev


def dominant_eigenvectors(e: TransferMatrix, tol: float = DEFAULT_TOL) -> DominantPair:
    """Right/left fixed points of ``e`` (normalized to spectral radius 1).

    In the nondegenerate, full-rank case the pair is returned in the gauge
    ``phi_right = sum_i |ii>`` and ``phi_left = sum_i lambda_i |ii>``.
    """
    E = e.normalized()
    M = np.asarray(E.matrix)
    n = M.shape[0]
    D = E.D
    w = E.spectrum.eigenvalues
    degeneracy = int(np.count_nonzero(np.abs(np.abs(w) - 1.0) <= _unit_tol(tol)))
    alg, geo = detect_jordan(E, 1.0, tol)
    right = null_space(M - np.eye(n), tol)
    left = null_space(M.conj().T - np.eye(n), tol)
    if right.shape[1] == 0 or left.shape[1] == 0:
        right = right if right.shape[1] else _range(M - np.eye(n), tol)[:, -1:]
        left = left if left.shape[1] else _range(M.conj().T - np.eye(n), tol)[:, -1:]
    R = _hermitian_psd(_as_matrix_vec(right[:, 0]))
    L = _hermitian_psd(_as_matrix_vec(left[:, 0]))
    rr = numeric_rank(R, tol)
    rl = numeric_rank(L, tol)
    lambdas = None
    if degeneracy == 1 and alg == 1:
        lambdas = _dimer_weights(R, L, tol)
        if rr == D and rl == D:
            # gauge R -> 1, then rotate so that L is diagonal
            ev, U = np.linalg.eigh(R)
            Y = U @ np.diag(np.sqrt(np.clip(ev, 0, None))) @ U.conj().T
            Lp = Y.conj().T @ L @ Y
            lam, V = np.linalg.eigh(0.5 * (Lp + Lp.conj().T))
            lam = lam[::-1] / lam.sum()
            lambdas = lam
            R = np.eye(D, dtype=complex)
            L = np.diag(lam).astype(complex)
    if lambdas is not None:
        lambdas.setflags(write=False)
    return DominantPair(
        phi_right=R.reshape(-1),
        phi_left=L.reshape(-1),
        schmidt_rank_right=rr,
        schmidt_rank_left=rl,
        degeneracy=degeneracy,
        algebraic=alg,
        geometric=geo,
        lambdas=lambdas,
    )


def fixed_point_mps(pair: DominantPair) -> MatrixProductState:
    """Dimer representative ``A[(p,q)] = sqrt(lambda_q) |p><q|``, physical index ``p*D + q``."""
    if pair.lambdas is None or pair.defective or pair.degeneracy != 1:
        raise UnsupportedCaseError("fixed_point_mps needs a nondegenerate, non-defective fixed point")
    lam = np.asarray(pair.lambdas, dtype=float)
    D = pair.D
    if lam.size != D or np.any(lam <= 0):
        raise UnsupportedCaseError("fixed_point_mps needs full Schmidt rank")
    t = np.zeros((D * D, D, D), dtype=complex)
    for p in range(D):
        for q in range(D):
            t[p * D + q, p, q] = math.sqrt(lam[q])
    return MatrixProductState(t)


@dataclass(frozen=True, eq=False)
class FixedPointReport:
    label: str
    e_infinity_rank: int
    jordan: tuple  # (algebraic, geometric) multiplicity of eigenvalue 1
    schmidt: SchmidtData | None = None
    lambdas: tuple | None = None
    theta: float | None = None
    alpha: float | None = None
    beta: float | None = None
    advisory: str | None = None
    evidence: dict = field(default_factory=dict)
    canonical: np.ndarray | None = None  # canonical transfer-matrix representative

    @property
    def defective(self):
        return self.jordan[1] < self.jordan[0]

    def to_dict(self):
        out = {
            "label": self.label,
            "e_infinity_rank": self.e_infinity_rank,
            "jordan": {"algebraic": self.jordan[0], "geometric": self.jordan[1], "defective": self.defective},
            "schmidt": None,
            "lambdas": None if self.lambdas is None else [float(x) for x in self.lambdas],
            "theta": self.theta,
            "alpha": self.alpha,
            "beta": self.beta,
            "advisory": self.advisory,
            "evidence": self.evidence,
        }
        if self.schmidt is not None:
            out["schmidt"] = {
                "coefficients": [float(c) for c in self.schmidt.coefficients],
                "entropy_bits": self.schmidt.entropy_bits,
            }
        return out


def _limit_rank(E, tol):
    """Rank of the direction of ``E**(2**k)`` for large ``k`` (normalized powers)."""
    P = E / max(np.linalg.norm(E), 1e-300)
    for _ in range(48):
        Q = P @ P
        nrm = np.linalg.norm(Q)
        if nrm == 0.0:
            return 0
        Q = Q / nrm
        if np.linalg.norm(Q - P) < 1e-13:
            P = Q
            break
        P = Q
    return numeric_rank(P, max(tol, 1e-10))


def _triangular_fit(M, tol, fit_tol):
    """Gauge-fix a defective ``D = 2`` transfer matrix to lower-triangular tensors."""
    n = M.shape[0]
    K = M - np.eye(n)

    def top_of_chain(op):
        z = subspace_intersection(null_space(op, tol), _range(op, tol), 1e-10)
        if z.shape[1] != 1:
            return None
        Z = _hermitian_psd(_as_matrix_vec(z[:, 0]))
        ev, U = np.linalg.eigh(Z)
        if ev[-1] <= 0 or abs(ev[0]) > fit_tol * ev[-1]:
            return None
        return U[:, -1]

    v = top_of_chain(K)
    wl = top_of_chain(K.conj().T)
    if v is None or wl is None:
        return None
    r = wl.conj()  # row vector with r A[p] = mu_p r
    overlap = abs(r @ v)
    u = r.conj() / np.vdot(r, r).real
    X = np.column_stack([u, v])
    Xi = np.linalg.inv(X)
    Ep = np.kron(Xi, Xi.conj()) @ M @ np.kron(X, X.conj())
    upper = abs(Ep[0, 3])
    n_a, n_b = Ep[0, 0].real, Ep[3, 3].real
    g_ba = Ep[1, 1]  # sum_p a_p conj(b_p)
    n_c = Ep[3, 0].real
    x = Ep[2, 0]  # <a, c>
    y = Ep[3, 1]  # <b, c>
    gram = np.array(
        [[n_a, np.conj(g_ba), x], [g_ba, n_b, y], [np.conj(x), np.conj(y), n_c]],
        dtype=complex,
    )
    support = numeric_rank(gram, 1e-8)
    base = abs(n_a - 1.0) + abs(n_b - 1.0) + upper + overlap
    evidence = {"effective_support": support, "gram_overlap_ab": abs(g_ba)}
    parallel = abs(g_ba) ** 2 / max(n_a * n_b, 1e-300)
    if abs(1.0 - parallel) < 10 * fit_tol:
        theta = float(np.angle(g_ba))
        resid = base + abs(1.0 - parallel)
        if abs(g_ba - n_a) <= 1e-9:
            resid += abs(x) / math.sqrt(max(n_c, 1e-300))
        evidence["fit_residual"] = resid
        return "WFamily", {"theta": theta}, resid, evidence, X
    if abs(g_ba) < 10 * fit_tol:
        sigma = x + y
        rho2 = max(n_c - abs(x) ** 2 - abs(y) ** 2, 0.0)
        norm2 = rho2 + 0.5 * abs(sigma) ** 2
        if norm2 <= 0:
            return None
        cos_alpha = min(1.0, abs(sigma) / math.sqrt(2.0 * norm2))
        resid = base + abs(g_ba)
        evidence["fit_residual"] = resid
        evidence["wall_ratio"] = abs(sigma) / math.sqrt(rho2) if rho2 > 0 else math.inf
        params = {"alpha": math.acos(cos_alpha), "beta": 0.25 * math.pi, "theta": 0.0}
        return "DomainWallFamily", params, resid, evidence, X
    return None


def _unit_phases(w, tol):
    unit = w[np.abs(np.abs(w) - 1.0) <= _unit_tol(tol)]
    return unit, unit[np.abs(unit - 1.0) > _unit_tol(tol)]


def classify(e: TransferMatrix, tol: float = DEFAULT_TOL, fit_tol: float = DEFAULT_FIT_TOL) -> FixedPointReport:
    """Assign ``e`` to a fixed-point class.

    For ``D > 2`` only Product, GenericDimer and PeriodicOrUnknown are
    assigned; the finer decomposition into ergodic and periodic parts is
    not attempted.
    """
    E = e.normalized()
    M = np.asarray(E.matrix)
    n = M.shape[0]
    D = E.D
    w = E.spectrum.eigenvalues
    jordan = detect_jordan(E, 1.0, tol)
    unit, rotating = _unit_phases(w, tol)
    einf_rank = _limit_rank(M, tol)
    eigenspace = null_space(M - np.eye(n), tol)
    evidence = {
        "unit_eigenvalues": [[float(z.real), float(z.imag)] for z in unit],
        "case": "a" if has_entangled_vector(eigenspace, tol) else "b",
    }

    def report(label, **kw):
        return FixedPointReport(label, einf_rank, jordan, evidence=evidence, **kw)

    if jordan[1] < jordan[0]:
        if D != 2:
            evidence["reason"] = "defective leading eigenvalue with D > 2 is outside the classified range"
            return report("PeriodicOrUnknown")
        fit = _triangular_fit(M, tol, fit_tol)
        if fit is None:
            evidence["reason"] = "no common triangular gauge"
            return report("PeriodicOrUnknown")
        label, params, resid, extra, _ = fit
        evidence.update(extra)
        if resid > fit_tol:
            evidence["reason"] = f"{label} pattern fit residual {resid:.3g} above {fit_tol:g}"
            return report("PeriodicOrUnknown")
        if label == "WFamily":
            canon = transfer_matrix(make_preset("w", (params["theta"],))).matrix
            return report(label, theta=params["theta"], advisory="Product", canonical=canon)
        canon = transfer_matrix(make_preset("domain_wall", (params["alpha"], params["beta"], params["theta"]))).matrix
        return report(label, advisory="GHZ", canonical=canon, **params)

    if rotating.size:
        period2 = bool(np.all(np.abs(rotating + 1.0) <= _unit_tol(tol)))
        evidence["reason"] = "eigenvalue -1 (period 2)" if period2 else "unimodular eigenvalue with nontrivial phase"
        evidence["period"] = 2 if period2 else None
        return report("PeriodicOrUnknown")

    try:
        fpo = fixed_point_operator(E, tol=max(tol, 1e-12))
    except NonConvergentError as exc:
        evidence["reason"] = str(exc)
        return report("PeriodicOrUnknown")
    einf_rank = numeric_rank(fpo.limit, tol)
    evidence["squarings"] = fpo.squarings

    if D == 1:
        return report("Product", canonical=M)
    if einf_rank == 1:
        pair = dominant_eigenvectors(E, tol)
        lam = None if pair.lambdas is None else np.asarray(pair.lambdas)
        if lam is not None:
            evidence["schmidt_rank_right"] = pair.schmidt_rank_right
            evidence["schmidt_rank_left"] = pair.schmidt_rank_left
        if lam is None or np.count_nonzero(lam > tol) < 2:
            return report("Product", canonical=M)
        nz = lam[lam > tol]
        return report(
            "GenericDimer",
            schmidt=SchmidtData.from_coefficients(np.sqrt(nz)),
            lambdas=tuple(float(x) for x in nz),
            canonical=fpo.limit,
        )
    if einf_rank == n:
        return report("Product", canonical=M)
    if einf_rank == 2 and D == 2:
        return report("GHZ", canonical=fpo.limit)
    evidence["reason"] = f"limit rank {einf_rank} has no label for D = {D}"
    return report("PeriodicOrUnknown")


def jordan_gauge(e: TransferMatrix, tol: float = DEFAULT_TOL):
    """Bond similarity ``X`` making a defective ``D = 2`` fixed point lower triangular.

    ``state.bond_gauge(X)`` keeps the state and keeps the tensors well
    conditioned. Returns ``None`` when ``e`` is not such a case.
    """
    E = e.normalized()
    if E.D != 2:
        return None
    alg, geo = detect_jordan(E, 1.0, tol)
    if geo >= alg:
        return None
    fit = _triangular_fit(np.asarray(E.matrix), tol, DEFAULT_FIT_TOL)
    if fit is None or fit[2] > DEFAULT_FIT_TOL:
        return None
    return fit[4]


def canonical_transfer_matrix(e: TransferMatrix, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Transfer matrix with scale and, for defective ``D = 2`` cases, bond gauge fixed."""
    E = e.normalized()
    M = np.asarray(E.matrix)
    if E.D == 2:
        alg, geo = detect_jordan(E, 1.0, tol)
        if geo < alg:
            fit = _triangular_fit(M, tol, DEFAULT_FIT_TOL)
            if fit is not None and fit[2] <= DEFAULT_FIT_TOL:
                label, p = fit[0], fit[1]
                if label == "WFamily":
                    return transfer_matrix(make_preset("w", (p["theta"],))).matrix
                return transfer_matrix(make_preset("domain_wall", (p["alpha"], p["beta"], p["theta"]))).matrix
    return M
