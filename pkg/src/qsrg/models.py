"""Preset states, dimer Schmidt spectra of gapped chains, and an ED oracle."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import DomainError, NumericalFailure, SizeCapError
from .linalg import elliptic_k, elliptic_k_complement
from .mps import MatrixProductState, PureStateVector, SchmidtData, schmidt_decompose

__all__ = [
    "PAULI",
    "PRESET_PARAMS",
    "make_preset",
    "random_mps",
    "SchmidtSpectrum",
    "ising_epsilon",
    "xxz_epsilon",
    "ising_dimer_spectrum",
    "xxz_dimer_spectrum",
    "ising_ground_state_ed",
    "half_chain_spectrum",
]

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

PRESET_PARAMS = {
    "product": (),
    "ghz": (),
    "cluster": (),
    "aklt": (),
    "w": ("theta",),
    "domain_wall": ("alpha", "beta", "theta"),
}

ED_MAX_SITES = 16
DEFAULT_J_MAX = 20


def make_preset(name: str, params=(), raw: bool = False) -> MatrixProductState:
    """Canonical tensors of the named state.

    ``cluster`` carries a factor ``1/sqrt(2)`` and ``aklt`` a factor
    ``1/sqrt(3)`` so that both have spectral radius 1; ``raw=True`` drops
    these factors and returns the bare tensors.
    """
    if name not in PRESET_PARAMS:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESET_PARAMS)}")
    params = tuple(float(p) for p in params)
    if len(params) != len(PRESET_PARAMS[name]):
        want = ", ".join(PRESET_PARAMS[name]) or "none"
        raise DomainError(f"preset {name!r} takes parameters ({want}), got {len(params)}")

    if name == "product":
        t = [[[1.0]], [[0.0]]]
    elif name == "ghz":
        t = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    elif name == "cluster":
        t = [np.array([[1, 1], [0, 0]]), np.array([[0, 0], [1, -1]])]
        if not raw:
            t = [a / math.sqrt(2.0) for a in t]
    elif name == "aklt":
        t = [PAULI["x"], PAULI["y"], PAULI["z"]]
        if not raw:
            t = [a / math.sqrt(3.0) for a in t]
    elif name == "w":
        (theta,) = params
        t = [np.diag([1.0, np.exp(-1j * theta)]), np.array([[0, 0], [1, 0]])]
    else:
        alpha, beta, theta = params
        ca, sa = math.cos(alpha), math.sin(alpha)
        t = [
            np.array([[0, 0], [ca * math.sin(beta), np.exp(1j * theta)]]),
            np.array([[0, 0], [sa, 0]]),
            np.array([[np.exp(-1j * theta), 0], [ca * math.cos(beta), 0]]),
        ]
    return MatrixProductState(np.array(t, dtype=complex))


def random_mps(d: int, D: int, rng: np.random.Generator) -> MatrixProductState:
    """Gaussian complex tensors, unnormalized."""
    t = rng.normal(size=(d, D, D)) + 1j * rng.normal(size=(d, D, D))
    return MatrixProductState(t)


@dataclass(frozen=True, eq=False)
class SchmidtSpectrum:
    """Normalized entanglement weights over occupation patterns ``n_j``, ``j=0..j_max``."""

    epsilon: float
    branch: str  # "disordered" or "ordered"
    j_max: int
    weights: np.ndarray
    levels: np.ndarray  # cost of each weight in units of epsilon
    entropy_bits: float

    def schmidt(self, top: int | None = None) -> SchmidtData:
        w = self.weights if top is None else self.weights[:top]
        return SchmidtData.from_coefficients(np.sqrt(w))


def _mode_costs(branch, j_max):
    j = np.arange(j_max + 1)
    return 2 * j + 1 if branch == "disordered" else 2 * j


def _spectrum(epsilon, branch, j_max):
    if j_max < 1:
        raise DomainError("j_max must be at least 1")
    if j_max > 24:
        raise SizeCapError("j_max above 24 would enumerate more than 2**25 patterns")
    levels = np.zeros(1, dtype=np.int64)
    for c in _mode_costs(branch, j_max):
        levels = np.concatenate([levels, levels + c])
    levels = np.sort(levels, kind="stable")
    w = np.exp(-epsilon * (levels - levels[0]))
    w /= w.sum()
    # entropy from the factorized free-fermion form, exact for the truncated set
    q = 1.0 / (1.0 + np.exp(epsilon * _mode_costs(branch, j_max).astype(float)))
    q = q[q > 0]
    h = -(q * np.log2(q) + (1 - q) * np.log2(np.where(q < 1, 1 - q, 1.0)))
    w.setflags(write=False)
    levels.setflags(write=False)
    return SchmidtSpectrum(float(epsilon), branch, j_max, w, levels, float(np.sum(h)))


def ising_epsilon(field: float) -> float:
    """Level spacing ``pi K(sqrt(1 - mu^2)) / K(mu)`` with ``mu = min(field, 1/field)``."""
    lam = float(field)
    if not lam > 0 or not math.isfinite(lam):
        raise DomainError(f"field must be positive and finite, got {field!r}")
    if lam == 1.0:
        raise DomainError("field = 1 is the critical point; the spectrum is gapless")
    mu = min(lam, 1.0 / lam)
    return math.pi * elliptic_k_complement(mu) / elliptic_k(mu)


def xxz_epsilon(delta: float) -> float:
    dl = float(delta)
    if not dl > 1.0 or not math.isfinite(dl):
        raise DomainError(f"XXZ anisotropy must exceed 1 (gapped Neel phase), got {delta!r}")
    return math.acosh(dl)


def ising_dimer_spectrum(field: float, j_max: int = DEFAULT_J_MAX) -> SchmidtSpectrum:
    """Half-chain entanglement weights of the transverse-field Ising chain.

    ``field < 1`` is the disordered branch (mode ``j`` costs ``(2j+1) eps``),
    ``field > 1`` the ordered one (cost ``2j eps``, so the ``j=0`` mode is free
    and every weight is doubly degenerate).
    """
    eps = ising_epsilon(field)
    branch = "disordered" if field < 1.0 else "ordered"
    return _spectrum(eps, branch, j_max)


def xxz_dimer_spectrum(delta: float, j_max: int = DEFAULT_J_MAX) -> SchmidtSpectrum:
    """Ordered-branch spectrum with spacing ``arccosh(delta)``."""
    return _spectrum(xxz_epsilon(delta), "ordered", j_max)


def _tfi_even_sector(field, n):
    """Sparse ``H = -field sum X_i X_{i+1} - sum Z_i`` on the even-parity states."""
    dim = 1 << n
    states = np.arange(dim, dtype=np.int64)
    ones = _popcount(states)
    even = states[ones % 2 == 0]
    pos = np.full(dim, -1, dtype=np.int64)
    pos[even] = np.arange(even.size)
    # site i sits at bit n-1-i; bit 0 means Z = +1
    diag = -(n - 2 * ones[even]).astype(float)
    rows = [np.arange(even.size)]
    cols = [np.arange(even.size)]
    vals = [diag]
    for i in range(n - 1):
        mask = (1 << (n - 1 - i)) | (1 << (n - 2 - i))
        rows.append(np.arange(even.size))
        cols.append(pos[even ^ mask])
        vals.append(np.full(even.size, -float(field)))
    H = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(even.size, even.size)
    )
    return H, even


def _popcount(x):
    c = np.zeros_like(x)
    y = x.copy()
    while np.any(y):
        c += y & 1
        y >>= 1
    return c


def ising_ground_state_ed(field: float, n_sites: int, tol: float = 1e-10) -> PureStateVector:
    """Ground state of the open transverse-field chain by Lanczos.

    The Hamiltonian conserves ``prod Z``; the ground state lies in the even
    sector, so Lanczos runs there from the even part of the all-equal vector.
    This keeps the search away from the near-degenerate odd partner of the
    ordered phase.
    """
    n = int(n_sites)
    if n < 2:
        raise DomainError("need at least 2 sites")
    if n > ED_MAX_SITES:
        raise SizeCapError(f"n_sites = {n} exceeds the ED cap of {ED_MAX_SITES}")
    H, even = _tfi_even_sector(float(field), n)
    v0 = np.ones(even.size) / math.sqrt(even.size)
    if even.size <= 64:
        w, v = np.linalg.eigh(H.toarray())
        e0, vec = w[0], v[:, 0]
    else:
        try:
            w, v = eigsh(H, k=1, which="SA", v0=v0, tol=0.0, maxiter=20000)
        except Exception as exc:  # ArpackNoConvergence and friends
            raise NumericalFailure(f"Lanczos did not converge: {exc}") from exc
        e0, vec = w[0], v[:, 0]
    res = float(np.linalg.norm(H @ vec - e0 * vec))
    if res >= tol:
        raise NumericalFailure(f"ground-state residual {res:.3g} above {tol:g}")
    vec = vec * np.sign(vec[np.argmax(np.abs(vec))])
    full = np.zeros(1 << n, dtype=complex)
    full[even] = vec / np.linalg.norm(vec)
    return PureStateVector(n, 2, full, True)


def half_chain_spectrum(state: PureStateVector) -> SchmidtData:
    if state.m % 2:
        raise DomainError("half-chain cut needs an even number of sites")
    return schmidt_decompose(state, state.m // 2)
