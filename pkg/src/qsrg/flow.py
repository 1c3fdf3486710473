"""Iterated coarse-graining with per-step diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .classify import canonical_transfer_matrix, jordan_gauge
from .errors import DomainError, QsrgError
from .mps import MatrixProductState, block_entropy, state_vector
from .rg import DEFAULT_DROP_TOL, coarse_grain_step, normalize_leading, transfer_matrix

__all__ = ["FlowRecord", "FlowTrace", "flow", "CSV_COLUMNS", "N_TOP"]

N_TOP = 4
CSV_COLUMNS = (
    "step",
    "d_eff",
    *(f"abs_lambda_{i + 1}" for i in range(N_TOP)),
    "entropy_bits",
    "residual",
    "xi",
)
# realized vectors used for the per-step entropy stay below this many amplitudes
_ENTROPY_CAP = 2**16
# a Jordan block splits a unimodular eigenvalue by ~sqrt(eps)
_SPLIT_TOL = 1e-6


@dataclass(frozen=True)
class FlowRecord:
    step: int
    d_eff: int
    top_eigenvalues: tuple  # normalized, descending magnitude, zero padded
    entropy_bits: float
    residual: float
    correlation_length: float
    discarded_weight: float = 0.0

    def csv_row(self):
        mags = [abs(z) for z in self.top_eigenvalues[:N_TOP]]
        return [self.step, self.d_eff, *mags, self.entropy_bits, self.residual, self.correlation_length]


@dataclass(frozen=True, eq=False)
class FlowTrace:
    records: tuple
    final_state: MatrixProductState
    converged: bool
    periodic: bool
    params: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.records[-1]

    def final_transfer(self):
        return transfer_matrix(self.final_state)


def _correlation_length(mags):
    if mags.size < 2 or mags[1] == 0.0:
        return 0.0
    ratio = mags[1] / mags[0]
    if ratio >= 1.0 - _SPLIT_TOL:
        return math.inf
    return -1.0 / math.log(ratio)


def _entropy(mps, sites):
    m = sites
    while m > 2 and mps.d**m > _ENTROPY_CAP:
        m -= 1
    try:
        return block_entropy(state_vector(mps, m), 1)
    except QsrgError:
        return math.nan


def _rotating(w):
    unit = w[np.abs(np.abs(w) - 1.0) <= _SPLIT_TOL]
    # phases 0 and pi settle under squaring; anything else never does here
    off = np.abs(np.sin(np.angle(unit))) > _SPLIT_TOL
    return bool(np.any(off))


def flow(
    mps: MatrixProductState,
    max_steps: int = 8,
    conv_tol: float = 1e-10,
    drop_tol_rel: float = DEFAULT_DROP_TOL,
    entropy_sites: int = 4,
) -> FlowTrace:
    """Run up to ``max_steps`` exact RG steps.

    Record 0 is the normalized input. The residual is the Frobenius distance
    between consecutive canonical transfer matrices; the flow stops once it
    drops below ``conv_tol`` or as soon as the spectrum has a unimodular
    eigenvalue other than +1 or -1 (flagged periodic).
    """
    if max_steps < 1:
        raise DomainError("max_steps must be at least 1")
    state = normalize_leading(mps)
    records = []
    prev = None
    converged = periodic = False
    discarded = 0.0
    for step in range(max_steps + 1):
        if step:
            res = coarse_grain_step(state, drop_tol_rel)
            state = normalize_leading(res.coarse_state)
            discarded = res.discarded_weight
        # defective classes lose conditioning step by step; re-gauge the bond
        X = jordan_gauge(transfer_matrix(state))
        if X is not None:
            state = state.bond_gauge(X)
        E = transfer_matrix(state)
        canon = canonical_transfer_matrix(E)
        w = E.spectrum.eigenvalues / E.leading_magnitude
        top = np.zeros(N_TOP, dtype=complex)
        top[: min(N_TOP, w.size)] = w[:N_TOP]
        residual = math.nan if prev is None else float(np.linalg.norm(canon - prev))
        prev = canon
        records.append(
            FlowRecord(
                step=step,
                d_eff=state.d,
                top_eigenvalues=tuple(complex(z) for z in top),
                entropy_bits=_entropy(state, entropy_sites),
                residual=residual,
                correlation_length=_correlation_length(np.abs(w)),
                discarded_weight=discarded,
            )
        )
        if _rotating(w):
            periodic = True
            break
        if step and residual < conv_tol:
            converged = True
            break
    params = {
        "max_steps": max_steps,
        "conv_tol": conv_tol,
        "drop_tol_rel": drop_tol_rel,
        "entropy_sites": entropy_sites,
    }
    return FlowTrace(tuple(records), state, converged, periodic, params)
