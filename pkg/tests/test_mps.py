import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_unitary
from qsrg.errors import DomainError, SizeCapError
from qsrg.models import PAULI, make_preset, random_mps
from qsrg.mps import (
    MatrixProductState,
    PureStateVector,
    SchmidtData,
    block_entropy,
    connected_correlator,
    expectation_local,
    schmidt_decompose,
    state_vector,
)

SZ = PAULI["z"]
SX = PAULI["x"]


def _basis_index(bits):
    return int("".join(map(str, bits)), 2)


class TestConstruction:
    def test_defaults(self):
        mps = make_preset("ghz")
        assert (mps.d, mps.D) == (2, 2)
        np.testing.assert_array_equal(mps.boundary, np.eye(2))

    def test_frozen(self):
        mps = make_preset("ghz")
        with pytest.raises(ValueError):
            mps.tensors[0, 0, 0] = 5

    @pytest.mark.parametrize(
        "tensors, boundary",
        [
            (np.zeros((2, 2, 2)), None),
            (np.ones((2, 2, 3)), None),
            (np.ones((2, 2, 2)), np.eye(3)),
            (np.full((1, 1, 1), np.nan), None),
        ],
    )
    def test_invalid(self, tensors, boundary):
        with pytest.raises(DomainError):
            MatrixProductState(tensors, boundary)

    def test_pure_state_normalization_flag(self):
        with pytest.raises(DomainError):
            PureStateVector(1, 2, np.array([1.0, 1.0]), True)


class TestStateVector:
    def test_ghz(self):
        st_ = state_vector(make_preset("ghz"), 3)
        expect = np.zeros(8)
        expect[0] = expect[7] = 1 / math.sqrt(2)
        np.testing.assert_allclose(st_.amplitudes, expect, atol=1e-15)

    def test_product(self):
        st_ = state_vector(make_preset("product"), 4)
        assert st_.amplitudes[0] == 1
        assert np.count_nonzero(st_.amplitudes) == 1

    def test_w_with_boundary(self):
        b = np.array([[0, 1], [0, 0]])  # |0><1|
        st_ = state_vector(make_preset("w", (0.0,)).with_boundary(b), 3)
        expect = np.zeros(8)
        for bits in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
            expect[_basis_index(bits)] = 1 / math.sqrt(3)
        np.testing.assert_allclose(st_.amplitudes, expect, atol=1e-15)

    def test_w_trace_closure_vanishes_on_single_excitations(self):
        st_ = state_vector(make_preset("w", (0.0,)), 3)
        assert abs(st_.amplitudes[0]) == pytest.approx(1.0)
        for bits in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
            assert st_.amplitudes[_basis_index(bits)] == 0

    def test_matches_direct_trace(self, rng):
        mps = random_mps(3, 2, rng)
        st_ = state_vector(mps, 3)
        raw = np.array(
            [np.trace(mps.tensors[a] @ mps.tensors[b] @ mps.tensors[c]) for a in range(3) for b in range(3) for c in range(3)]
        )
        np.testing.assert_allclose(st_.amplitudes, raw / np.linalg.norm(raw), atol=1e-13)

    def test_size_cap(self):
        with pytest.raises(SizeCapError):
            state_vector(make_preset("aklt"), 14)

    def test_zero_state(self):
        # the cluster tensors are traceless in odd products of A1 ... but a nilpotent MPS is simpler
        mps = MatrixProductState([[[0, 1], [0, 0]]])
        with pytest.raises(DomainError):
            state_vector(mps, 2)


class TestObservables:
    def test_product_expectation(self):
        st_ = state_vector(make_preset("product"), 5)
        for site in range(5):
            assert expectation_local(st_, SZ, site) == pytest.approx(1.0)

    def test_ghz_expectation(self):
        st_ = state_vector(make_preset("ghz"), 4)
        for site in range(4):
            assert abs(expectation_local(st_, SZ, site)) < 1e-15

    def test_product_correlator(self):
        st_ = state_vector(make_preset("product"), 4)
        assert abs(connected_correlator(st_, SX, 0, SZ, 3)) < 1e-15

    @pytest.mark.parametrize("j", [1, 2, 5])
    def test_ghz_correlator(self, j):
        st_ = state_vector(make_preset("ghz"), 6)
        assert connected_correlator(st_, SZ, 0, SZ, j) == pytest.approx(1.0)

    def test_errors(self):
        st_ = state_vector(make_preset("ghz"), 3)
        with pytest.raises(DomainError):
            expectation_local(st_, np.eye(3), 0)
        with pytest.raises(DomainError):
            expectation_local(st_, SZ, 3)
        with pytest.raises(DomainError):
            connected_correlator(st_, SZ, 1, SZ, 1)


class TestEntropy:
    def test_product(self):
        st_ = state_vector(make_preset("product"), 6)
        assert all(block_entropy(st_, L) == 0 for L in range(1, 6))

    def test_ghz(self):
        st_ = state_vector(make_preset("ghz"), 6)
        for L in range(1, 6):
            assert block_entropy(st_, L) == pytest.approx(1.0, abs=1e-12)

    def test_bell_pair(self):
        st_ = PureStateVector(2, 2, np.array([1, 0, 0, 1]) / math.sqrt(2))
        sd = schmidt_decompose(st_, 1)
        np.testing.assert_allclose(sd.coefficients, [2**-0.5] * 2)
        assert sd.entropy_bits == pytest.approx(1.0)

    def test_aklt_middle_cut(self):
        sd = schmidt_decompose(state_vector(make_preset("aklt"), 8), 4)
        c = sd.coefficients
        assert c.size == 4
        assert np.sum(c**2) == pytest.approx(1.0, abs=1e-12)
        distinct = np.unique(np.round(c, 10))
        assert distinct.size == 2

    def test_schmidt_data_invariants(self):
        sd = SchmidtData.from_coefficients([0.1, 3.0, 1.0])
        assert np.all(np.diff(sd.coefficients) <= 0)
        assert np.sum(sd.coefficients**2) == pytest.approx(1.0, abs=1e-10)
        p = sd.coefficients**2
        assert sd.entropy_bits == pytest.approx(-np.sum(p * np.log2(p)))

    def test_bad_block(self):
        st_ = state_vector(make_preset("ghz"), 3)
        for bad in (0, 3):
            with pytest.raises(DomainError):
                block_entropy(st_, bad)


@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(1, 3))
@settings(max_examples=20, deadline=None)
def test_local_unitary_invariance(seed, d, D):
    rng = np.random.default_rng(seed)
    mps = random_mps(d, D, rng)
    u = random_unitary(d, rng)
    m = 6
    a = state_vector(mps, m)
    b = state_vector(mps.physical_unitary(u), m)
    for L in range(1, m):
        assert abs(block_entropy(a, L) - block_entropy(b, L)) < 1e-10
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    op = h + h.conj().T
    op_u = u @ op @ u.conj().T
    ca = connected_correlator(a, op, 1, op, 4)
    cb = connected_correlator(b, op_u, 1, op_u, 4)
    assert abs(abs(ca) - abs(cb)) < 1e-10


@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(1, 3), st.sampled_from([6, 7, 8]))
@settings(max_examples=20, deadline=None)
def test_entropy_symmetry(seed, d, D, m):
    st_ = state_vector(random_mps(d, D, np.random.default_rng(seed)), m)
    for L in range(1, m):
        assert abs(block_entropy(st_, L) - block_entropy(st_, m - L)) < 1e-10


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_block_anchor_irrelevant(seed):
    # translation invariance: a block of L sites starting at site s has the same entropy
    rng = np.random.default_rng(seed)
    m, L = 7, 3
    st_ = state_vector(random_mps(2, 2, rng), m)
    psi = st_.as_tensor()
    base = block_entropy(st_, L)
    for shift in range(1, m):
        rolled = np.moveaxis(psi, list(range(m)), [(i + shift) % m for i in range(m)])
        other = PureStateVector(m, 2, rolled.reshape(-1))
        assert abs(block_entropy(other, L) - base) < 1e-10
