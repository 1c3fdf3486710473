import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_invertible, random_unitary
from qsrg.classify import (
    LABELS,
    canonical_transfer_matrix,
    classify,
    detect_jordan,
    dominant_eigenvectors,
    fixed_point_mps,
    has_entangled_vector,
)
from qsrg.errors import UnsupportedCaseError
from qsrg.flow import flow
from qsrg.models import make_preset
from qsrg.mps import MatrixProductState
from qsrg.rg import TransferMatrix, coarse_grain_step, normalize_leading, transfer_matrix

PRESET_LABELS = [
    ("product", (), "Product"),
    ("ghz", (), "GHZ"),
    ("w", (0.0,), "WFamily"),
    ("cluster", (), "GenericDimer"),
    ("aklt", (), "GenericDimer"),
    ("domain_wall", (0.7, 0.4, 0.2), "DomainWallFamily"),
]


def _after_flow(mps, steps=8):
    return classify(flow(mps, max_steps=steps).final_transfer())


def _fixed_point(lams):
    pair = dominant_eigenvectors(TransferMatrix(_dimer_e(lams)))
    return fixed_point_mps(pair)


def _dimer_e(lams):
    # |Phi_R><Phi_L| with Phi_R = sum |ii>, Phi_L = sum lambda_i |ii>
    D = len(lams)
    r = np.eye(D).reshape(-1)
    l = np.diag(lams).reshape(-1)
    return np.outer(r, l)


class TestExamples:
    def test_ghz(self):
        rep = classify(TransferMatrix(np.diag([1, 0, 0, 1])))
        assert rep.label == "GHZ" and rep.e_infinity_rank == 2

    def test_identity_is_product(self):
        rep = classify(TransferMatrix(np.eye(4)))
        assert rep.label == "Product" and rep.e_infinity_rank == 4
        # A0 = I, A1 = 0 realizes E = I and the state |0...0>
        assert np.allclose(transfer_matrix(MatrixProductState([np.eye(2), np.zeros((2, 2))])).matrix, np.eye(4))

    def test_aklt(self):
        rep = _after_flow(make_preset("aklt"))
        assert rep.label == "GenericDimer"
        np.testing.assert_allclose(rep.lambdas, [0.5, 0.5], atol=1e-8)
        np.testing.assert_allclose(rep.schmidt.coefficients, [2**-0.5] * 2, atol=1e-8)
        assert rep.schmidt.entropy_bits == pytest.approx(1.0)

    @pytest.mark.parametrize("name, params, label", PRESET_LABELS)
    def test_presets(self, name, params, label):
        assert _after_flow(make_preset(name, params)).label == label

    def test_irrational_phase(self):
        e = TransferMatrix(np.diag([1, np.exp(1j * math.pi * math.sqrt(2)), np.exp(-1j * math.pi * math.sqrt(2)), 1]))
        assert classify(e).label == "PeriodicOrUnknown"

    def test_period_two(self):
        rep = classify(TransferMatrix(np.diag([1, -1, 0.2, 0.1])))
        assert rep.label == "PeriodicOrUnknown"
        assert rep.evidence["period"] == 2

    def test_large_bond_generic(self, rng):
        mps = MatrixProductState(rng.normal(size=(3, 3, 3)))
        rep = _after_flow(mps)
        assert rep.label == "GenericDimer"
        assert rep.e_infinity_rank == 1
        assert len(rep.lambdas) == 3

    def test_to_dict(self):
        d = classify(TransferMatrix(np.diag([1, 0, 0, 1]))).to_dict()
        assert d["label"] == "GHZ"
        assert d["jordan"] == {"algebraic": 2, "geometric": 2, "defective": False}


class TestReportInvariants:
    @pytest.mark.parametrize("name, params, label", PRESET_LABELS)
    def test_label_implications(self, name, params, label):
        rep = _after_flow(make_preset(name, params))
        assert rep.label in LABELS
        if rep.label == "GenericDimer":
            assert rep.e_infinity_rank == 1
            assert rep.schmidt is not None and np.all(rep.schmidt.coefficients > 0)
        if rep.label == "GHZ":
            assert rep.e_infinity_rank == 2
        if rep.label == "Product":
            assert rep.e_infinity_rank in (1, 4)
        # a defective leading eigenvalue always lands in a Jordan family or the fallback
        if rep.defective:
            assert rep.label in ("WFamily", "DomainWallFamily", "PeriodicOrUnknown")
        if rep.label in ("WFamily", "DomainWallFamily"):
            assert rep.defective

    def test_advisories(self):
        assert _after_flow(make_preset("w", (0.0,))).advisory == "Product"
        assert _after_flow(make_preset("domain_wall", (0.7, 0.4, 0.2))).advisory == "GHZ"


class TestDominantPair:
    def test_aklt(self):
        pair = dominant_eigenvectors(transfer_matrix(make_preset("aklt")))
        np.testing.assert_allclose(pair.phi_right, [1, 0, 0, 1], atol=1e-10)
        np.testing.assert_allclose(pair.lambdas, [0.5, 0.5], atol=1e-10)
        assert pair.degeneracy == 1
        assert np.vdot(pair.phi_left, pair.phi_right).real == pytest.approx(1.0)

    def test_ghz(self):
        e = transfer_matrix(make_preset("ghz"))
        pair = dominant_eigenvectors(e)
        assert pair.degeneracy == 2
        # the unit eigenspace contains the product vectors |00>, |11>
        basis = np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex).T
        np.testing.assert_allclose(e.matrix @ basis, basis)
        assert not has_entangled_vector(basis[:, :1])
        # ... but also entangled combinations
        assert has_entangled_vector(basis)

    def test_w(self):
        pair = dominant_eigenvectors(transfer_matrix(make_preset("w", (0.0,))))
        assert pair.defective
        assert pair.algebraic >= 2 and pair.geometric < pair.algebraic


class TestFixedPointMps:
    def test_maximal(self):
        from qsrg.mps import block_entropy, state_vector

        mps = _fixed_point([0.5, 0.5])
        assert mps.d == 4
        st_ = state_vector(mps, 6)
        for L in range(1, 6):
            assert block_entropy(st_, L) == pytest.approx(2.0, abs=1e-10)

    def test_trivial_bond(self):
        mps = fixed_point_mps(dominant_eigenvectors(TransferMatrix([[1.0]])))
        assert mps.d == 1 and mps.D == 1

    def test_idempotent(self):
        e = transfer_matrix(_fixed_point([0.9, 0.1])).matrix
        e2 = e @ e
        assert np.linalg.norm(e2 / np.linalg.norm(e2) - e / np.linalg.norm(e)) < 1e-10

    def test_rejects_degenerate(self):
        with pytest.raises(UnsupportedCaseError):
            fixed_point_mps(dominant_eigenvectors(transfer_matrix(make_preset("ghz"))))

    @given(st.floats(0.05, 0.5))
    @settings(max_examples=20, deadline=None)
    def test_reflow_keeps_schmidt_data(self, lam2):
        lams = [1 - lam2, lam2]
        rep = classify(transfer_matrix(_fixed_point(lams)))
        assert rep.label == "GenericDimer"
        np.testing.assert_allclose(rep.lambdas, sorted(lams, reverse=True), atol=1e-10)
        step = coarse_grain_step(fixed_point_mps(dominant_eigenvectors(transfer_matrix(_fixed_point(lams)))))
        rep2 = classify(transfer_matrix(normalize_leading(step.coarse_state)))
        assert rep2.label == "GenericDimer"
        np.testing.assert_allclose(rep2.lambdas, rep.lambdas, atol=1e-10)


class TestJordan:
    def test_block(self):
        e = np.zeros((4, 4))
        e[:2, :2] = [[1, 1], [0, 1]]
        assert detect_jordan(TransferMatrix(e), 1.0) == (2, 1)

    def test_diagonal(self):
        assert detect_jordan(TransferMatrix(np.diag([1, 1, 0.5, 0])), 1.0) == (2, 2)

    def test_cluster_nilpotent(self):
        e = transfer_matrix(make_preset("cluster")).matrix
        assert np.linalg.matrix_rank(e, tol=1e-10) == 2
        assert np.linalg.matrix_rank(e @ e, tol=1e-10) == 1
        alg, geo = detect_jordan(TransferMatrix(e), 0.0)
        assert alg == 3 and geo == 2


class TestWFamily:
    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.1, 2.5])
    def test_theta_doubles(self, theta):
        mps = make_preset("w", (theta,))
        step = coarse_grain_step(mps)
        got = canonical_transfer_matrix(transfer_matrix(normalize_leading(step.coarse_state)))
        want = canonical_transfer_matrix(transfer_matrix(make_preset("w", (2 * theta,))))
        assert np.max(np.abs(got - want)) < 1e-8

    @pytest.mark.parametrize("theta", [0.3, 1.1, -0.8])
    def test_theta_extracted(self, theta):
        rep = classify(transfer_matrix(make_preset("w", (theta,))))
        assert rep.label == "WFamily"
        assert rep.theta == pytest.approx(theta, abs=1e-8)

    def test_stationary_at_zero(self):
        trace = flow(make_preset("w", (0.0,)))
        assert trace.converged and not trace.periodic
        rep = classify(trace.final_transfer())
        assert rep.label == "WFamily" and rep.defective

    def test_product_relations(self):
        theta = 0.9
        A0, A1 = make_preset("w", (theta,)).tensors
        np.testing.assert_allclose(A0 @ A1, np.exp(-1j * theta) * A1, atol=1e-15)
        np.testing.assert_allclose(A1 @ A0, A1, atol=1e-15)
        np.testing.assert_allclose(A0 @ A0, np.diag([1, np.exp(-2j * theta)]), atol=1e-15)


def _proportional(x, y, tol=1e-12):
    # x = c * y for some scalar c (y nonzero)
    c = np.vdot(y, x) / np.vdot(y, y)
    return np.max(np.abs(x - c * y)) < tol


class TestDomainWall:
    @given(st.floats(0.05, 1.5), st.floats(0.05, 1.5), st.floats(-3.0, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_product_relations(self, alpha, beta, theta):
        A0, A1, A2 = make_preset("domain_wall", (alpha, beta, theta)).tensors
        assert _proportional(A0 @ A1, A1)
        # the printed tensors give A1 A2 proportional to A1 (both equal the nilpotent corner)
        assert _proportional(A1 @ A2, A1)
        assert _proportional(A0 @ A2, A1)
        for z in (A1 @ A0, A2 @ A1, A2 @ A0):
            assert np.max(np.abs(z)) < 1e-12

    def test_label_and_angles(self):
        rep = classify(transfer_matrix(make_preset("domain_wall", (0.7, 0.4, 0.2))))
        assert rep.label == "DomainWallFamily"
        assert 0.0 <= rep.alpha <= math.pi / 2
        assert rep.beta == pytest.approx(math.pi / 4)

    def test_canonical_is_gauge_invariant(self, rng):
        mps = make_preset("domain_wall", (0.7, 0.4, 0.2))
        base = canonical_transfer_matrix(transfer_matrix(mps))
        for _ in range(5):
            g = mps.bond_gauge(random_invertible(2, rng)).physical_unitary(random_unitary(3, rng))
            other = canonical_transfer_matrix(transfer_matrix(g))
            assert np.max(np.abs(other - base)) < 1e-8

    def test_flows_toward_pure_walls(self):
        # the gauge-invariant wall ratio shrinks along the flow
        # the gauge-invariant wall ratio k obeys k'^2 = k^2 / (2 + k^2)
        state = make_preset("domain_wall", (0.7, 0.4, 0.2))
        k = classify(transfer_matrix(state)).evidence["wall_ratio"]
        for _ in range(4):
            state = normalize_leading(coarse_grain_step(state).coarse_state)
            k_next = classify(transfer_matrix(state)).evidence["wall_ratio"]
            assert k_next == pytest.approx(k / math.sqrt(2 + k * k), rel=1e-6)
            k = k_next


@given(st.integers(0, 10_000), st.sampled_from(PRESET_LABELS))
@settings(max_examples=30, deadline=None)
def test_gauge_invariance(seed, case):
    name, params, label = case
    rng = np.random.default_rng(seed)
    mps = make_preset(name, params)
    base = _after_flow(mps)
    g = mps.bond_gauge(random_invertible(mps.D, rng)).physical_unitary(random_unitary(mps.d, rng))
    other = _after_flow(g)
    assert other.label == base.label == label
    if base.lambdas is not None:
        np.testing.assert_allclose(other.lambdas, base.lambdas, atol=1e-6)
    if base.theta is not None:
        assert abs(np.exp(1j * other.theta) - np.exp(1j * base.theta)) < 1e-6
