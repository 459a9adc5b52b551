import numpy as np
import pytest
from numpy.testing import assert_allclose

from lszwalk.davies import commutant_dimension, davies_instance, davies_lindbladian
from lszwalk.discriminant import (
    discriminant_matrix,
    purified_fixed_point,
    similarity_khat,
    verify_similarity,
)
from lszwalk.instances import random_canonical_lindbladian, random_davies_instance
from lszwalk.lindblad import Lindbladian, lindblad_matrix, spectral_gap, to_lindbladian
from lszwalk.matrix_core import eig_hermitian, kron, vec
from lszwalk.superop import GNS, KMS, PINNED_WEIGHTS, reference_state

from conftest import PAULI_X

H01 = eig_hermitian(np.diag([0.0, 1.0]).astype(complex))
SWAP = np.eye(4)[[0, 2, 1, 3]]


class TestClosedForm:
    def test_qubit1_spectrum(self, qubit1_canonical):
        disc = discriminant_matrix(qubit1_canonical)
        expected = np.sort(
            [0.0, -(1.0 + np.exp(-1.0)) / 2.0, -(1.0 + np.exp(-1.0)) / 2.0, -(1.0 + np.exp(-1.0))]
        )
        assert_allclose(np.linalg.eigvalsh(disc.khat), expected, atol=1e-12)

    def test_identity_coupling_gives_trivial_discriminant(self):
        inst = davies_instance(H01, 1.0, [(np.eye(2), 1.0)], "metropolis")
        disc = discriminant_matrix(davies_lindbladian(inst))
        assert np.linalg.norm(disc.khat, 2) <= 1e-12
        assert_allclose(disc.q, np.eye(4), atol=1e-12)

    def test_infinite_temperature_swap_symmetry(self):
        inst = davies_instance(H01, 0.0, [(PAULI_X, 1.0)], "metropolis")
        disc = discriminant_matrix(davies_lindbladian(inst))
        mirrored = SWAP @ disc.khat.conj() @ SWAP
        assert np.linalg.norm(mirrored - disc.khat, 2) <= 1e-12

    def test_validation_invariants(self, qubit1_canonical):
        disc = discriminant_matrix(qubit1_canonical)
        assert np.linalg.norm(disc.khat - disc.khat.conj().T, 2) <= 1e-10
        assert np.linalg.norm(disc.khat @ disc.fixed_point) <= 1e-9
        w = np.linalg.eigvalsh(disc.q)
        assert w[0] >= -1.0 - 1e-9 and w[-1] <= 1.0 + 1e-9

    def test_khat_can_leave_minus_one(self, qubit1_canonical):
        # the lowest eigenvalue -(1 + 1/e) < -1 is neither clipped nor rescaled
        disc = discriminant_matrix(qubit1_canonical)
        assert np.linalg.eigvalsh(disc.khat)[0] < -1.0


class TestSimilarity:
    def test_qubit1_all_weights(self, qubit1_canonical):
        lb = to_lindbladian(qubit1_canonical)
        ref = qubit1_canonical.reference
        disc = discriminant_matrix(qubit1_canonical)
        for f in PINNED_WEIGHTS:
            assert verify_similarity(lb, ref, f, disc) <= 1e-9

    def test_f_independence_pairwise(self):
        rng = np.random.default_rng(0)
        cl = random_canonical_lindbladian(rng, 3, n_terms=2)
        lb = to_lindbladian(cl)
        routes = [similarity_khat(lb, cl.reference, f) for f in PINNED_WEIGHTS]
        for i in range(len(routes)):
            for j in range(i + 1, len(routes)):
                assert np.linalg.norm(routes[i] - routes[j], 2) <= 1e-8

    def test_non_db_instance_flagged(self, qubit1_canonical):
        raise_only = Lindbladian(jump_ops=(np.array([[0, 0], [1, 0]], dtype=complex),), dim=2)
        disc = discriminant_matrix(qubit1_canonical)
        assert verify_similarity(raise_only, qubit1_canonical.reference, KMS, disc) > 1e-3


class TestPurifiedFixedPoint:
    def test_maximally_mixed(self):
        ref = reference_state(np.eye(2, dtype=complex) / 2.0)
        assert_allclose(purified_fixed_point(ref), np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-12)

    def test_qubit1_gibbs(self, qubit1_canonical):
        v = purified_fixed_point(qubit1_canonical.reference)
        z = 1.0 + np.exp(-1.0)
        expected = np.array([np.sqrt(1.0 / z), 0.0, 0.0, np.sqrt(np.exp(-1.0) / z)])
        assert_allclose(v, expected, atol=1e-12)

    def test_partial_trace_recovers_sigma(self):
        rng = np.random.default_rng(1)
        cl = random_canonical_lindbladian(rng, 3)
        v = purified_fixed_point(cl.reference)
        outer = np.outer(v, v.conj()).reshape(3, 3, 3, 3)
        reduced = np.einsum("ikjk->ij", outer)
        assert np.linalg.norm(reduced - cl.reference.sigma, 2) <= 1e-10

    def test_q_fixes_purification(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            cl = random_canonical_lindbladian(rng, 3)
            disc = discriminant_matrix(cl)
            v = purified_fixed_point(cl.reference)
            assert np.linalg.norm(disc.q @ v - v) <= 1e-9


class TestCrossModule:
    def test_gap_equality_l_vs_q(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            inst = random_davies_instance(rng, 3, n_couplings=2)
            cl = davies_lindbladian(inst)
            disc = discriminant_matrix(cl)
            lhat = lindblad_matrix(to_lindbladian(cl))
            gap_l = -np.sort(np.linalg.eigvals(lhat).real)[-2]
            gap_q = spectral_gap(disc.q, 1.0)
            assert gap_l == pytest.approx(gap_q, abs=1e-9)

    def test_keystone_against_walk(self, qubit1, qubit1_canonical):
        from lszwalk.walk import build_isometry_single

        disc = discriminant_matrix(qubit1_canonical)
        emb = build_isometry_single(qubit1)
        assert np.linalg.norm(emb.encoded_matrix() - disc.q, 2) <= 1e-9

    def test_uniqueness_matches_commutant(self):
        rng = np.random.default_rng(4)
        seen_unique = 0
        for _ in range(10):
            inst = random_davies_instance(rng, 3, n_couplings=1)
            ops = [s for s, _ in inst.couplings] + [inst.hamiltonian.matrix()]
            if commutant_dimension(ops) != 1:
                continue
            seen_unique += 1
            disc = discriminant_matrix(davies_lindbladian(inst))
            w = np.linalg.eigvalsh(disc.q)
            assert int(np.sum(w >= w[-1] - 1e-8)) == 1
        assert seen_unique >= 5
