import numpy as np
import pytest
from numpy.testing import assert_allclose

from lszwalk.davies import davies_instance, davies_lindbladian
from lszwalk.instances import random_db_channel
from lszwalk.lindblad import (
    CanonicalLindbladian,
    Lindbladian,
    QuantumChannel,
    apply_heisenberg,
    apply_schrodinger,
    canonical_term,
    channel_matrix,
    channel_to_lindbladian,
    check_canonical,
    check_detailed_balance,
    fixed_point_residual,
    heisenberg_matrix,
    lindblad_matrix,
    spectral_gap,
    to_lindbladian,
)
from lszwalk.matrix_core import eig_hermitian, kron, vec
from lszwalk.superop import GNS, KMS, PINNED_WEIGHTS, reference_state

from conftest import PAULI_X
from oracles import db_residual_oracle, dissipator_by_loops

RAISE = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |1><0|


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestApply:
    def test_zero_jump(self):
        lb = Lindbladian(jump_ops=(np.zeros((2, 2)),), dim=2)
        rho = np.diag([0.3, 0.7]).astype(complex)
        assert_allclose(apply_schrodinger(lb, rho), np.zeros((2, 2)))

    def test_raising_on_ground(self):
        lb = Lindbladian(jump_ops=(RAISE,), dim=2)
        rho = np.diag([1.0, 0.0]).astype(complex)
        expected = np.diag([-1.0, 1.0])
        assert_allclose(apply_schrodinger(lb, rho), expected, atol=1e-14)
        assert_allclose(dissipator_by_loops([RAISE], rho), expected, atol=1e-14)

    def test_trace_free(self):
        rng = np.random.default_rng(0)
        lb = Lindbladian(jump_ops=tuple(random_complex(rng, (3, 3)) for _ in range(2)), dim=3)
        for _ in range(5):
            rho = random_complex(rng, (3, 3))
            assert abs(np.trace(apply_schrodinger(lb, rho))) <= 1e-10 * np.linalg.norm(rho)

    def test_heisenberg_unital(self):
        rng = np.random.default_rng(1)
        lb = Lindbladian(jump_ops=tuple(random_complex(rng, (3, 3)) for _ in range(2)), dim=3)
        assert np.linalg.norm(apply_heisenberg(lb, np.eye(3)), 2) <= 1e-10

    def test_duality(self):
        rng = np.random.default_rng(2)
        lb = Lindbladian(jump_ops=tuple(random_complex(rng, (3, 3)) for _ in range(2)), dim=3)
        for _ in range(10):
            a = random_complex(rng, (3, 3))
            b = random_complex(rng, (3, 3))
            lhs = np.vdot(vec(apply_heisenberg(lb, a)), vec(b))
            rhs = np.vdot(vec(a), vec(apply_schrodinger(lb, b)))
            assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(lhs))

    def test_heisenberg_raising(self):
        # hand oracle: L^dag O L = |0><0|, {L^dag L, O} = {|0><0|, |1><1|} = 0
        lb = Lindbladian(jump_ops=(RAISE,), dim=2)
        obs = np.diag([0.0, 1.0]).astype(complex)
        assert_allclose(apply_heisenberg(lb, obs), np.diag([1.0, 0.0]), atol=1e-14)


class TestMatrix:
    def test_zero(self):
        lb = Lindbladian(jump_ops=(), dim=2)
        assert_allclose(lindblad_matrix(lb), np.zeros((4, 4)))

    def test_matches_apply(self):
        rng = np.random.default_rng(3)
        lb = Lindbladian(jump_ops=tuple(random_complex(rng, (3, 3)) for _ in range(2)), dim=3)
        lhat = lindblad_matrix(lb)
        for _ in range(50):
            rho = random_complex(rng, (3, 3))
            assert np.linalg.norm(lhat @ vec(rho) - vec(apply_schrodinger(lb, rho))) <= 1e-10 * np.linalg.norm(rho)

    def test_single_raising_formula(self):
        lb = Lindbladian(jump_ops=(RAISE,), dim=2)
        num = RAISE.conj().T @ RAISE
        expected = kron(RAISE, RAISE.conj()) - 0.5 * (kron(num, np.eye(2)) + kron(np.eye(2), num.T))
        assert_allclose(lindblad_matrix(lb), expected, atol=1e-14)

    def test_heisenberg_is_adjoint(self):
        rng = np.random.default_rng(4)
        lb = Lindbladian(jump_ops=tuple(random_complex(rng, (2, 2)) for _ in range(2)), dim=2)
        assert_allclose(heisenberg_matrix(lb), lindblad_matrix(lb).conj().T, atol=1e-13)


class TestDetailedBalance:
    def test_qubit1_is_db(self, qubit1_canonical):
        lb = to_lindbladian(qubit1_canonical)
        ref = qubit1_canonical.reference
        for f in PINNED_WEIGHTS:
            assert check_detailed_balance(lb, ref, f) <= 1e-10
        oracle = db_residual_oracle(lb.jump_ops, ref.sigma, lambda t: np.sqrt(t))
        assert oracle <= 1e-10

    def test_raising_alone_is_not_db(self):
        lb = Lindbladian(jump_ops=(RAISE,), dim=2)
        ref = reference_state(np.eye(2, dtype=complex) / 2.0)
        residual = check_detailed_balance(lb, ref, GNS)
        assert residual > 0.1
        assert db_residual_oracle([RAISE], ref.sigma, lambda t: 1.0) > 0.1

    def test_zero_generator(self):
        lb = Lindbladian(jump_ops=(), dim=2)
        ref = reference_state(np.diag([0.6, 0.4]).astype(complex))
        assert check_detailed_balance(lb, ref, KMS) == 0.0

    def test_residual_matches_oracle(self, qubit1_canonical):
        lb = to_lindbladian(qubit1_canonical)
        sigma = qubit1_canonical.reference.sigma
        got = check_detailed_balance(lb, qubit1_canonical.reference, KMS)
        want = db_residual_oracle(lb.jump_ops, sigma, lambda t: np.sqrt(t))
        assert got == pytest.approx(want, abs=1e-12)

    def test_db_indicator_is_f_independent(self):
        rng = np.random.default_rng(5)
        lb_bad = Lindbladian(jump_ops=(random_complex(rng, (2, 2)),), dim=2)
        ref = reference_state(np.diag([0.7, 0.3]).astype(complex))
        verdicts = [check_detailed_balance(lb_bad, ref, f) > 1e-8 for f in PINNED_WEIGHTS]
        assert all(verdicts) or not any(verdicts)

    def test_db_spectrum_is_real(self, qubit1_canonical):
        lhat = lindblad_matrix(to_lindbladian(qubit1_canonical))
        eigs = np.linalg.eigvals(lhat)
        assert np.max(np.abs(eigs.imag)) <= 1e-9


class TestFixedPoint:
    def test_qubit1_gibbs(self, qubit1_canonical):
        lb = to_lindbladian(qubit1_canonical)
        assert fixed_point_residual(lb, qubit1_canonical.reference.sigma) <= 1e-10

    def test_zero_generator(self):
        lb = Lindbladian(jump_ops=(), dim=2)
        assert fixed_point_residual(lb, np.diag([0.5, 0.5])) == 0.0

    def test_qubit1_maximally_mixed_is_not_fixed(self, qubit1_canonical):
        lb = to_lindbladian(qubit1_canonical)
        residual = fixed_point_residual(lb, np.eye(2) / 2.0)
        oracle = np.linalg.norm(dissipator_by_loops(lb.jump_ops, np.eye(2) / 2.0), 2)
        # oracle value (1 - 1/e)/2 ~ 0.316: clearly nonzero
        assert residual == pytest.approx(oracle, abs=1e-12)
        assert residual == pytest.approx((1.0 - np.exp(-1.0)) / 2.0, abs=1e-12)
        assert residual > 0.1


class TestChannels:
    def test_identity_channel(self):
        channel = QuantumChannel(kraus_ops=(np.eye(2),))
        lb = channel_to_lindbladian(channel)
        assert np.linalg.norm(lindblad_matrix(lb), 2) <= 1e-14

    def test_bit_flip(self):
        p = 0.25
        channel = QuantumChannel(kraus_ops=(np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * PAULI_X))
        lb = channel_to_lindbladian(channel)
        that = channel_matrix(channel)
        assert np.linalg.norm(lindblad_matrix(lb) - (that - np.eye(4)), 2) <= 1e-10

    def test_completeness_enforced(self):
        with pytest.raises(ValueError, match="completeness"):
            channel_to_lindbladian(QuantumChannel(kraus_ops=(2.0 * np.eye(2),)))

    def test_db_carries_over(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            channel, ref = random_db_channel(rng, 3)
            lb = channel_to_lindbladian(channel)
            assert check_detailed_balance(lb, ref, KMS) <= 1e-8
            assert fixed_point_residual(lb, ref.sigma) <= 1e-9

    def test_eigenvalue_shift(self):
        rng = np.random.default_rng(7)
        channel, _ = random_db_channel(rng, 2)
        that = channel_matrix(channel)
        lhat = lindblad_matrix(channel_to_lindbladian(channel))
        t_eigs = np.sort_complex(np.linalg.eigvals(that))
        l_eigs = np.sort_complex(np.linalg.eigvals(lhat) + 1.0)
        assert np.max(np.abs(t_eigs - l_eigs)) <= 1e-9


class TestSpectralGap:
    def test_simple(self):
        assert spectral_gap(np.diag([1.0, 0.5, 0.2]), 1.0) == pytest.approx(0.5)

    def test_fully_degenerate(self):
        assert spectral_gap(np.eye(3), 1.0) == pytest.approx(0.0)

    def test_missing_eigenvalue(self):
        with pytest.raises(ValueError, match="not an eigenvalue"):
            spectral_gap(np.diag([1.0, 0.5]), 0.7)

    def test_qubit1_discriminant_gap(self, qubit1_canonical):
        from lszwalk.discriminant import discriminant_matrix

        disc = discriminant_matrix(qubit1_canonical)
        assert spectral_gap(disc.q, 1.0) == pytest.approx((1.0 + np.exp(-1.0)) / 2.0, abs=1e-10)


class TestCanonicalForm:
    def test_builder_pairs(self):
        term = canonical_term(1.0, [(1.0, RAISE, 0.3, 0.3 * np.e)])
        assert len(term.frequencies) == 2
        assert_allclose(term.frequencies, [1.0, -1.0])
        assert_allclose(term.jumps[1], RAISE.conj().T)
        assert term.negation.tolist() == [1, 0]

    def test_builder_hermitian_zero_mode(self):
        term = canonical_term(1.0, [(0.0, PAULI_X, 0.5, 0.5)])
        assert len(term.frequencies) == 1
        assert term.negation.tolist() == [0]

    def test_builder_nonhermitian_zero_mode_splits(self):
        term = canonical_term(1.0, [(0.0, RAISE, 0.5, 0.5)])
        assert len(term.frequencies) == 2
        assert_allclose(term.frequencies, [0.0, 0.0])

    def test_negative_frequency_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            canonical_term(1.0, [(-1.0, RAISE, 0.5, 0.5)])

    def test_kms_violation_detected(self, qubit1):
        ref = davies_lindbladian(qubit1).reference
        bad = CanonicalLindbladian(
            reference=ref,
            terms=(canonical_term(1.0, [(1.0, RAISE, 1.0, 1.0)]),),
        )
        residuals = check_canonical(bad, raise_on_failure=False)
        assert residuals["kms_ratio"] > 1e-2
        with pytest.raises(ValueError, match="kms_ratio"):
            check_canonical(bad)

    def test_off_grid_frequency_detected(self, qubit1):
        ref = davies_lindbladian(qubit1).reference
        bad = CanonicalLindbladian(
            reference=ref,
            terms=(canonical_term(1.0, [(0.37, RAISE, np.exp(-0.37), 1.0)]),),
        )
        residuals = check_canonical(bad, raise_on_failure=False)
        assert residuals["frequency_grid"] > 1e-3

    def test_weight_sum_enforced(self, qubit1_canonical):
        term = qubit1_canonical.terms[0]
        halved = CanonicalLindbladian(
            reference=qubit1_canonical.reference,
            terms=(canonical_term(0.5, [(0.0, PAULI_X, 1.0, 1.0)]),),
        )
        residuals = check_canonical(halved, raise_on_failure=False)
        assert residuals["weight_sum"] == pytest.approx(0.5)
        assert term.weight == pytest.approx(1.0)

    def test_to_lindbladian_scales_jumps(self, qubit1_canonical):
        lb = to_lindbladian(qubit1_canonical)
        # one jump per nonzero rate: frequencies -1, 0 (rate 1 but zero op kept), +1
        norms = sorted(float(np.linalg.norm(op, 2)) for op in lb.jump_ops)
        assert norms[-1] == pytest.approx(1.0)  # sqrt(G(-1)) = 1
        assert any(n == pytest.approx(np.exp(-0.5), abs=1e-12) for n in norms)
