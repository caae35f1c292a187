"""Meter states, the reduction pipeline, and the Born-sampling oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import assert_valid_density, binomial_sigma, random_density, random_diagonal_density
from reduction_machine.errors import ContractViolationError, PointerNotSeparatedError
from reduction_machine.quantum import (
    DensityMatrix,
    PointerState,
    PurifiedState,
    apply_superselection,
    binary_entropy,
    decohere,
    event_read,
    evolve_von_neumann,
    purify,
    shannon_entropy,
)

H_QUARTER = 0.8112781244591328  # -0.25*log2(0.25) - 0.75*log2(0.75)


def separated_pointer(sigma_q: float = 1.0, eta: float = 3.0) -> PointerState:
    return PointerState(sigma_q=sigma_q, shift1=eta * sigma_q * 2.0)


class TestDensityMatrix:
    def test_valid_mixed_state(self):
        rho = DensityMatrix(0.25, 0.1j, -0.1j, 0.75)
        assert rho.weights == (0.25, 0.75)
        assert not rho.is_diagonal()

    def test_rejects_non_hermitian(self):
        with pytest.raises(ContractViolationError):
            DensityMatrix(0.5, 0.2, 0.3, 0.5)

    def test_rejects_bad_trace(self):
        with pytest.raises(ContractViolationError):
            DensityMatrix(0.6, 0j, 0j, 0.6)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ContractViolationError):
            DensityMatrix(1.5, 0j, 0j, -0.5)
        with pytest.raises(ContractViolationError):
            # off-diagonal too large for the diagonal
            DensityMatrix(0.5, 0.6, 0.6, 0.5)

    def test_pure_and_json(self):
        rho = DensityMatrix.pure(1)
        assert rho.weights == (0.0, 1.0)
        assert rho.to_json() == [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]

    def test_matrix_round_trip(self, rng):
        for _ in range(50):
            rho = random_density(rng)
            again = DensityMatrix.from_matrix(rho.to_matrix())
            assert np.allclose(rho.to_matrix(), again.to_matrix())


class TestDecohere:
    def test_already_diagonal(self):
        rho = DensityMatrix.from_weights(0.3, 0.7)
        assert decohere(rho).to_matrix() == pytest.approx(rho.to_matrix())

    def test_erases_real_coherence(self):
        rho = DensityMatrix(0.5, 0.5, 0.5, 0.5)
        assert decohere(rho).weights == (0.5, 0.5)
        assert decohere(rho).is_diagonal()

    def test_erases_complex_coherence(self):
        rho = DensityMatrix(0.25, 0.1j, -0.1j, 0.75)
        assert decohere(rho).weights == (0.25, 0.75)

    def test_idempotent(self, rng):
        for _ in range(200):
            rho = random_density(rng)
            once = decohere(rho)
            twice = decohere(once)
            assert once == twice


class TestPurify:
    def test_rank_one(self):
        psi = purify(DensityMatrix.from_weights(1.0, 0.0))
        assert (psi.a0, psi.a1) == (1.0 + 0j, 0j)

    def test_symmetric(self):
        psi = purify(DensityMatrix.from_weights(0.5, 0.5))
        assert abs(psi.a0) == pytest.approx(1.0 / math.sqrt(2.0))
        assert abs(psi.a1) == pytest.approx(1.0 / math.sqrt(2.0))

    def test_quarter_weights(self):
        psi = purify(DensityMatrix.from_weights(0.25, 0.75))
        assert psi.a0 == pytest.approx(0.5)
        assert psi.a1 == pytest.approx(math.sqrt(0.75))

    def test_partial_trace_round_trip(self, rng):
        for _ in range(1000):
            rho = random_diagonal_density(rng)
            back = purify(rho).reduced_density()
            assert abs(back.m00 - rho.m00) <= 1e-12
            assert abs(back.m11 - rho.m11) <= 1e-12

    def test_rejects_coherent_input(self):
        with pytest.raises(ContractViolationError):
            purify(DensityMatrix(0.5, 0.5, 0.5, 0.5))


class TestEvolve:
    def test_t_zero_is_identity(self):
        psi = purify(DensityMatrix.from_weights(0.25, 0.75))
        ptr = PointerState(sigma_q=1.0)
        psi2, ptr2 = evolve_von_neumann(psi, ptr, lam=4.0, t=0.0)
        assert psi2 == psi
        assert ptr2 == ptr

    def test_displacement_is_lam_m_t(self):
        psi = purify(DensityMatrix.from_weights(0.5, 0.5))
        _, ptr = evolve_von_neumann(psi, PointerState(sigma_q=1.0), lam=2.0, t=3.0)
        assert ptr.shift_ledger == {0: 0.0, 1: 6.0}

    def test_populations_preserved(self, rng):
        for _ in range(300):
            rho = random_diagonal_density(rng)
            psi = purify(rho)
            lam, t = rng.uniform(0, 10), rng.uniform(0, 10)
            psi2, _ = evolve_von_neumann(psi, PointerState(sigma_q=1.0), lam, t)
            assert psi2.weights == psi.weights

    def test_additive_in_time(self, rng):
        psi = purify(DensityMatrix.from_weights(0.4, 0.6))
        for _ in range(200):
            lam = rng.uniform(0.1, 5.0)
            t1, t2 = rng.uniform(0, 5.0), rng.uniform(0, 5.0)
            _, stepped = evolve_von_neumann(
                *evolve_von_neumann(psi, PointerState(sigma_q=1.0), lam, t1), lam, t2
            )
            _, direct = evolve_von_neumann(psi, PointerState(sigma_q=1.0), lam, t1 + t2)
            assert abs(stepped.shift1 - direct.shift1) <= 1e-12 * max(direct.shift1, 1.0)

    def test_rejects_negative_arguments(self):
        psi = purify(DensityMatrix.from_weights(0.5, 0.5))
        with pytest.raises(ContractViolationError):
            evolve_von_neumann(psi, PointerState(sigma_q=1.0), lam=-1.0, t=1.0)
        with pytest.raises(ContractViolationError):
            evolve_von_neumann(psi, PointerState(sigma_q=1.0), lam=1.0, t=-1.0)

    def test_branch_zero_pinned(self):
        with pytest.raises(ContractViolationError):
            PointerState(sigma_q=1.0, shift0=0.5)

    def test_pointer_needs_positive_spread(self):
        with pytest.raises(ContractViolationError):
            PointerState(sigma_q=0.0)
        with pytest.raises(ContractViolationError):
            PointerState(sigma_q=-1.0)


class TestSuperselection:
    @pytest.mark.parametrize("w", [(0.25, 0.75), (1.0, 0.0), (0.5, 0.5)])
    def test_weights_survive(self, w):
        psi = purify(DensityMatrix.from_weights(*w))
        out = apply_superselection(psi, PointerState(sigma_q=1.0))
        assert out.weights[0] == pytest.approx(w[0], abs=1e-12)
        assert out.weights[1] == pytest.approx(w[1], abs=1e-12)
        assert decohere(out) == out

    def test_phase_invariance(self, rng):
        psi = purify(DensityMatrix.from_weights(0.5, 0.5))
        base = apply_superselection(psi, PointerState(sigma_q=1.0))
        for _ in range(200):
            phased = psi.with_branch_phases(rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))
            out = apply_superselection(phased, PointerState(sigma_q=1.0))
            assert abs(out.m00 - base.m00) <= 1e-12
            assert abs(out.m11 - base.m11) <= 1e-12


class TestEventRead:
    def test_pure_state_reads_immediately(self, rng):
        # fresh (unseparated) pointer: pure states fire regardless
        reading = event_read(DensityMatrix.pure(0), PointerState(sigma_q=1.0), 3.0, rng)
        assert reading == (0, DensityMatrix.pure(0), 0.0)
        reading = event_read(DensityMatrix.pure(1), PointerState(sigma_q=1.0), 3.0, rng)
        assert reading.outcome == 1 and reading.surprisal_bits == 0.0

    def test_pure_state_consumes_no_randomness(self):
        rng = np.random.default_rng(3)
        before = rng.bit_generator.state
        event_read(DensityMatrix.pure(1), PointerState(sigma_q=1.0), 3.0, rng)
        assert rng.bit_generator.state == before

    def test_mixed_state_requires_separation(self, rng):
        rho = DensityMatrix.from_weights(0.25, 0.75)
        with pytest.raises(PointerNotSeparatedError):
            event_read(rho, PointerState(sigma_q=1.0), 3.0, rng)
        ptr = PointerState(sigma_q=1.0, shift1=3.0)  # exactly at threshold
        event_read(rho, ptr, 3.0, rng)

    def test_born_frequencies(self):
        rho = DensityMatrix.from_weights(0.25, 0.75)
        ptr = separated_pointer()
        rng = np.random.default_rng(90125)
        n = 100_000
        ones = sum(event_read(rho, ptr, 3.0, rng).outcome for _ in range(n))
        assert abs(ones / n - 0.75) <= 3.0 * binomial_sigma(0.75, n)

    def test_born_frequencies_across_random_states(self):
        # 100 random diagonal states, 1e5 draws each, 4 sigma binomial bounds
        ptr = separated_pointer()
        rng = np.random.default_rng(271)
        n = 100_000
        for _ in range(100):
            p1 = rng.random()
            rho = DensityMatrix.from_weights(1.0 - p1, p1)
            ones = 0
            for _ in range(n):
                ones += event_read(rho, ptr, 3.0, rng).outcome
            assert abs(ones / n - p1) <= 4.0 * binomial_sigma(p1, n)

    def test_symmetric_surprisal_is_one_bit(self, rng):
        rho = DensityMatrix.from_weights(0.5, 0.5)
        reading = event_read(rho, separated_pointer(), 3.0, rng)
        assert reading.surprisal_bits == pytest.approx(1.0, abs=1e-12)

    def test_seeded_determinism(self):
        rho = DensityMatrix.from_weights(0.3, 0.7)
        ptr = separated_pointer()
        a = [event_read(rho, ptr, 3.0, np.random.default_rng(s)).outcome for s in range(64)]
        b = [event_read(rho, ptr, 3.0, np.random.default_rng(s)).outcome for s in range(64)]
        assert a == b

    def test_rejects_coherent_input(self, rng):
        with pytest.raises(ContractViolationError):
            event_read(DensityMatrix(0.5, 0.5, 0.5, 0.5), separated_pointer(), 3.0, rng)

    def test_mean_surprisal_matches_entropy(self):
        rho = DensityMatrix.from_weights(0.25, 0.75)
        ptr = separated_pointer()
        rng = np.random.default_rng(777)
        n = 100_000
        total = 0.0
        total_sq = 0.0
        for _ in range(n):
            s = event_read(rho, ptr, 3.0, rng).surprisal_bits
            total += s
            total_sq += s * s
        mean = total / n
        var = total_sq / n - mean * mean
        sigma_mean = math.sqrt(var / n)
        assert abs(mean - H_QUARTER) <= 3.0 * sigma_mean + 1e-9


class TestShannonEntropy:
    def test_reference_points(self):
        assert shannon_entropy((0.5, 0.5)) == 1.0
        assert shannon_entropy((1.0, 0.0)) == 0.0
        assert shannon_entropy((0.25, 0.75)) == pytest.approx(H_QUARTER, abs=1e-15)

    def test_binary_entropy_helper(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.75) == pytest.approx(H_QUARTER, abs=1e-15)

    def test_rejects_bad_weights(self):
        with pytest.raises(ContractViolationError):
            shannon_entropy((0.5, 0.6))
        with pytest.raises(ContractViolationError):
            shannon_entropy((-0.1, 1.1))


class TestPipelineInvariants:
    def test_every_operation_preserves_matrix_invariants(self, rng):
        # full chain on random states; constructors self-validate, this
        # re-checks explicitly against numpy
        for _ in range(1000):
            rho = random_density(rng)
            assert_valid_density(rho)
            diag = decohere(rho)
            assert_valid_density(diag)
            psi = purify(diag)
            back = psi.reduced_density()
            assert_valid_density(back)
            lam, t = rng.uniform(0.1, 4.0), rng.uniform(0.0, 4.0)
            psi, ptr = evolve_von_neumann(psi, PointerState(sigma_q=1.0), lam, t)
            ss = apply_superselection(psi, ptr)
            assert_valid_density(ss)
            reading = event_read(ss, separated_pointer(), 3.0, rng)
            assert_valid_density(reading.rho_after)
            assert reading.rho_after.is_pure_eigenstate()
