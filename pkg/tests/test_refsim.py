import math

import numpy as np
import pytest

from aelab import Method, NoiseModel, SystemSize, classical_fisher, prob_good, quantum_fisher
from aelab.refsim import (
    UnitaryFactory,
    depolarize,
    evolve,
    measure_probs,
    numeric_classical_fisher,
    numeric_qfi,
    reflections,
    rotation_check,
    run_equivalence_suite,
    theorem_bound,
    validate_density_matrix,
)


@pytest.fixture
def factory():
    return UnitaryFactory(n=2, theta=0.37, w_seed=123)


class TestOperators:
    def test_state_prep_is_unitary(self, factory):
        a = factory.state_prep()
        assert np.allclose(a @ a.conj().T, np.eye(factory.dim), atol=1e-12)

    def test_state_prep_structure(self, factory):
        # A|0> = cos(theta)|w>|0> + sin(theta)|w>|1> with the flag as the LSB
        psi = factory.state_prep()[:, 0]
        flag0, flag1 = psi[0::2], psi[1::2]
        assert np.linalg.norm(flag0) == pytest.approx(math.cos(0.37), abs=1e-12)
        assert np.linalg.norm(flag1) == pytest.approx(math.sin(0.37), abs=1e-12)
        # both branches hold the same work-register state
        assert np.allclose(flag0 / math.cos(0.37), flag1 / math.sin(0.37), atol=1e-12)

    def test_state_prep_deriv_is_isometric(self, factory):
        # the derivative acts through a rotation generator only: norms survive
        da = factory.state_prep_deriv()
        assert np.allclose(da.conj().T @ da, np.eye(factory.dim), atol=1e-12)

    def test_reflections_are_involutions(self):
        ops = reflections(3)
        for u in (ops.u0, ops.uf):
            assert np.allclose(u, u.conj().T, atol=1e-12)
            assert np.allclose(u @ u, np.eye(16), atol=1e-12)
        assert ops.u0[0, 0] == 1.0
        assert ops.uf[0, 0] == 1.0 and ops.uf[1, 1] == -1.0

    def test_factory_guards(self):
        with pytest.raises(ValueError):
            UnitaryFactory(n=9, theta=0.3)
        with pytest.raises(ValueError):
            UnitaryFactory(n=2, theta=0.0)


class TestEvolve:
    def test_pure_preparation(self, factory):
        rho = evolve(Method.G, 0, factory, 1.0)
        psi = factory.state_prep()[:, 0]
        assert np.allclose(rho, np.outer(psi, psi.conj()), atol=1e-12)

    def test_q_single_step_overlap(self):
        f = UnitaryFactory(n=2, theta=math.pi / 8, w_seed=5)
        rho = evolve(Method.Q, 1, f, 1.0)
        p0, _ = measure_probs(rho, Method.Q)
        assert p0 == pytest.approx(math.cos(math.pi / 4) ** 2, abs=1e-12)

    def test_noise_weight_decomposition(self, factory):
        # after one amplification (3 queries) the surviving weight is r^3
        rho = evolve(Method.G, 1, factory, 0.9)
        pure = evolve(Method.G, 1, factory, 1.0)
        recon = 0.9**3 * pure + (1 - 0.9**3) * np.eye(8) / 8
        assert np.abs(rho - recon).max() < 1e-12

    def test_channel_commutes_with_unitaries(self, factory):
        # applying all depolarizing factors at the end gives the same state
        for method, m, n_noise in ((Method.G, 2, 5), (Method.Q, 2, 4)):
            interleaved = evolve(method, m, factory, 0.8)
            pure = evolve(method, m, factory, 1.0)
            collected = pure
            for _ in range(n_noise):
                collected = depolarize(collected, 0.8)
            assert np.abs(interleaved - collected).max() < 1e-12

    def test_density_matrix_invariants(self, factory):
        for method in Method:
            for m in (0, 1, 3):
                for r in (1.0, 0.6):
                    validate_density_matrix(evolve(method, m, factory, r))

    def test_guards(self, factory):
        with pytest.raises(ValueError):
            evolve(Method.G, 65, factory, 1.0)
        with pytest.raises(ValueError):
            evolve(Method.G, 1, factory, 0.0)


class TestMeasureProbs:
    def test_matches_closed_forms(self, factory):
        size = SystemSize(3)  # 2 work qubits + flag
        for method in Method:
            for m in (0, 1, 2, 4):
                for r in (1.0, 0.9, 0.5):
                    _, p1 = measure_probs(evolve(method, m, factory, r), method)
                    ref = prob_good(method, 0.37, m, NoiseModel(r), size)
                    assert abs(p1 - ref) < 1e-10

    def test_maximally_mixed(self):
        rho = np.eye(8, dtype=complex) / 8
        p0, p1 = measure_probs(rho, Method.Q)
        assert p0 == pytest.approx(1 / 8, abs=1e-15)
        p0, p1 = measure_probs(rho, Method.G)
        assert p0 == pytest.approx(0.5, abs=1e-15)

    def test_g_probability_ignores_work_unitary(self):
        vals = []
        for w_seed in (1, 2, 99):
            f = UnitaryFactory(n=2, theta=0.61, w_seed=w_seed)
            vals.append(measure_probs(evolve(Method.G, 2, f, 0.9), Method.G)[1])
        assert max(vals) - min(vals) < 1e-12


class TestRotation:
    def test_small_m_deviations(self):
        f = UnitaryFactory(n=2, theta=math.pi / 8, w_seed=5)
        assert rotation_check(f, 0) == 0.0
        for m in (1, 2, 5):
            assert rotation_check(f, m) < 1e-10

    def test_two_steps_reach_orthogonal(self):
        # 4 * pi/8 = pi/2: the rotated state leaves the all-zeros axis entirely
        f = UnitaryFactory(n=2, theta=math.pi / 8, w_seed=5)
        rho = evolve(Method.Q, 2, f, 1.0)
        p0, _ = measure_probs(rho, Method.Q)
        assert abs(p0) < 1e-12


class TestNumericQfi:
    def test_noiseless_value(self, factory):
        assert numeric_qfi(Method.G, 1, factory, 1.0) == pytest.approx(36.0, rel=1e-10)

    def test_noisy_value(self):
        f = UnitaryFactory(n=2, theta=math.pi / 8, w_seed=5)
        val = numeric_qfi(Method.Q, 1, f, 0.9)
        ref = quantum_fisher(2, NoiseModel(0.9), SystemSize(3))
        assert ref == pytest.approx(12.242099125364433, rel=1e-12)
        assert val == pytest.approx(ref, rel=1e-8)

    def test_methods_share_the_same_curve(self, factory):
        # parity forbids equal query counts, so both methods are checked
        # against the same closed-form curve instead
        size = SystemSize(3)
        for m, method in ((1, Method.G), (2, Method.Q)):
            n_q = 2 * m + 1 if method is Method.G else 2 * m
            val = numeric_qfi(method, m, factory, 0.85)
            assert val == pytest.approx(quantum_fisher(n_q, NoiseModel(0.85), size), rel=1e-8)


class TestNumericClassicalFisher:
    def test_single_query_noiseless(self):
        f = UnitaryFactory(n=2, theta=math.pi / 6, w_seed=1)
        assert numeric_classical_fisher(Method.G, 0, f, 1.0) == pytest.approx(4.0, rel=1e-6)

    def test_three_queries_noiseless(self):
        f = UnitaryFactory(n=2, theta=math.pi / 7, w_seed=1)
        assert numeric_classical_fisher(Method.G, 1, f, 1.0) == pytest.approx(36.0, rel=1e-6)

    def test_degenerate_angle_rejected(self):
        # 3 * pi/6 = pi/2 pins the hit probability to 1
        f = UnitaryFactory(n=2, theta=math.pi / 6, w_seed=1)
        with pytest.raises(ValueError):
            numeric_classical_fisher(Method.G, 1, f, 1.0)

    def test_noisy_q_value(self):
        f = UnitaryFactory(n=2, theta=math.pi / 8, w_seed=5)
        val = numeric_classical_fisher(Method.Q, 1, f, 0.9)
        ref = classical_fisher(Method.Q, math.pi / 8, 2, NoiseModel(0.9), SystemSize(3))
        assert val == pytest.approx(ref, rel=1e-6)

    def test_settles_the_q_hand_value(self):
        # independent finite-difference confirmation of the 64/55 closed form
        f = UnitaryFactory(n=1, theta=math.pi / 8, w_seed=9)
        val = numeric_classical_fisher(Method.Q, 1, f, 0.5)
        assert val == pytest.approx(64 / 55, rel=1e-6)


class TestTheoremBound:
    def test_noiseless(self):
        assert theorem_bound(3, 2, [1.0, 1.0, 1.0]) == pytest.approx(36.0)

    def test_noisy_value(self):
        assert theorem_bound(2, 4, [0.9, 0.9]) == pytest.approx(11.599558011049727, rel=1e-12)

    def test_circuit_respects_bound(self):
        f = UnitaryFactory(n=3, theta=0.44, w_seed=3)
        val = numeric_qfi(Method.G, 2, f, 0.95)
        bound = theorem_bound(5, 16, [0.95] * 5)
        assert val <= bound * (1 + 1e-9)
        assert val == pytest.approx(bound, rel=1e-8)  # attained by this circuit

    def test_validation(self):
        with pytest.raises(ValueError):
            theorem_bound(0, 4, [0.9])
        with pytest.raises(ValueError):
            theorem_bound(2, 4, [0.0])


class TestEquivalenceSuite:
    def test_reduced_grid_passes(self):
        report = run_equivalence_suite(
            n_values=(1, 3), m_values=(0, 1, 3), r_values=(1.0, 0.7), seeds=4
        )
        assert report.n_cases == 2 * 4 * 3 * 2 * 2
        assert report.all_passed
        assert report.worst("prob_dev") < 1e-10
        assert report.worst("qfi_rel_dev") < 1e-8

    def test_fault_injection_is_detected(self):
        report = run_equivalence_suite(
            n_values=(1,), m_values=(1,), r_values=(0.9,), seeds=2, perturb_r=1e-3
        )
        assert not report.all_passed
