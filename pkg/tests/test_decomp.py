import numpy as np
import pytest

from oqsim.channels import (
    ADParams,
    KrausChannel,
    amplitude_damping_channel,
    c1,
    choi,
    choi_distance,
    collisional_correlated,
    collisional_separable,
    depolarizing,
    eternal_rate_family,
    pauli_channel,
    pauli_rates_to_probabilities,
    pump_xx,
    pump_zz,
)
from oqsim.circuits import NoiseModel, circuit_to_channel, run_exact, run_noisy
from oqsim.decomp import (
    PauliAngles,
    ancilla_amplitudes,
    build_amplitude_damping_circuit,
    build_collisional_circuit,
    build_composed_pump_circuit,
    build_depolarizing_circuit,
    build_pauli_circuit,
    build_pump_xx_circuit,
    build_pump_zz_circuit,
    damping_rotation_angle,
    depolarizing_rotation_angle,
    depolarizing_strength,
    pauli_probabilities_from_angles,
    pump_rotation_angle,
    solve_pauli_angles,
)
from oqsim.states import (
    PAULI_X,
    PAULI_Z,
    PSI_MINUS,
    density,
    basis_state,
    maximally_mixed,
    overlap,
    partial_trace,
    tensor,
)

P_GRID = (0.0, 0.15, 0.3, 0.7, 1.0)
GT = np.pi / 6


class TestPumpCircuits:
    @pytest.mark.parametrize("p", P_GRID)
    def test_zz_equivalence(self, p):
        got = circuit_to_channel(build_pump_zz_circuit(p), [0, 1])
        assert choi_distance(got, choi(pump_zz(p))) < 1e-9

    @pytest.mark.parametrize("p", P_GRID)
    def test_xx_equivalence(self, p):
        got = circuit_to_channel(build_pump_xx_circuit(p), [0, 1])
        assert choi_distance(got, choi(pump_xx(p))) < 1e-9

    @pytest.mark.parametrize("p", P_GRID)
    def test_composed_equivalence(self, p):
        got = circuit_to_channel(build_composed_pump_circuit(p), [0, 1])
        assert choi_distance(got, choi(pump_xx(p).compose(pump_zz(p)))) < 1e-9

    def test_angle_relation(self):
        assert pump_rotation_angle(0.0) == 0.0
        assert pump_rotation_angle(1.0) == pytest.approx(np.pi)
        for p in (0.2, 0.5, 0.9):
            assert np.sin(pump_rotation_angle(p) / 2) ** 2 == pytest.approx(p, abs=1e-12)

    def test_full_pump_generates_singlet(self):
        circ = build_composed_pump_circuit(1.0)
        init = tensor(maximally_mixed(2), density(basis_state(2, 0)))
        out = partial_trace(run_exact(circ, init), [0, 1])
        assert overlap(out, PSI_MINUS) == pytest.approx(1.0, abs=1e-10)

    def test_full_pump_under_default_noise(self):
        circ = build_composed_pump_circuit(1.0)
        init = tensor(maximally_mixed(2), density(basis_state(2, 0)))
        out = partial_trace(run_noisy(circ, init, NoiseModel.default()), [0, 1])
        assert 0.85 < overlap(out, PSI_MINUS) < 1.0

    def test_composed_elides_gates(self):
        n_zz = len(build_pump_zz_circuit(0.4).gates)
        n_xx = len(build_pump_xx_circuit(0.4).gates)
        assert len(build_composed_pump_circuit(0.4).gates) < n_zz + n_xx


class TestCollisionalCircuits:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("correlated", [True, False])
    def test_channel_equivalence(self, n, correlated):
        circ = build_collisional_circuit(n, GT, correlated, with_measurement_rotation=False)
        analytic = collisional_correlated(n, GT) if correlated else collisional_separable(n, GT)
        assert choi_distance(circuit_to_channel(circ, [0]), choi(analytic)) < 1e-9

    def _exact_sx(self, circ):
        probs = np.clip(np.diag(run_exact(circ)).real, 0, None)
        n = circ.num_qubits
        signs = 1 - 2 * ((np.arange(2**n) >> (n - 1)) & 1)
        return float(signs @ probs)

    @pytest.mark.parametrize("n", [1, 2, 3, 7])
    def test_correlated_coherence_values(self, n):
        circ = build_collisional_circuit(n, GT, correlated=True)
        assert self._exact_sx(circ) == pytest.approx(np.cos(2 * n * GT), abs=1e-12)

    def test_separable_two_collisions(self):
        circ = build_collisional_circuit(2, GT, correlated=False)
        assert self._exact_sx(circ) == pytest.approx(0.25, abs=1e-12)

    def test_single_collision_variants_agree(self):
        a = self._exact_sx(build_collisional_circuit(1, GT, correlated=True))
        b = self._exact_sx(build_collisional_circuit(1, GT, correlated=False))
        assert a == pytest.approx(b, abs=1e-12)
        assert a == pytest.approx(0.5, abs=1e-12)

    def test_zero_collisions_rejected(self):
        with pytest.raises(ValueError):
            build_collisional_circuit(0, GT, correlated=True)


class TestDampingCircuits:
    @pytest.mark.parametrize("ratio", [0.2, 100.0])
    def test_channel_equivalence_over_time(self, ratio):
        params = ADParams.from_ratio(ratio)
        t_max = 2.0 if ratio > 1 else 6.0
        for t in np.linspace(0.0, t_max, 7):
            circ = build_amplitude_damping_circuit(t, params)
            got = circuit_to_channel(circ, [0])
            assert choi_distance(got, choi(amplitude_damping_channel(t, params))) < 1e-9

    def test_identity_at_origin(self):
        params = ADParams.from_ratio(0.2)
        circ = build_amplitude_damping_circuit(0.0, params)
        got = circuit_to_channel(circ, [0])
        assert choi_distance(got, choi(KrausChannel.identity(2))) < 1e-12
        rho = run_exact(circ)
        assert rho[2, 2].real == pytest.approx(1.0, abs=1e-12)  # |10>, system excited

    def test_population_vanishes_at_survival_zero(self):
        params = ADParams.from_ratio(100.0)
        grid = np.linspace(1e-3, 1.0, 4000)
        vals = np.array([c1(t, params) for t in grid])
        idx = int(np.argmax(vals <= 0))
        lo, hi = grid[idx - 1], grid[idx]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if c1(mid, params) > 0 else (lo, mid)
        t_zero = 0.5 * (lo + hi)
        rho = run_exact(build_amplitude_damping_circuit(t_zero, params))
        population = partial_trace(rho, [0])[1, 1].real
        assert population == pytest.approx(0.0, abs=1e-12)

    def test_witness_circuit_correlators(self):
        # Z-basis counts of (witness, system) reproduce the analytic correlators
        params = ADParams.from_ratio(0.2)
        t = 0.8
        state = choi(amplitude_damping_channel(t, params)) / 2.0
        for basis, op in (("XX", PAULI_X), ("YY", None), ("ZZ", PAULI_Z)):
            circ = build_amplitude_damping_circuit(t, params, with_witness=True, witness_basis=basis)
            rho = run_exact(circ)
            probs = np.clip(np.diag(partial_trace(rho, [2, 0])).real, 0, None)
            parity = float((1 - 2 * ((np.arange(4) >> 1) & 1)) * (1 - 2 * (np.arange(4) & 1)) @ probs)
            if basis == "YY":
                y2 = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
                expected = float(np.trace(state @ y2).real)
            else:
                expected = float(np.trace(state @ np.kron(op, op)).real)
            assert parity == pytest.approx(expected, abs=1e-12)

    def test_bad_witness_basis(self):
        with pytest.raises(ValueError):
            build_amplitude_damping_circuit(0.1, ADParams.from_ratio(0.2), True, "XY")

    def test_rotation_angle_clamps(self):
        params = ADParams.from_ratio(100.0)
        assert damping_rotation_angle(0.0, params) == 0.0


class TestDepolarizingCircuit:
    @pytest.mark.parametrize("p", P_GRID)
    def test_channel_equivalence(self, p):
        got = circuit_to_channel(build_depolarizing_circuit(p), [0])
        assert choi_distance(got, choi(depolarizing(p))) < 1e-9

    def test_angle_endpoints(self):
        assert depolarizing_rotation_angle(0.0) == 0.0
        assert depolarizing_rotation_angle(1.0) == pytest.approx(np.pi / 2)

    def test_angle_round_trip(self):
        for p in (0.0, 0.2, 0.5, 0.77, 1.0):
            assert depolarizing_strength(depolarizing_rotation_angle(p)) == pytest.approx(
                p, abs=1e-12
            )

    def test_full_strength_depolarizes(self, rng):
        from conftest import random_density

        circ = build_depolarizing_circuit(1.0)
        rho = random_density(1, rng)
        init = tensor(rho, density(basis_state(3, 0)))
        out = partial_trace(run_exact(circ, init), [0])
        np.testing.assert_allclose(out, np.eye(2) / 2, atol=1e-12)


class TestPauliAngleSolver:
    def test_identity_case(self):
        angles = solve_pauli_angles(1, 0, 0, 0)
        assert np.abs(angles.as_array()).max() < 1e-6
        assert pauli_probabilities_from_angles(angles) == pytest.approx((1, 0, 0, 0), abs=1e-12)

    def test_pure_z_case(self):
        angles = solve_pauli_angles(0, 0, 0, 1)
        probs = pauli_probabilities_from_angles(angles)
        assert probs == pytest.approx((0, 0, 0, 1), abs=1e-9)
        amps = ancilla_amplitudes(angles)
        assert abs(amps[3]) == pytest.approx(1.0, abs=1e-9)  # weight sits on |11>

    def test_forward_check_gates_output(self, rng):
        for _ in range(50):
            probs = rng.dirichlet(np.ones(4))
            angles = solve_pauli_angles(*probs)
            got = np.array(pauli_probabilities_from_angles(angles))
            assert np.abs(got - probs).max() <= 1e-9

    def test_invalid_input_rejected(self):
        with pytest.raises(ValueError):
            solve_pauli_angles(0.5, 0.5, 0.5, 0.5)
        with pytest.raises(ValueError):
            solve_pauli_angles(1.2, -0.2, 0, 0)

    def test_depolarizing_case_end_to_end(self):
        p = 0.4
        probs = (1 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p)
        angles = solve_pauli_angles(*probs)
        got = circuit_to_channel(build_pauli_circuit(angles), [0])
        assert choi_distance(got, choi(depolarizing(p))) < 1e-9


class TestPauliCircuit:
    def test_zero_angles_identity(self):
        got = circuit_to_channel(build_pauli_circuit(PauliAngles(0, 0, 0)), [0])
        assert choi_distance(got, choi(KrausChannel.identity(2))) < 1e-12

    def test_half_pi_gives_z(self):
        got = circuit_to_channel(build_pauli_circuit(PauliAngles(np.pi / 2, 0, 0)), [0])
        assert choi_distance(got, choi(pauli_channel(0, 0, 0, 1))) < 1e-12

    def test_eternal_family_end_to_end(self):
        probs = pauli_rates_to_probabilities(eternal_rate_family(1.0, 0.5), 1.0)
        angles = solve_pauli_angles(*probs)
        got = circuit_to_channel(build_pauli_circuit(angles), [0])
        assert choi_distance(got, choi(pauli_channel(*probs))) < 1e-9

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_random_channels_end_to_end(self, seed):
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.ones(4))
        angles = solve_pauli_angles(*probs)
        got = circuit_to_channel(build_pauli_circuit(angles), [0])
        assert choi_distance(got, choi(pauli_channel(*probs))) < 1e-9
