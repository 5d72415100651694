import math
import warnings

import numpy as np
import pytest

from squeezedbath import (
    Generator,
    HilbertDim,
    NonUniqueSteadyState,
    NotUnitary,
    PositivityLoss,
    SlowDriveViolation,
    annihilation,
    apply,
    bose_occupation,
    coherent_state,
    conjugate_generator,
    constant_hamiltonian,
    evolve,
    harmonic_hamiltonian,
    linear_ramp_schedule,
    number_state,
    oscillator_schedule,
    relax_populations,
    required_cutoff,
    squeeze_operator,
    squeezed_generator,
    squeezed_mode_operator,
    squeezed_thermal_state,
    steady_state,
    superoperator,
    thermal_generator,
    thermal_populations,
    thermal_state,
    trace_distance,
    von_neumann_entropy,
    relative_entropy,
)


def matrix_units(n):
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            yield e


class TestBoseOccupation:
    def test_values(self):
        assert math.isclose(bose_occupation(0.3, 3.0), 1 / math.expm1(0.1),
                            rel_tol=1e-14)
        assert bose_occupation(1.0, 0.0) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            bose_occupation(0.0, 1.0)
        with pytest.raises(ValueError):
            bose_occupation(1.0, -0.1)


class TestThermalGenerator:
    def test_zero_occupation_single_channel(self):
        gen = thermal_generator(1.0, 2.0, nbar=0.0, dim=10)
        rates = sorted(j.rate_at(0.0) for j in gen.jumps)
        assert rates[-1] == 2.0
        assert sum(r > 0 for r in rates) == 1

    def test_detailed_balance_ratio(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.7, dim=10)
        down = up = None
        a_ref = annihilation(10).matrix
        for j in gen.jumps:
            if np.allclose(j.operator.matrix, a_ref):
                down = j.rate_at(0.0)
            else:
                up = j.rate_at(0.0)
        assert math.isclose(up / down, 0.7 / 1.7, rel_tol=1e-14)

    def test_annihilates_thermal_state(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.8, dim=40)
        residual = np.abs(apply(gen, thermal_state(0.8, 40))).max()
        assert residual < 1e-10

    def test_temperature_mode_matches_occupation(self):
        gen = thermal_generator(2.0, 1.0, dim=20, temperature=4.0)
        assert math.isclose(gen.nbar, bose_occupation(2.0, 4.0), rel_tol=1e-14)

    def test_driven_rates_follow_instantaneous_frequency(self):
        sched = linear_ramp_schedule(25.0, 20.0, 100.0, dim=20)
        gen = thermal_generator(sched, 1.0, dim=20, temperature=5.0)
        for t in (0.0, 50.0, 100.0):
            nb = bose_occupation(25.0 - 0.05 * t, 5.0)
            assert math.isclose(gen.occupation_at(t), nb, rel_tol=1e-12)
            rates = sorted(j.rate_at(t) for j in gen.jumps)
            assert math.isclose(rates[0] / rates[1], nb / (nb + 1),
                                rel_tol=1e-12)


class TestSqueezedGenerator:
    def test_zero_squeezing_matches_thermal(self):
        sq = squeezed_generator(1.0, 1.3, 0.6, 0.0, dim=12)
        th = thermal_generator(1.0, 1.3, nbar=0.6, dim=12)
        for basis in matrix_units(12):
            np.testing.assert_allclose(apply(sq, basis), apply(th, basis),
                                       atol=1e-12)

    def test_four_dissipator_form_agrees_on_complete_basis(self):
        # D(A,B) rho = 2 A rho B - B A rho - rho B A with coefficients
        # N+1, N, -M, -M on (a,a+), (a+,a), (a,a), (a+,a+)
        n_dim, nbar, r, kappa = 16, 0.5, 0.3, 1.3
        gen = squeezed_generator(1.0, kappa, nbar, r, dim=n_dim)
        a = annihilation(n_dim).matrix
        ad = a.conj().T
        big_n = nbar * (math.cosh(r) ** 2 + math.sinh(r) ** 2) + math.sinh(r) ** 2
        big_m = -math.cosh(r) * math.sinh(r) * (2 * nbar + 1)

        def dis(aa, bb, rho):
            return 2 * aa @ rho @ bb - bb @ aa @ rho - rho @ bb @ aa

        worst = 0.0
        for basis in matrix_units(n_dim):
            four = kappa * (
                (big_n + 1) * dis(a, ad, basis)
                + big_n * dis(ad, a, basis)
                - big_m * dis(a, a, basis)
                - big_m * dis(ad, ad, basis)
            )
            worst = max(worst, np.abs(apply(gen, basis) - four).max())
        assert worst < 1e-10

    def test_coefficients_at_fig3_parameters(self):
        r = 0.4
        big_n = math.sinh(r) ** 2
        big_m = -math.cosh(r) * math.sinh(r)
        assert math.isclose(big_n, 0.168717, abs_tol=5e-7)
        assert math.isclose(big_m, -0.444053, abs_tol=5e-7)

    def test_steady_state_is_squeezed_thermal(self):
        gen = squeezed_generator(1.0, 1.0, 0.5, 0.2, dim=60)
        ss = steady_state(gen)
        assert trace_distance(ss, squeezed_thermal_state(0.5, 0.2, 60)) < 1e-8

    def test_mode_operator_is_bogoliubov_combination(self):
        b = squeezed_mode_operator(0.3, 14).matrix
        a = annihilation(14).matrix
        expected = math.cosh(0.3) * a + math.sinh(0.3) * a.conj().T
        np.testing.assert_allclose(b, expected, atol=1e-14)


class TestApply:
    def test_trace_free_on_random_states(self):
        rng = np.random.default_rng(2)
        gen = squeezed_generator(1.0, 1.0, 0.4, 0.3, dim=15)
        for _ in range(5):
            m = rng.normal(size=(15, 15)) + 1j * rng.normal(size=(15, 15))
            m = m @ m.conj().T
            m /= m.trace()
            assert abs(np.trace(apply(gen, m))) < 1e-12

    def test_closed_system_reduces_to_commutator(self):
        h = harmonic_hamiltonian(2.0, 8)
        gen = Generator(HilbertDim(8), constant_hamiltonian(h), jumps=())
        rho = coherent_state(1.0, 8).matrix if False else None
        m = np.zeros((8, 8), dtype=complex)
        m[0, 1] = m[1, 0] = 0.5
        m[0, 0] = m[1, 1] = 0.5
        out = apply(gen, m)
        np.testing.assert_allclose(out, -1j * (h.matrix @ m - m @ h.matrix),
                                   atol=1e-14)

    def test_hermitian_flag_matches_general_path(self):
        gen = squeezed_generator(1.0, 1.0, 0.3, 0.25, dim=40)
        rho = squeezed_thermal_state(0.8, 0.1, 40).matrix
        np.testing.assert_allclose(apply(gen, rho, hermitian=True),
                                   apply(gen, rho), atol=1e-13)


class TestEvolve:
    def test_coherent_decay_stays_coherent(self):
        gen = thermal_generator(10.0, 1.0, nbar=0.0, dim=40)
        traj = evolve(gen, coherent_state(1.0, 40), 1.5)
        target = coherent_state(math.exp(-1.5), 40)
        assert trace_distance(traj.final_state, target) < 1e-8

    def test_steady_start_stays_put(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.5, dim=40)
        rho0 = thermal_state(0.5, 40)
        traj = evolve(gen, rho0, 2.0)
        assert trace_distance(traj.final_state, rho0) < 1e-10
        assert abs(traj.dissipated_cum[-1]) < 1e-10

    def test_long_time_limit_matches_null_space(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.6, dim=40)
        traj = evolve(gen, number_state(3, 40), 25.0)
        assert trace_distance(traj.final_state, steady_state(gen)) < 1e-8

    def test_trace_preserved_along_grid(self):
        gen = squeezed_generator(10.0, 1.0, 0.0, 0.4, dim=40)
        traj = evolve(gen, thermal_state(0.0, 40), 4.0)
        assert traj.trace_errors.max() < 1e-8
        assert np.all(np.diff(traj.times) > 0)

    def test_positivity_loss_raised_for_oversized_step(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.5, dim=12)
        with pytest.raises(PositivityLoss):
            evolve(gen, number_state(0, 12), 3.0, dt=1.5)

    def test_spohn_monotonicity_constant_hamiltonian(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.3, dim=40)
        ss = steady_state(gen)
        traj = evolve(gen, coherent_state(1.0, 40), 5.0)
        rel = [relative_entropy(s, ss) for s in traj.states]
        drops = np.diff(rel)
        assert np.all(drops <= 1e-9)

    def test_slow_drive_warning(self):
        sched = linear_ramp_schedule(25.0, 20.0, 5.0, dim=20)
        gen = thermal_generator(sched, 1.0, dim=20, temperature=5.0)
        rho0 = thermal_state(bose_occupation(25.0, 5.0), 20)
        with pytest.warns(SlowDriveViolation):
            evolve(gen, rho0, 5.0)

    def test_validation_errors(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.0, dim=10)
        with pytest.raises(ValueError):
            evolve(gen, number_state(0, 12), 1.0)
        with pytest.raises(ValueError):
            evolve(gen, number_state(0, 10), -1.0)
        with pytest.raises(ValueError):
            evolve(gen, number_state(0, 10), 1.0, dt=-0.1)


class TestSteadyState:
    def test_thermal_kernel(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.9, dim=40)
        ss = steady_state(gen)
        assert trace_distance(ss, thermal_state(0.9, 40)) < 1e-10

    def test_non_unique_kernel_raises(self):
        h = constant_hamiltonian(harmonic_hamiltonian(1.0, 6))
        gen = Generator(HilbertDim(6), h, jumps=())
        with pytest.raises(NonUniqueSteadyState):
            steady_state(gen)

    def test_residual_is_small(self):
        gen = squeezed_generator(1.0, 1.0, 0.3, 0.2, dim=50)
        ss = steady_state(gen)
        assert np.abs(apply(gen, ss)).max() < 1e-10


class TestSuperoperator:
    def test_matches_apply_on_basis(self):
        gen = squeezed_generator(1.0, 1.0, 0.4, 0.2, dim=8)
        sup = superoperator(gen)
        for basis in matrix_units(8):
            direct = apply(gen, basis)
            via = (sup @ basis.reshape(-1)).reshape(8, 8)
            np.testing.assert_allclose(via, direct, atol=1e-12)

    def test_sparse_agrees_with_dense(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.4, dim=9)
        dense = superoperator(gen)
        sparse = superoperator(gen, sparse=True).toarray()
        np.testing.assert_allclose(sparse, dense, atol=1e-14)


class TestConjugateGenerator:
    def test_identity_leaves_generator_alone(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.5, dim=12)
        ident = squeeze_operator(0.0, 12)
        conj = conjugate_generator(gen, ident)
        for j_old, j_new in zip(gen.jumps, conj.jumps):
            np.testing.assert_allclose(j_new.operator.matrix,
                                       j_old.operator.matrix, atol=1e-14)

    def test_rejects_non_unitary(self):
        gen = thermal_generator(1.0, 1.0, nbar=0.5, dim=12)
        bad = annihilation(12)
        with pytest.raises(NotUnitary):
            conjugate_generator(gen, bad)

    def test_superoperator_identity_on_complete_basis(self):
        # U+ (L_U rho) U == L~ (U+ rho U) for every basis element
        n_dim = 20
        gen = squeezed_generator(2.0, 1.0, 0.7, 0.3, dim=n_dim)
        u = squeeze_operator(0.3, n_dim)
        um = u.matrix
        conj = conjugate_generator(gen, u)
        worst = 0.0
        for basis in matrix_units(n_dim):
            left = um.conj().T @ apply(gen, basis) @ um
            right = apply(conj, um.conj().T @ basis @ um)
            worst = max(worst, np.abs(left - right).max())
        assert worst < 1e-10

    def test_unsqueezing_the_generator_makes_it_thermal(self):
        # well inside a large space the conjugated squeezed generator acts
        # like the plain damping generator at the same occupation
        n_dim = 120
        gen = squeezed_generator(1.0, 1.0, 0.8, 0.3, dim=n_dim)
        th = thermal_generator(1.0, 1.0, nbar=0.8, dim=n_dim)
        conj = conjugate_generator(gen, squeeze_operator(0.3, n_dim))
        worst = 0.0
        for nbar, r in ((0.5, 0.1), (0.2, 0.0), (1.0, 0.2)):
            rho = squeezed_thermal_state(nbar, r, n_dim).matrix
            worst = max(worst, np.abs(apply(conj, rho) - apply(th, rho)).max())
        assert worst < 1e-9


class TestSchedules:
    def test_linear_ramp_endpoints_and_slope(self):
        sched = linear_ramp_schedule(25.0, 20.0, 100.0, dim=6)
        assert math.isclose(sched.frequency(0.0), 25.0)
        assert math.isclose(sched.frequency(100.0), 20.0)
        assert math.isclose(sched.frequency_dot(50.0), -0.05)
        np.testing.assert_allclose(np.diag(sched.evaluate(40.0)).real,
                                   23.0 * np.arange(6))
        np.testing.assert_allclose(np.diag(sched.derivative(40.0)).real,
                                   -0.05 * np.arange(6))

    def test_constant_hamiltonian_flags(self):
        sched = constant_hamiltonian(harmonic_hamiltonian(2.0, 5))
        assert sched.is_constant
        np.testing.assert_allclose(sched.derivative(3.0), np.zeros((5, 5)))

    def test_oscillator_schedule_requires_positive_duration(self):
        with pytest.raises(ValueError):
            linear_ramp_schedule(25.0, 20.0, 0.0, dim=6)


class TestRelaxPopulations:
    def test_matches_full_integration(self):
        n_dim = 58
        p0 = thermal_populations(2.0, n_dim)
        gen = thermal_generator(1.0, 1.0, nbar=0.5, dim=n_dim)
        traj = evolve(gen, thermal_state(2.0, n_dim), 0.7, dt=2e-4)
        direct = np.diag(traj.final_state.matrix).real
        fast = relax_populations(p0, 0.5, 1.0, 0.7)
        assert np.abs(fast - direct).max() < 1e-10

    def test_fixed_point(self):
        p = thermal_populations(0.5, 40)
        out = relax_populations(p, 0.5, 1.0, 30.0)
        assert np.abs(out - p).max() < 1e-12

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            relax_populations(np.ones(10), 0.5, 1.0, 1.0)


class TestRequiredCutoff:
    def test_known_values(self):
        assert required_cutoff(2.0) == 58
        assert required_cutoff(0.0, 0.4) == 40

    def test_monotone(self):
        assert required_cutoff(1.0) <= required_cutoff(2.0)
        assert required_cutoff(0.5, 0.2) <= required_cutoff(0.5, 0.6)

    def test_sized_state_fits(self):
        n = required_cutoff(2.0)
        thermal_state(2.0, n)  # must not raise
