import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from rydqudit.algebra import hadamard, pauli_x
from rydqudit.exceptions import BracketError, DimensionMismatch, GridTooCoarse, InvalidConfiguration
from rydqudit.grape import (
    OptimizerOptions,
    cr_problem,
    cz_simultaneous_problem,
    fidelity,
    fidelity_and_gradient,
    find_optimal_time,
    fourier_controls,
    fourier_fidelity_and_gradient,
    optimize,
    phase_controls,
    phase_fidelity_and_gradient,
    single_qudit_problem,
    synthesize_cz_simultaneous_qutrit,
)
from rydqudit.models import FourierParams
from rydqudit.signals import pulse_optimized

from . import slow

QUICK = OptimizerOptions(max_iter=300, n_starts=2)


def central_difference(function, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for index in np.ndindex(x.shape):
        step = np.zeros_like(x)
        step[index] = eps
        grad[index] = (function(x + step) - function(x - step)) / (2 * eps)
    return grad


class TestGradients(SimpleTestCase):
    """Analytic gradients against central differences on 20 random controls each."""

    draws = 20

    def assertGradient(self, analytic, numeric):
        error = np.linalg.norm(np.ravel(analytic) - np.ravel(numeric)) / np.linalg.norm(numeric)
        self.assertLess(error, 1e-5)

    def test_slice_gradient(self):
        problem = single_qudit_problem(hadamard(3), 1.0, 2.0, parametrization='slice', n_slices=6)
        rng = np.random.default_rng(0)
        for _ in range(self.draws):
            u = rng.uniform(-0.3, 0.3, (4, 6))
            _, grad = fidelity_and_gradient(problem, u)
            self.assertGradient(grad, central_difference(lambda x: fidelity(problem, x), u))

    def test_phase_and_local_phase_gradients(self):
        problem = cr_problem((1,), math.pi, 1.0, 3.0, n_slices=30)
        rng = np.random.default_rng(1)
        for _ in range(self.draws):
            phases = rng.uniform(-math.pi, math.pi, (1, 30))
            chi = rng.uniform(-math.pi, math.pi, 1)
            _, grad, grad_chi = phase_fidelity_and_gradient(problem, phases, chi)
            numeric = central_difference(lambda x: phase_fidelity_and_gradient(problem, x, chi)[0], phases)
            self.assertGradient(grad, numeric)
            numeric_chi = central_difference(lambda x: phase_fidelity_and_gradient(problem, phases, x)[0], chi)
            self.assertGradient(grad_chi, numeric_chi)

    def test_fourier_gradient(self):
        problem = cz_simultaneous_problem(1.0, K=5, n_slices=150)

        def params(x):
            return FourierParams.from_flat(problem.omega0, problem.K, problem.n_controls, x)

        rng = np.random.default_rng(2)
        for _ in range(self.draws):
            flat = rng.normal(0.0, 0.3, 6 * 5)
            _, grad_a, grad_b = fourier_fidelity_and_gradient(problem, params(flat))
            numeric = central_difference(lambda x: fourier_fidelity_and_gradient(problem, params(x))[0], flat)
            self.assertGradient(np.concatenate([grad_a.ravel(), grad_b.ravel()]), numeric)

    def test_fourier_controls_respect_the_cap(self):
        problem = cz_simultaneous_problem(1.0, K=5, n_slices=150)
        flat = np.random.default_rng(3).normal(0.0, 5.0, 6 * 5)
        u = fourier_controls(problem, FourierParams.from_flat(problem.omega0, 5, 6, flat))
        amplitude = np.linalg.norm(u.reshape(3, 2, -1), axis=1)
        self.assertTrue(np.all(amplitude <= 0.5 + 1e-12))


class TestProblems(SimpleTestCase):

    def test_phase_controls_pin_the_amplitude(self):
        problem = single_qudit_problem(pauli_x(2), 2.0, 1.0, n_slices=10)
        u = phase_controls(problem, np.linspace(0, 3, 10)[None])
        np.testing.assert_allclose(np.hypot(u[0], u[1]), np.ones(10))

    def test_phase_shape(self):
        problem = single_qudit_problem(pauli_x(2), 2.0, 1.0, n_slices=10)
        with self.assertRaises(DimensionMismatch):
            phase_controls(problem, np.zeros((2, 10)))

    def test_cr_problem_defaults(self):
        problem = cr_problem((2, 1), 0.5, 1.0, 2.0)
        self.assertEqual(problem.d, 3)
        self.assertEqual(problem.free_phases, (1, 2))
        self.assertEqual(problem.basis.tones, ((1, 'r'), (2, 'r')))
        self.assertEqual(problem.basis.dim, 9 + 2 * 3 * 2)

    def test_fourier_grid_too_coarse(self):
        with self.assertRaises(GridTooCoarse):
            cz_simultaneous_problem(1.0, n_slices=20)

    def test_unsaturated_fourier_is_refused(self):
        problem = replace(cz_simultaneous_problem(1.0, K=5, n_slices=150), saturate=False)
        with self.assertRaises(InvalidConfiguration):
            optimize(problem, options=QUICK)


class TestOptimize(SimpleTestCase):

    def test_pi_pulse_from_init_is_already_optimal(self):
        problem = single_qudit_problem(pauli_x(2), 1.0, math.pi)
        result = optimize(problem, init=np.zeros((1, problem.grid.N)), options=QUICK)
        self.assertAlmostEqual(result.fidelity, 1.0, places=10)
        np.testing.assert_allclose(result.pulse.amplitude_fraction(), 1.0)

    def test_reaches_x_with_time_to_spare(self):
        problem = single_qudit_problem(pauli_x(2), 1.0, 1.5 * math.pi)
        result = optimize(problem, seed=4, options=QUICK)
        self.assertGreater(result.fidelity, 0.999)
        self.assertEqual(result.seed, 4)

    def test_cannot_beat_the_speed_limit(self):
        problem = single_qudit_problem(pauli_x(2), 1.0, 0.5 * math.pi)
        self.assertLessEqual(optimize(problem, options=QUICK).fidelity, 0.5 + 1e-9)

    def test_fidelity_history_never_decreases(self):
        problems = (
            single_qudit_problem(hadamard(3), 1.0, 3.0, parametrization='slice', n_slices=30),
            single_qudit_problem(hadamard(3), 1.0, 3.0),
            cr_problem((1,), math.pi, 1.0, 8.0, n_slices=80),
            cz_simultaneous_problem(1.0, K=5, n_slices=150),
        )
        for problem in problems:
            with self.subTest(problem=problem.label, parametrization=problem.parametrization):
                result = optimize(problem, seed=1, options=OptimizerOptions(max_iter=100, n_starts=1))
                history = np.array(result.history)
                self.assertGreater(len(history), 1)
                self.assertTrue(np.all(np.diff(history) >= -1e-12))

    def test_reproducible_across_threads(self):
        problem = single_qudit_problem(pauli_x(2), 1.0, 1.2 * math.pi, n_slices=60)
        serial = optimize(problem, seed=9, options=QUICK)
        threaded = optimize(problem, seed=9, options=replace(QUICK, threads=2))
        self.assertEqual(serial.fidelity, threaded.fidelity)
        self.assertEqual(serial.start, threaded.start)
        np.testing.assert_array_equal(serial.controls, threaded.controls)

    def test_sends_pulse_optimized(self):
        received = []

        def receiver(sender, problem, result, **kwargs):
            received.append(result)

        pulse_optimized.connect(receiver)
        try:
            problem = single_qudit_problem(pauli_x(2), 1.0, math.pi, n_slices=200)
            result = optimize(problem, init=np.zeros((1, 200)), options=QUICK)
        finally:
            pulse_optimized.disconnect(receiver)
        self.assertEqual(received, [result])


class TestFindOptimalTime(SimpleTestCase):

    def build(self, duration):
        return single_qudit_problem(pauli_x(2), 1.0, duration)

    def test_qubit_x_takes_one_pi_pulse(self):
        scan = find_optimal_time(self.build, (0.5 * math.pi, 1.5 * math.pi), threshold=0.9999, points=12,
                                 options=QUICK)
        self.assertGreater(scan.t_opt, 0.98 * math.pi)
        self.assertLess(scan.t_opt, 1.02 * math.pi)
        self.assertEqual(len(scan.times), 22)
        self.assertTrue(np.all(np.diff(scan.times) > 0))
        self.assertGreaterEqual(scan.best.fidelity, 0.9999)

    def test_threshold_never_reached(self):
        with self.assertRaises(BracketError):
            find_optimal_time(self.build, (0.1 * math.pi, 0.3 * math.pi), threshold=0.9999, points=3,
                              options=QUICK)

    def test_invalid_bracket(self):
        with self.assertRaises(BracketError):
            find_optimal_time(self.build, (2.0, 1.0))

    @slow
    def test_qutrit_x_takes_one_and_a_half_pi_pulses(self):
        def build(duration):
            return single_qudit_problem(pauli_x(3), 1.0, duration)

        scan = find_optimal_time(build, (0.75 * math.pi, 2.5 * math.pi), threads=4)
        self.assertAlmostEqual(scan.t_opt / (1.5 * math.pi), 1.0, delta=0.03)
        self.assertGreaterEqual(scan.best.fidelity, 0.999)

    @slow
    def test_qutrit_hadamard_and_cr_converge_with_phase_control(self):
        builders = (
            lambda duration: single_qudit_problem(hadamard(3), 1.0, duration),
            lambda duration: cr_problem((2,), 4 * math.pi / 3, 1.0, duration, d=3),
        )
        for build in builders:
            scan = find_optimal_time(build, (0.5 * math.pi, 12 * math.pi), threshold=0.999, threads=4)
            with self.subTest(problem=scan.best.label):
                self.assertEqual(build(scan.t_opt).parametrization, 'phase')
                self.assertGreaterEqual(scan.best.fidelity, 0.999)
                self.assertLess(scan.t_opt, 12 * math.pi)


class TestSimultaneousQutritCZ(SimpleTestCase):

    @slow
    def test_one_shot_cz(self):
        result = synthesize_cz_simultaneous_qutrit(1.0, seed=0, options=OptimizerOptions(n_starts=4))
        self.assertGreater(result.fidelity, 0.999)
        self.assertIsNotNone(result.pulse.fourier)
