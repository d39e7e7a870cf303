import math

import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import expm
from testfixtures import LogCapture

from rydqudit.dynamics import average_rydberg_population, evolve_state, propagate
from rydqudit.exceptions import DimensionMismatch, GridTooCoarse, NonFiniteControls
from rydqudit.hamiltonian import chain_tones, control_basis, projectors, two_atom_control_basis
from rydqudit.models import LevelScheme, QuditSpace, StateVector, TimeGrid, TwoAtomConfig


class TestPropagate(SimpleTestCase):

    def test_resonant_pi_pulse_flips_a_qubit(self):
        basis = control_basis([(0, 1)])
        grid = TimeGrid(math.pi, 200)
        controls = np.vstack([np.full(200, 0.5), np.zeros(200)])
        record = propagate(controls, basis, grid)
        self.assertAlmostEqual(abs(record.final[1, 0]), 1.0, places=10)

    def test_slices_match_matrix_exponential(self):
        basis = control_basis(chain_tones(3))
        grid = TimeGrid(1.0, 5)
        controls = np.random.default_rng(3).uniform(-0.5, 0.5, (4, 5))
        record = propagate(controls, basis, grid)
        expected = np.eye(3)
        for h in basis.hamiltonians(controls, grid.midpoints):
            expected = expm(-1j * grid.dt * h) @ expected
        np.testing.assert_allclose(record.final, expected, atol=1e-12)
        self.assertEqual(record.projected.shape, (3, 3))

    def test_midpoint_slicing_is_second_order(self):
        basis = control_basis(chain_tones(3))

        def final(n):
            grid = TimeGrid(2.0, n)
            t = grid.midpoints
            controls = np.vstack([0.4 * np.sin(math.pi * t / 2), 0.1 * t, 0.3 * np.cos(t), -0.1 * t ** 2])
            return propagate(controls, basis, grid).final

        reference = final(6400)
        errors = [np.linalg.norm(final(n) - reference) for n in (50, 100, 200)]
        self.assertAlmostEqual(errors[0] / errors[1], 4.0, delta=0.2)
        self.assertAlmostEqual(errors[1] / errors[2], 4.0, delta=0.2)

    def test_coarse_grid_is_refused(self):
        basis = control_basis([(0, 1)])
        with self.assertRaises(GridTooCoarse):
            propagate(np.array([[10.0], [0.0]]), basis, TimeGrid(1.0, 1))

    def test_static_blockade_does_not_count_against_the_grid(self):
        config = TwoAtomConfig(LevelScheme(2, (1,)), blockade_V=1000.0)
        basis = two_atom_control_basis(config, [(1, 'r')])
        record = propagate(np.zeros((2, 10)), basis, TimeGrid(1.0, 10))
        self.assertAlmostEqual(abs(record.final[0, 0]), 1.0)

    def test_non_finite_controls(self):
        controls = np.array([[0.1, math.nan], [0.0, 0.0]])
        with self.assertRaises(NonFiniteControls):
            propagate(controls, control_basis([(0, 1)]), TimeGrid(1.0, 2))

    def test_control_shape(self):
        with self.assertRaises(DimensionMismatch):
            propagate(np.zeros((3, 2)), control_basis([(0, 1)]), TimeGrid(1.0, 2))

    def test_logs_slice_phase(self):
        with LogCapture(names='rydqudit.dynamics') as capture:
            propagate(np.zeros((2, 4)), control_basis([(0, 1)]), TimeGrid(1.0, 4))
        self.assertTrue(capture.records[0].getMessage().startswith('dynamics.propagate dim=2 slices=4'))


class TestEvolveState(SimpleTestCase):

    def test_constant_hamiltonian(self):
        h = np.array([[0.0, 0.3], [0.3, 0.5]])
        trajectory = evolve_state(StateVector.basis(2, 0), h, TimeGrid(2.0, 8))
        expected = expm(-2j * h) @ np.array([1, 0])
        np.testing.assert_allclose(trajectory.final.amplitudes, expected, atol=1e-12)
        self.assertEqual(trajectory.states.shape, (9, 2))
        self.assertEqual(trajectory.times[-1], 2.0)

    def test_callable_hamiltonian_is_sampled_at_midpoints(self):
        grid = TimeGrid(1.0, 4)
        seen = []

        def h(t):
            seen.append(t)
            return np.zeros((2, 2))

        evolve_state(StateVector.basis(2, 1), h, grid)
        np.testing.assert_allclose(seen, grid.midpoints)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            evolve_state(StateVector.basis(3, 0), np.zeros((2, 2)), TimeGrid(1.0, 2))


class TestRydbergPopulation(SimpleTestCase):

    def test_constant_drive_on_a_qubit(self):
        scheme = LevelScheme(2, (1,))
        basis = two_atom_control_basis(TwoAtomConfig(scheme), [(1, 'r')])
        n = 2000
        grid = TimeGrid(2 * math.pi, n)
        record = propagate(np.vstack([np.full(n, 0.5), np.zeros(n)]), basis, grid)
        population = average_rydberg_population(record, projectors(scheme, True), QuditSpace(2))
        # |01> and |10> average 1/2 over a full Rabi cycle; |11> oscillates at sqrt(2) Omega
        doubly = 0.5 - math.sin(2 * math.sqrt(2) * math.pi) / (4 * math.sqrt(2) * math.pi)
        self.assertAlmostEqual(population, (0.5 + 0.5 + doubly) / 4, places=5)

    def test_second_tone_with_the_same_shape(self):
        # one tone on a qutrit excites four single-atom states and |11>; two tones add |12>, |21>, |22>
        scheme = LevelScheme(3, (1, 2))
        n = 2000
        grid = TimeGrid(2 * math.pi, n)
        drive = np.vstack([np.full(n, 0.5), np.zeros(n)])
        chi = []
        for tones, controls in (([(1, 'r')], drive), ([(1, 'r'), (2, 'r')], np.vstack([drive, drive]))):
            record = propagate(controls, two_atom_control_basis(TwoAtomConfig(scheme), tones), grid)
            chi.append(average_rydberg_population(record, projectors(scheme, True), QuditSpace(3)))
        single = 0.5
        pair = 0.5 - math.sin(2 * math.sqrt(2) * math.pi) / (4 * math.sqrt(2) * math.pi)
        self.assertAlmostEqual(chi[0], (4 * single + pair) / 9, places=5)
        self.assertAlmostEqual(chi[1], (4 * single + 4 * pair) / 9, places=5)

    def test_projector_shape_is_checked(self):
        scheme = LevelScheme(2, (1,))
        basis = two_atom_control_basis(TwoAtomConfig(scheme), [(1, 'r')])
        record = propagate(np.zeros((2, 2)), basis, TimeGrid(1.0, 2))
        with self.assertRaises(DimensionMismatch):
            average_rydberg_population(record, projectors(scheme, False))
