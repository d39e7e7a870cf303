import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from rydqudit.algebra import pauli_x
from rydqudit.compiler import (
    chain_generators,
    compile_cz,
    compile_cz_qutrit_single_rydberg,
    cz_additive_feasible,
    cz_phase_matrix,
    lie_closure_dimension,
    lower_to_two_rydberg_levels,
    minimize_pulse_count,
    sequence_to_unitary,
    solve_modular,
    transposition,
    verify_cz,
    verify_no_go_structure,
)
from rydqudit.exceptions import InvalidConfiguration, InvalidLevel, PulseBudgetExceeded, SequenceFormError
from rydqudit.models import CRPulse, GateSequence, PulseLibrary, QuditSpace, SingleQuditGate, VirtualPhase

from .factories import PulseLibraryEntryFactory, PulseScheduleFactory


class TestPhaseMatrix(SimpleTestCase):

    def test_qutrit_angles(self):
        phases = cz_phase_matrix(3)
        for j, m in ((1, 1), (2, 2), (1, 2), (2, 1)):
            self.assertAlmostEqual(phases(j, m), -2 * math.pi / 3)

    def test_indexed_from_one(self):
        with self.assertRaises(InvalidLevel):
            cz_phase_matrix(3)(0, 1)


class TestCompileCZ(SimpleTestCase):

    def test_qubit(self):
        seq = compile_cz(2)
        self.assertEqual(seq.pulse_count, 1)
        self.assertEqual(seq.pulses[0].targets, (1,))
        self.assertAlmostEqual(seq.pulses[0].theta, math.pi)

    def test_qutrit(self):
        seq = compile_cz(3)
        self.assertEqual(seq.pulse_count, 3)
        self.assertEqual(seq.tone_count, 4)

    def test_ququart_drops_trivial_angles(self):
        seq = compile_cz(4)
        self.assertEqual([pulse.targets for pulse in seq.pulses], [(1, 2), (1, 3), (2, 3)])
        self.assertAlmostEqual(seq.pulses[1].theta, -math.pi / 2)
        self.assertEqual(seq.tone_count, 6)
        self.assertLess(seq.tone_count, (4 - 1) ** 2)

    def test_five_levels(self):
        seq = compile_cz(5)
        self.assertEqual(seq.pulse_count, 10)
        self.assertEqual(seq.tone_count, 16)

    def test_composes_to_cz(self):
        for d in range(2, 7):
            ok, deviation = verify_cz(compile_cz(d))
            self.assertTrue(ok, f'd={d} deviates by {deviation}')

    def test_qutrit_with_one_rydberg_level(self):
        seq = compile_cz_qutrit_single_rydberg()
        self.assertEqual({pulse.targets for pulse in seq.pulses}, {(2,)})
        self.assertTrue(verify_cz(seq)[0])

    def test_dimension_of_the_evaluation_space(self):
        with self.assertRaises(SequenceFormError):
            sequence_to_unitary(compile_cz(3), QuditSpace(4))


class TestModularSolver(SimpleTestCase):

    def test_exact_solution(self):
        matrix = [[1, 1], [1, 0], [2, 1]]
        b = [Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)]
        x = solve_modular(matrix, b)
        for row, target in zip(matrix, b):
            self.assertEqual((sum(a * value for a, value in zip(row, x)) - target).denominator, 1)

    def test_inconsistent_system(self):
        self.assertIsNone(solve_modular([[1], [1]], [Fraction(0), Fraction(1, 2)]))

    def test_additive_phases_exist_only_below_four_levels(self):
        self.assertEqual([cz_additive_feasible(d) for d in range(2, 7)], [True, True, False, False, False])


class TestMinimizePulseCount(SimpleTestCase):

    def test_two_tones_for_four_levels(self):
        seq = minimize_pulse_count(4, 2)
        self.assertEqual(seq.pulse_count, 3)
        self.assertTrue(all(pulse.n_tones <= 2 for pulse in seq.pulses))
        self.assertTrue(verify_cz(seq)[0])

    def test_never_worse_than_the_direct_compilation(self):
        seq = minimize_pulse_count(5, 3)
        self.assertEqual(seq.pulse_count, 7)
        self.assertLessEqual(seq.pulse_count, compile_cz(5).pulse_count)
        self.assertTrue(verify_cz(seq)[0])

    def test_budget(self):
        with self.assertRaises(PulseBudgetExceeded):
            minimize_pulse_count(5, 2, max_pulses=3)

    def test_tone_limit_range(self):
        with self.assertRaises(InvalidConfiguration):
            minimize_pulse_count(4, 4)
        with self.assertRaises(InvalidConfiguration):
            minimize_pulse_count(4, 0)


class TestLowering(SimpleTestCase):

    def test_transposition(self):
        p = np.asarray(transposition(4, 2).entries)
        self.assertEqual(p[3, 2], 1)
        self.assertEqual(p[2, 3], 1)
        with self.assertRaises(InvalidLevel):
            transposition(3, 2)

    def test_routes_onto_coupled_levels(self):
        lowered = lower_to_two_rydberg_levels(compile_cz(4), coupled=(1, 2))
        self.assertTrue(all(set(pulse.targets) <= {1, 2} for pulse in lowered.pulses))
        self.assertEqual(lowered.pulse_count, 3)
        self.assertTrue(verify_cz(lowered)[0])

    def test_single_transposition_for_one_displaced_level(self):
        seq = GateSequence(4, (CRPulse((1, 3), 0.4),))
        lowered = lower_to_two_rydberg_levels(seq, coupled=(1, 2))
        labels = [step.label for step in lowered.steps if isinstance(step, SingleQuditGate)]
        self.assertEqual(labels, ['P_23', 'P_23'])

    def test_library_phases_are_undone(self):
        library = PulseLibrary((
            PulseLibraryEntryFactory(targets=(1, 2), theta=math.pi, d=4,
                                     schedule=PulseScheduleFactory(chi=((1, 0.2), (2, -0.3)))),
            PulseLibraryEntryFactory(targets=(1, 2), theta=-math.pi / 2, d=4,
                                     schedule=PulseScheduleFactory(chi=((1, 0.1),))),
        ))
        lowered = lower_to_two_rydberg_levels(compile_cz(4), coupled=(1, 2), library=library)
        self.assertEqual(sum(isinstance(step, VirtualPhase) for step in lowered.steps), 5)
        self.assertTrue(verify_cz(lowered)[0])

    def test_too_many_targets(self):
        with self.assertRaises(SequenceFormError):
            lower_to_two_rydberg_levels(GateSequence(4, (CRPulse((1, 2, 3), 1.0),)))


class TestNoGo(SimpleTestCase):

    def test_single_rydberg_qutrit_cz_is_additive(self):
        verdict = verify_no_go_structure(compile_cz_qutrit_single_rydberg())
        self.assertTrue(verdict.applicable)
        self.assertTrue(verdict.additive)
        self.assertLess(verdict.residual, 1e-9)

    def test_non_diagonal_sequence_is_not_applicable(self):
        seq = GateSequence(3, (SingleQuditGate(pauli_x(3)), CRPulse((1,), 0.3)))
        self.assertFalse(verify_no_go_structure(seq).applicable)

    def test_two_level_pulses_are_refused(self):
        with self.assertRaises(SequenceFormError):
            verify_no_go_structure(compile_cz(4))

    def test_two_rydberg_levels_are_refused(self):
        seq = GateSequence(3, (CRPulse((1,), 0.3), CRPulse((2,), 0.5)))
        with self.assertRaises(SequenceFormError):
            verify_no_go_structure(seq)


class TestControllability(SimpleTestCase):

    def test_chain_generates_su_d(self):
        for d in (2, 3, 4):
            self.assertEqual(lie_closure_dimension(chain_generators(d)), d * d - 1)

    def test_commuting_generators(self):
        generators = [np.diag([1.0, -1.0, 0.0]), np.diag([0.0, 1.0, -1.0])]
        self.assertEqual(lie_closure_dimension(generators), 2)
