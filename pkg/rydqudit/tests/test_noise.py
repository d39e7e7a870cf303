import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from rydqudit.algebra import cr
from rydqudit.compiler import compile_cz
from rydqudit.dynamics import average_rydberg_population
from rydqudit.exceptions import InvalidConfiguration, InvalidLevel, MissingPulse
from rydqudit.grape import OptimizerOptions, cr_problem, find_optimal_time
from rydqudit.hamiltonian import projectors
from rydqudit.models import (
    RYDBERG,
    CRPulse,
    GateSequence,
    LevelScheme,
    PulseLibrary,
    StateVector,
    TwoAtomConfig,
)
from rydqudit.noise import (
    benchmark_gate,
    benchmark_pulse,
    compile_sequence,
    cz_angles,
    library_entry,
    predict_cz_infidelity,
    pulse_fidelity,
    pulse_propagation,
    quantum_jump_trajectory,
    reoptimize_with_crosstalk,
    sample_shot,
    synthesize_cr_entry,
)
from rydqudit.signals import benchmark_finished
from rydqudit.utils import MHZ, MICROSECOND

from . import slow
from .factories import (
    NoiseModelFactory,
    PulseLibraryEntryFactory,
    PulseScheduleFactory,
    TimeGridFactory,
    TrajectoryConfigFactory,
)

# |1,0> for d = 2
ONE_ZERO = StateVector.basis(4, 2)


def two_pi_library():
    """A constant 2*pi Rabi cycle on 1 <-> r, filed as CR_1(pi)."""
    schedule = PulseScheduleFactory(
        grid=TimeGridFactory(T=2 * math.pi, N=400),
        envelopes=np.ones((1, 400), dtype=complex),
    )
    return PulseLibrary((PulseLibraryEntryFactory(schedule=schedule),))


def qubit_sequence():
    return GateSequence(2, (CRPulse((1,), math.pi),))


class TestSampleShot(SimpleTestCase):

    def test_noiseless_shot(self):
        detuning, scale = sample_shot(NoiseModelFactory(), np.random.default_rng(0))
        self.assertEqual(detuning, 0.0)
        self.assertEqual(scale, 1.0)

    def test_always_draws_twice(self):
        rng, reference = np.random.default_rng(5), np.random.default_rng(5)
        sample_shot(NoiseModelFactory(detuning_sigma=3.0, intensity_rel_var=0.1), rng)
        reference.standard_normal(2)
        self.assertEqual(rng.uniform(), reference.uniform())

    def test_shot_moments(self):
        model = NoiseModelFactory(detuning_sigma=2.0, intensity_rel_var=0.04)
        rng = np.random.default_rng(11)
        shots = np.array([sample_shot(model, rng) for _ in range(20000)])
        detuning, intensity = shots[:, 0], shots[:, 1] ** 2
        # three standard errors of each estimator
        self.assertAlmostEqual(detuning.mean(), 0.0, delta=0.045)
        self.assertAlmostEqual(detuning.std(), 2.0, delta=0.032)
        self.assertAlmostEqual(intensity.mean(), 1.0, delta=0.0045)
        self.assertAlmostEqual(intensity.var(), 0.04, delta=0.0013)

    def test_scale_never_goes_imaginary(self):
        model = NoiseModelFactory(intensity_rel_var=100.0)
        rng = np.random.default_rng(1)
        self.assertTrue(all(sample_shot(model, rng)[1] >= 0 for _ in range(50)))


class TestCompileSequence(SimpleTestCase):

    def test_scheme_covers_pulse_levels(self):
        compiled = compile_sequence(qubit_sequence(), NoiseModelFactory(), two_pi_library())
        self.assertEqual(compiled.scheme, LevelScheme(2, (1,)))
        self.assertEqual(compiled.dim, 8)
        self.assertEqual(compiled.n_pulses, 1)

    def test_decay_target_must_be_a_qudit_level(self):
        with self.assertRaises(InvalidLevel):
            compile_sequence(qubit_sequence(), NoiseModelFactory(decay_target=2), two_pi_library())

    def test_missing_pulse(self):
        seq = GateSequence(2, (CRPulse((1,), 0.5),))
        with self.assertRaises(MissingPulse):
            compile_sequence(seq, NoiseModelFactory(), two_pi_library())

    def test_refines_long_slices(self):
        compiled = compile_sequence(qubit_sequence(), NoiseModelFactory(), two_pi_library(), dt=0.005)
        self.assertEqual(compiled.pulses[0].grid.N, 1600)

    def test_initial_state_dimension(self):
        with self.assertRaises(InvalidConfiguration):
            benchmark_gate(qubit_sequence(), NoiseModelFactory(), TrajectoryConfigFactory(), two_pi_library(),
                           initial=StateVector.basis(9, 0))


class TestTrajectory(SimpleTestCase):

    def test_noiseless_cycle_returns_with_a_sign(self):
        compiled = compile_sequence(qubit_sequence(), NoiseModelFactory(), two_pi_library())
        final, jumps = quantum_jump_trajectory(
            compiled, NoiseModelFactory(), (0.0, 1.0), np.random.default_rng(0), ONE_ZERO
        )
        self.assertEqual(jumps, [])
        self.assertAlmostEqual(final.amplitudes[2], -1.0, places=8)

    def test_fast_decay_lands_in_the_ground_level(self):
        model = NoiseModelFactory(tau_ryd=0.1)
        compiled = compile_sequence(qubit_sequence(), model, two_pi_library())
        final, jumps = quantum_jump_trajectory(compiled, model, (0.0, 1.0), np.random.default_rng(2), ONE_ZERO)
        self.assertEqual(len(jumps), 1)
        self.assertEqual((jumps[0].pulse, jumps[0].atom, jumps[0].level), (0, 0, 1))
        self.assertLess(jumps[0].time, 2 * math.pi)
        self.assertAlmostEqual(abs(final.amplitudes[0]), 1.0, places=8)

    def test_idle_rydberg_population_decays_exponentially(self):
        # undriven, a singly excited state survives a time T with probability exp(-T / tau)
        schedule = PulseScheduleFactory(grid=TimeGridFactory(T=2 * math.pi, N=100))
        library = PulseLibrary((PulseLibraryEntryFactory(schedule=schedule),))
        model = NoiseModelFactory(tau_ryd=2 * math.pi)
        compiled = compile_sequence(qubit_sequence(), model, library)
        initial = StateVector.basis(compiled.dim, int(np.argmax(compiled.count == 1)))
        rng = np.random.default_rng(4)
        survived = 0
        for _ in range(2000):
            _, jumps = quantum_jump_trajectory(compiled, model, (0.0, 1.0), rng, initial)
            self.assertLessEqual(len(jumps), 1)
            survived += not jumps
        self.assertAlmostEqual(survived / 2000, math.exp(-1), delta=0.033)


class TestBenchmark(SimpleTestCase):

    def test_noiseless_rabi_cycle(self):
        sim = benchmark_gate(qubit_sequence(), NoiseModelFactory(), TrajectoryConfigFactory(), two_pi_library(),
                             initial=ONE_ZERO)
        self.assertAlmostEqual(sim.fidelity_mean, 1.0, places=10)
        self.assertEqual(sim.jump_histogram, {0: 50})
        self.assertEqual(sim.per_pulse[0]['mean_jumps'], 0.0)

    def test_decay_during_a_rabi_cycle(self):
        # Gamma T = 0.2 with half the time spent in the Rydberg state
        model = NoiseModelFactory(tau_ryd=10 * math.pi)
        config = TrajectoryConfigFactory(n_traj=2000, master_seed=3)
        sim = benchmark_gate(qubit_sequence(), model, config, two_pi_library(), initial=ONE_ZERO)
        self.assertGreater(sim.mean_jumps, 0.07)
        self.assertLess(sim.mean_jumps, 0.125)
        self.assertAlmostEqual(sim.fidelity_mean, 1 - sim.mean_jumps, delta=0.02)
        self.assertEqual(sim.n_traj, 2000)
        self.assertEqual(sum(sim.jump_histogram.values()), 2000)

    def test_detuning_noise_lowers_fidelity(self):
        model = NoiseModelFactory(detuning_sigma=0.5)
        sim = benchmark_gate(qubit_sequence(), model, TrajectoryConfigFactory(), two_pi_library(), initial=ONE_ZERO)
        self.assertLess(sim.fidelity_mean, 1.0)
        self.assertGreater(sim.fidelity_stderr, 0.0)

    def test_fidelity_falls_with_the_lifetime(self):
        config = TrajectoryConfigFactory(n_traj=500, master_seed=3)
        fidelities = [
            benchmark_gate(qubit_sequence(), NoiseModelFactory(tau_ryd=tau), config, two_pi_library(),
                           initial=ONE_ZERO).fidelity_mean
            for tau in (80 * math.pi, 20 * math.pi, 5 * math.pi)
        ]
        self.assertGreater(fidelities[0], fidelities[1])
        self.assertGreater(fidelities[1], fidelities[2])

    def test_crosstalk_is_resolved_like_the_gate_propagator(self):
        # delta * dt = 0.47 rad per slice, so each slice is split in five
        schedule = PulseScheduleFactory(
            tones=((1, RYDBERG), (2, RYDBERG)),
            grid=TimeGridFactory(T=2 * math.pi, N=40),
            envelopes=np.vstack([np.ones(40), np.zeros(40)]),
        )
        entry = PulseLibraryEntryFactory(schedule=schedule, d=3)
        model = NoiseModelFactory(crosstalk_delta=3.0)
        seq = GateSequence(3, (CRPulse((1,), math.pi),))
        self.assertEqual(compile_sequence(seq, model, PulseLibrary((entry,))).pulses[0].grid.N, 200)

        sim = benchmark_pulse(entry, model, TrajectoryConfigFactory(n_traj=2), d=3)
        record = pulse_propagation(entry, TwoAtomConfig(LevelScheme(3, (1, 2)), math.inf, 3.0))
        initial = np.asarray(StateVector.uniform(3).amplitudes)
        ideal = np.asarray(cr(3, (1,), math.pi).entries) @ initial
        expected = abs(np.vdot(ideal, record.projected @ initial)) ** 2
        self.assertAlmostEqual(sim.fidelity_mean, expected, places=8)

    def test_same_seed_same_result(self):
        model = NoiseModelFactory(tau_ryd=10 * math.pi, detuning_sigma=0.2)
        first = benchmark_gate(qubit_sequence(), model, TrajectoryConfigFactory(), two_pi_library())
        second = benchmark_gate(qubit_sequence(), model, TrajectoryConfigFactory(), two_pi_library())
        self.assertEqual(first.fidelity_mean, second.fidelity_mean)
        self.assertEqual(first.jump_histogram, second.jump_histogram)

    def test_independent_of_worker_count(self):
        model = NoiseModelFactory(tau_ryd=10 * math.pi, intensity_rel_var=0.05)
        config = TrajectoryConfigFactory(n_traj=40)
        serial = benchmark_gate(qubit_sequence(), model, config, two_pi_library(), initial=ONE_ZERO)
        parallel = benchmark_gate(qubit_sequence(), model, config, two_pi_library(), initial=ONE_ZERO, threads=2)
        self.assertEqual(serial.fidelity_mean, parallel.fidelity_mean)
        self.assertEqual(serial.jump_histogram, parallel.jump_histogram)

    def test_sends_benchmark_finished(self):
        received = []

        def receiver(sender, result, **kwargs):
            received.append(result)

        benchmark_finished.connect(receiver)
        try:
            sim = benchmark_gate(qubit_sequence(), NoiseModelFactory(), TrajectoryConfigFactory(n_traj=2),
                                 two_pi_library())
        finally:
            benchmark_finished.disconnect(receiver)
        self.assertEqual(received, [sim])


class TestScalingPrediction(SimpleTestCase):

    def setUp(self):
        library = PulseLibrary()
        for theta in cz_angles(4):
            library = library.add(PulseLibraryEntryFactory(theta=theta))
        self.library = library

    def test_angles_are_distinct(self):
        self.assertEqual(len(cz_angles(4)), 3)
        self.assertEqual(len(self.library), 3)

    def test_uniform_pulses_match_the_closed_form_up_to_qutrits(self):
        for d in (2, 3):
            prediction = predict_cz_infidelity(d, 1.0, 50.0, self.library)
            self.assertAlmostEqual(prediction.product_infidelity, prediction.closed_form_infidelity)

    def test_ququart_beats_the_closed_form(self):
        prediction = predict_cz_infidelity(4, 1.0, 50.0, self.library)
        self.assertEqual(prediction.weighted_count, 6)
        self.assertEqual(prediction.pulse_count, 3)
        self.assertLess(prediction.product_infidelity, prediction.closed_form_infidelity)
        self.assertAlmostEqual(prediction.mean_duration, 1.0)

    def test_no_decay(self):
        self.assertEqual(predict_cz_infidelity(3, 1.0, math.inf, self.library).product_infidelity, 0.0)

    def test_pulses_must_match_the_cap(self):
        with self.assertRaises(MissingPulse):
            predict_cz_infidelity(2, 2.0, 50.0, self.library)


class TestSynthesizedPulses(SimpleTestCase):

    @slow
    def test_qubit_cz_pulse(self):
        config = TwoAtomConfig(LevelScheme(2, (1,)))
        entry = synthesize_cr_entry((1,), math.pi, 1.0, 8.0, config=config, options=OptimizerOptions(n_starts=4))
        self.assertGreater(entry.fidelity, 0.999)
        self.assertGreater(entry.chi_ryd, 0.0)
        self.assertLess(entry.chi_ryd, 1.0)
        self.assertAlmostEqual(pulse_fidelity(entry, config), entry.fidelity, places=8)
        sim = benchmark_pulse(entry, NoiseModelFactory(), TrajectoryConfigFactory(n_traj=5), d=2)
        self.assertAlmostEqual(sim.fidelity_mean, 1.0, places=3)

    @slow
    def test_second_tone_nearly_doubles_the_rydberg_time(self):
        config = TwoAtomConfig(LevelScheme(3, (1, 2)))
        entry = synthesize_cr_entry((1,), math.pi, 1.0, 8.0, config=config, options=OptimizerOptions(n_starts=4))
        envelope = entry.schedule.envelopes[0]
        both = replace(entry.schedule, tones=((1, RYDBERG), (2, RYDBERG)), envelopes=np.vstack([envelope, envelope]))
        record = pulse_propagation(replace(entry, targets=(1, 2), schedule=both), config)
        chi = average_rydberg_population(record, projectors(config.scheme, True), config.scheme.space)
        self.assertGreaterEqual(chi / entry.chi_ryd, 1.8)
        self.assertLessEqual(chi / entry.chi_ryd, 2.2)

    @slow
    def test_crosstalk_reoptimisation_drives_both_tones(self):
        library = reoptimize_with_crosstalk(
            5.0, 50.0, [((1,), math.pi)], 1.0, [8.0], K=5,
            options=OptimizerOptions(n_starts=1, max_iter=50),
        )
        self.assertEqual(len(library), 1)
        entry = library.lookup((1,), math.pi)
        self.assertEqual(entry.schedule.tones, ((1, 'r'), (2, 'r')))
        self.assertIsNotNone(entry.schedule.fourier)
        self.assertTrue(0.0 <= entry.fidelity <= 1.0)


CAP = 5 * MHZ
REALISTIC_NOISE = {
    'tau_ryd': 60 * MICROSECOND,
    'detuning_sigma': 0.04 * MHZ,
    'intensity_rel_var': 0.008,
    'blockade_V': 220 * MHZ,
}
# the pulses of compile_cz(3)
QUTRIT_CZ_PULSES = (((1,), 2 * math.pi / 3), ((2,), 2 * math.pi / 3), ((1, 2), 4 * math.pi / 3))


def optimal_time_entry(targets, theta, config):
    def build(duration):
        return cr_problem(targets, theta, CAP, duration, scheme=config.scheme)

    scan = find_optimal_time(
        build, (math.pi / CAP, 12 * math.pi / CAP), options=OptimizerOptions(n_starts=4), threads=4
    )
    return library_entry(targets, theta, config, build(scan.t_opt), scan.best)


@slow
class TestRealisticConditions(SimpleTestCase):
    """Optimal-time qutrit pulses at Omega = 2 pi x 5 MHz, 2 x 10^4 trajectories."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = TwoAtomConfig(LevelScheme(3, (1, 2)))
        library = PulseLibrary()
        for targets, theta in QUTRIT_CZ_PULSES:
            library = library.add(optimal_time_entry(targets, theta, cls.config))
        cls.library = library
        cls.model = NoiseModelFactory(**REALISTIC_NOISE)
        cls.trajectories = TrajectoryConfigFactory(n_traj=20000, master_seed=0)
        cls.cz = benchmark_gate(compile_cz(3), cls.model, cls.trajectories, library, threads=4)

    def test_cz_fidelity(self):
        self.assertAlmostEqual(self.cz.fidelity_mean, 0.994, delta=0.004)
        self.assertLess(self.cz.fidelity_stderr, 0.001)

    def test_cr_fidelities(self):
        for (targets, theta), expected in zip(QUTRIT_CZ_PULSES, (0.998, 0.998, 0.997)):
            with self.subTest(targets=targets):
                entry = self.library.lookup(targets, theta)
                self.assertGreaterEqual(entry.fidelity, 1 - 1e-4)
                sim = benchmark_pulse(entry, self.model, self.trajectories, d=3, threads=4)
                self.assertAlmostEqual(sim.fidelity_mean, expected, delta=0.004)

    def test_decay_predictor_agrees_with_the_trajectories(self):
        qubit = TwoAtomConfig(LevelScheme(2, (1,)))
        library = PulseLibrary()
        for theta in cz_angles(3):
            library = library.add(optimal_time_entry((1,), theta, qubit))
        prediction = predict_cz_infidelity(3, CAP, REALISTIC_NOISE['tau_ryd'], library)
        ratio = prediction.product_infidelity / (1 - self.cz.fidelity_mean)
        self.assertGreater(ratio, 0.5)
        self.assertLess(ratio, 2.0)

    def test_crosstalk_reoptimisation(self):
        delta = 50 * MHZ
        crosstalk = TwoAtomConfig(self.config.scheme, REALISTIC_NOISE['blockade_V'], delta)
        durations = [1.25 * self.library.lookup(targets, theta).duration for targets, theta in QUTRIT_CZ_PULSES]
        library = reoptimize_with_crosstalk(
            delta, REALISTIC_NOISE['blockade_V'], QUTRIT_CZ_PULSES, CAP, durations,
            options=OptimizerOptions(n_starts=2, threads=2),
        )
        for targets, theta in QUTRIT_CZ_PULSES:
            with self.subTest(targets=targets):
                unmodified = pulse_fidelity(self.library.lookup(targets, theta), crosstalk)
                self.assertGreater(library.lookup(targets, theta).fidelity, unmodified)
        model = NoiseModelFactory(crosstalk_delta=delta, **REALISTIC_NOISE)
        sim = benchmark_gate(compile_cz(3), model, self.trajectories, library, threads=4)
        self.assertAlmostEqual(sim.fidelity_mean, 0.993, delta=0.005)
