"""
Quantum-jump benchmarking of gate sequences.

Each trajectory draws one shot (a common-mode Rydberg detuning and an
intensity scale for the Rydberg tones), then evolves the unnormalised state
under ``H_eff = H - (i/2) Gamma n_ryd`` slice by slice.  A jump fires when
the squared norm drops below a threshold drawn in advance; the decaying atom
and Rydberg level are chosen in proportion to ``||c psi||^2`` and the state
is renormalised.

Trajectory ``k`` depends on ``(master_seed, k)`` only, so the set of
per-trajectory results is the same whichever way the work is split.
"""
import bisect
import collections
import concurrent.futures
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algebra import cr, local_phases
from .compiler import compile_cz, sequence_to_unitary
from .conf import get_setting
from .dynamics import average_rydberg_population, propagate, spectral_propagators
from .exceptions import InvalidConfiguration, InvalidLevel, NormUnderflow
from .grape import OptimizerOptions, cr_problem, optimize
from .hamiltonian import projectors, two_atom_control_basis, two_atom_space
from .models import (
    RYDBERG,
    CRPulse,
    GateSequence,
    JumpRecord,
    LevelScheme,
    PulseLibrary,
    PulseLibraryEntry,
    ScalingPrediction,
    SimResult,
    SingleQuditGate,
    StateVector,
    TimeGrid,
    TrajectoryResult,
    TwoAtomConfig,
    VirtualPhase,
)
from .signals import benchmark_finished
from .utils import angles_equal, trajectory_rng

logger = logging.getLogger('rydqudit.noise')


def sample_shot(model, rng):
    """
    ``(detuning, amplitude_scale)`` for one shot: ``detuning ~ N(0, sigma)`` and
    ``amplitude_scale = sqrt(max(0, N(1, intensity_rel_var)))``.  Always
    consumes two normal draws so later draws do not depend on the model.
    """
    z = rng.standard_normal(2)
    detuning = model.detuning_sigma * float(z[0])
    scale = math.sqrt(max(0.0, 1.0 + math.sqrt(model.intensity_rel_var) * float(z[1])))
    return detuning, scale


# ---------------------------------------------------------------------------
# Sequence realisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _LocalStep:

    unitary: np.ndarray


@dataclass(frozen=True, eq=False)
class _PulseStep:

    index: int
    label: str
    basis: object
    controls: np.ndarray
    grid: TimeGrid
    rydberg_mask: np.ndarray
    correction: Optional[np.ndarray]


def _sequence_scheme(seq, library):
    levels = set()
    for pulse in seq.pulses:
        levels.update(pulse.targets)
        entry = library.for_pulse(pulse)
        levels.update(lower for lower, upper in entry.schedule.tones if upper == RYDBERG)
    return LevelScheme(seq.d, tuple(sorted(levels)))


def _refined_for(schedule, delta):
    """The schedule on slices short enough to follow the crosstalk rotation ``exp(i delta t)``."""
    grid, controls = schedule.grid, schedule.controls()
    if delta:
        limit = get_setting('CROSSTALK_SLICE_PHASE')
        factor = math.ceil(abs(delta) * grid.dt / limit)
        if factor > 1:
            grid, controls = grid.refined(factor), np.repeat(controls, factor, axis=1)
    return grid, controls


class CompiledSequence:
    """
    A gate sequence with every CR pulse replaced by its library schedule on
    the common two-atom evolution space.  Single-qudit and virtual steps are
    ideal.
    """

    def __init__(self, seq, model, library, dt=None):
        if not 0 <= model.decay_target < seq.d:
            raise InvalidLevel(f'decay target {model.decay_target} is outside 0..{seq.d - 1}')
        self.d = seq.d
        self.scheme = _sequence_scheme(seq, library)
        self.config = TwoAtomConfig(self.scheme, model.blockade_V, model.crosstalk_delta)
        self.space = two_atom_space(self.scheme, not self.config.perfect_blockade)
        self.count = np.asarray(self.space.rydberg_count)
        self.decay_rate = model.decay_rate
        self.shot_noise = model.detuning_sigma > 0 or model.intensity_rel_var > 0
        self.steps = []
        self.pulses = []
        for step in seq.steps:
            if isinstance(step, CRPulse):
                pulse = self._pulse_step(step, library.for_pulse(step), dt)
                self.steps.append(pulse)
                self.pulses.append(pulse)
            else:
                self.steps.append(_LocalStep(self._local(step)))
        self.channels = self._channels(model.decay_target)
        self._cache = {}

    @property
    def dim(self):
        return self.space.dim

    @property
    def n_pulses(self):
        return len(self.pulses)

    def _extend(self, u):
        extended = np.eye(self.scheme.dim, dtype=complex)
        extended[:self.d, :self.d] = u
        return self.space.embed_local(extended)

    def _local(self, step):
        if isinstance(step, SingleQuditGate):
            return self._extend(np.asarray(step.gate.entries))
        if isinstance(step, VirtualPhase):
            chi = {step.level: step.theta}
            return self._extend(np.asarray(local_phases(self.d, chi).entries))
        raise InvalidConfiguration(f'cannot realise step {step!r}')

    def _pulse_step(self, step, entry, dt):
        schedule = entry.schedule
        basis = two_atom_control_basis(self.config, schedule.tones)
        grid, controls = _refined_for(schedule, self.config.crosstalk_delta)
        if dt is not None and grid.dt > dt:
            factor = math.ceil(grid.dt / dt)
            grid, controls = grid.refined(factor), np.repeat(controls, factor, axis=1)
        mask = np.repeat([upper == RYDBERG for _, upper in schedule.tones], 2)
        # the step asks for L(chi_step); the pulse delivers L(chi_entry)
        wanted, delivered = dict(step.chi), dict(entry.chi)
        shift = {level: wanted.get(level, 0.0) - delivered.get(level, 0.0) for level in set(wanted) | set(delivered)}
        correction = None
        if any(abs(value) > 0 for value in shift.values()):
            correction = self._extend(np.asarray(local_phases(self.d, shift).entries))
        return _PulseStep(
            index=len(self.pulses),
            label=step.label,
            basis=basis,
            controls=controls,
            grid=grid,
            rydberg_mask=mask,
            correction=correction,
        )

    def _channels(self, target):
        channels = []
        for atom in (0, 1):
            for level in self.scheme.couplings:
                flip = np.zeros((self.scheme.dim, self.scheme.dim))
                flip[target, self.scheme.rydberg_index(level)] = 1
                channels.append((atom, level, self.space.embed_on_atom(flip, atom)))
        return channels

    def propagators(self, step, detuning, scale):
        """Slice propagators and the half-step decay factor for one shot."""
        key = (step.index, detuning, scale)
        if key in self._cache:
            return self._cache[key]
        controls = step.controls * np.where(step.rydberg_mask, scale, 1.0)[:, None]
        hamiltonians = step.basis.hamiltonians(controls, step.grid.midpoints) + np.diag(detuning * self.count)
        slices, _, _ = spectral_propagators(hamiltonians, step.grid.dt)
        half_decay = np.exp(-self.decay_rate * self.count * step.grid.dt / 4)
        value = (slices, half_decay)
        if not self.shot_noise:
            self._cache[key] = value
        return value

    def embed(self, state):
        amplitudes = np.asarray(state.amplitudes, dtype=complex)
        if amplitudes.shape[0] == self.dim:
            return amplitudes.copy()
        if amplitudes.shape[0] != self.d ** 2:
            raise InvalidConfiguration(f'initial state of dimension {amplitudes.shape[0]} for d={self.d}')
        full = np.zeros(self.dim, dtype=complex)
        full[:self.d ** 2] = amplitudes
        return full


def compile_sequence(seq, model, library, dt=None):
    return CompiledSequence(seq, model, library, dt)


def _jump(psi, compiled, rng):
    weights = []
    candidates = []
    for atom, level, channel in compiled.channels:
        out = channel @ psi
        weights.append(float(np.vdot(out, out).real))
        candidates.append((atom, level, out))
    total = math.fsum(weights)
    if not total > 1e-300:
        raise NormUnderflow('the state decayed without population in any Rydberg level; reduce dt')
    pick = bisect.bisect_right(np.cumsum(weights), rng.uniform() * total)
    atom, level, out = candidates[min(pick, len(candidates) - 1)]
    return atom, level, out / math.sqrt(weights[min(pick, len(candidates) - 1)])


def quantum_jump_trajectory(compiled, model, shot, rng, initial):
    """
    Evolve ``initial`` through the compiled sequence for one shot
    ``(detuning, amplitude_scale)`` and return the normalised final state and
    the jumps that happened.
    """
    detuning, scale = shot
    psi = compiled.embed(initial)
    psi = psi / np.linalg.norm(psi)
    decays = compiled.decay_rate > 0
    threshold = rng.uniform()
    jumps = []
    for step in compiled.steps:
        if isinstance(step, _LocalStep):
            psi = step.unitary @ psi
            continue
        slices, half_decay = compiled.propagators(step, detuning, scale)
        for r in range(step.grid.N):
            psi = half_decay * (slices[r] @ (half_decay * psi))
            if not decays:
                continue
            norm2 = float(np.vdot(psi, psi).real)
            if norm2 < 1e-300:
                raise NormUnderflow(f'state norm underflow in {step.label} at slice {r}')
            if norm2 <= threshold:
                atom, level, psi = _jump(psi, compiled, rng)
                jumps.append(JumpRecord(step.index, (r + 1) * step.grid.dt, atom, level))
                threshold = rng.uniform()
        if step.correction is not None:
            psi = step.correction @ psi
    norm = np.linalg.norm(psi)
    if not norm > 0:
        raise NormUnderflow('final state has zero norm')
    return StateVector(psi / norm), jumps


def _ideal_state(seq, initial, target, compiled):
    n = seq.d ** 2
    unitary = np.asarray((target if target is not None else sequence_to_unitary(seq)).entries)
    amplitudes = compiled.embed(initial)
    ideal = np.zeros(compiled.dim, dtype=complex)
    ideal[:n] = unitary @ amplitudes[:n]
    return ideal / np.linalg.norm(ideal)


def _run_trajectory(compiled, model, ideal, initial, master_seed, index):
    rng = trajectory_rng(master_seed, index)
    shot = sample_shot(model, rng)
    final, jumps = quantum_jump_trajectory(compiled, model, shot, rng, initial)
    per_pulse = [0] * compiled.n_pulses
    for jump in jumps:
        per_pulse[jump.pulse] += 1
    fidelity = abs(np.vdot(ideal, final.amplitudes)) ** 2
    return TrajectoryResult(index, float(fidelity), len(jumps), tuple(per_pulse))


def _run_chunk(args):
    compiled, model, ideal, initial, master_seed, indices = args
    return [_run_trajectory(compiled, model, ideal, initial, master_seed, k) for k in indices]


def benchmark_gate(seq, model, config, library, initial=None, target=None, threads=1):
    """
    Mean trajectory fidelity ``|<psi_ideal|psi>|^2`` of ``seq`` under ``model``.

    ``initial`` defaults to the uniform product state; ``target`` defaults to
    the ideal action of the sequence.  With ``threads > 1`` trajectories run in
    worker processes.
    """
    compiled = compile_sequence(seq, model, library, config.dt)
    initial = initial if initial is not None else StateVector.uniform(seq.d, 2)
    ideal = _ideal_state(seq, initial, target, compiled)
    indices = list(range(config.n_traj))
    logger.info(
        f'noise.benchmark.start d={seq.d} pulses={compiled.n_pulses} n_traj={config.n_traj} '
        f'seed={config.master_seed} threads={threads}'
    )
    if threads > 1:
        size = math.ceil(len(indices) / (threads * 4))
        chunks = [indices[i:i + size] for i in range(0, len(indices), size)]
        work = [(compiled, model, ideal, initial, config.master_seed, chunk) for chunk in chunks]
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as executor:
            results = [result for batch in executor.map(_run_chunk, work) for result in batch]
    else:
        results = _run_chunk((compiled, model, ideal, initial, config.master_seed, indices))
    results.sort(key=lambda result: result.index)

    fidelities = np.array([result.fidelity for result in results])
    n = len(results)
    mean = math.fsum(fidelities) / n
    stderr = float(np.std(fidelities, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    histogram = dict(sorted(collections.Counter(result.jumps for result in results).items()))
    per_pulse = tuple(
        {
            'index': step.index,
            'label': step.label,
            'duration': step.grid.T,
            'mean_jumps': math.fsum(result.pulse_jumps[step.index] for result in results) / n,
        }
        for step in compiled.pulses
    )
    sim = SimResult(mean, stderr, n, histogram, per_pulse, config.master_seed)
    logger.info(
        f'noise.benchmark.done n_traj={n} fidelity={mean:.6f} stderr={stderr:.2g} mean_jumps={sim.mean_jumps:.4g}'
    )
    benchmark_finished.send(sender=SimResult, result=sim)
    return sim


# ---------------------------------------------------------------------------
# Pulse library
# ---------------------------------------------------------------------------

def library_entry(targets, theta, config, problem, result):
    """A library entry for an optimised CR pulse, with its ``chi_ryd``."""
    record = propagate(result.pulse.controls(), problem.basis, problem.grid)
    chi_ryd = average_rydberg_population(
        record, projectors(config.scheme, config.perfect_blockade), config.scheme.space
    )
    return PulseLibraryEntry(
        targets=targets,
        theta=theta,
        schedule=result.pulse,
        chi_ryd=chi_ryd,
        fidelity=result.fidelity,
        d=config.scheme.d,
    )


def synthesize_cr_entry(targets, theta, cap, duration, config=None, tones=None, free_phases=None,
                        parametrization='phase', ramp_fraction=None, omega0=None, K=None, seed=0, options=None):
    """Optimise ``CR_targets(theta)`` and package it as a library entry."""
    targets = tuple(sorted(targets))
    config = config or TwoAtomConfig(LevelScheme(max(targets) + 1, targets))
    problem = cr_problem(
        targets, theta, cap, duration,
        scheme=config.scheme,
        blockade_V=config.blockade_V,
        crosstalk_delta=config.crosstalk_delta,
        tones=tones,
        free_phases=free_phases,
        parametrization=parametrization,
        ramp_fraction=ramp_fraction,
        omega0=omega0,
        K=K,
    )
    result = optimize(problem, seed=seed, options=options)
    return library_entry(targets, theta, config, problem, result)


def pulse_propagation(entry, config):
    """Propagators of a library pulse run under ``config``."""
    basis = two_atom_control_basis(config, entry.schedule.tones)
    grid, controls = _refined_for(entry.schedule, config.crosstalk_delta)
    return propagate(controls, basis, grid)


def pulse_fidelity(entry, config):
    """
    Gate fidelity of a library pulse, with its recorded local phases, when
    run under ``config`` (finite blockade, crosstalk).
    """
    d = config.scheme.d
    record = pulse_propagation(entry, config)
    phases = np.asarray(local_phases(d, entry.chi).entries)
    target = np.asarray(cr(d, entry.targets, entry.theta).entries) @ np.kron(phases, phases)
    overlap = np.trace(target.conj().T @ record.projected)
    return float(abs(overlap) ** 2 / (d ** 4))


def benchmark_pulse(entry, model, config, d=None, threads=1):
    """Trajectory benchmark of a single CR pulse from the library."""
    d = d or max(entry.targets) + 1
    seq = GateSequence(d, (CRPulse(entry.targets, entry.theta, entry.chi),))
    return benchmark_gate(seq, model, config, PulseLibrary((entry,)), threads=threads)


# ---------------------------------------------------------------------------
# Scaling with d
# ---------------------------------------------------------------------------

def predict_cz_infidelity(d, cap, tau_ryd, library):
    """
    Decay-only CZ infidelity for ``compile_cz(d)``: the product of per-pulse
    survival factors, two-tone pulses counting twice, next to the closed form
    ``1 - F_1^((d-1)^2)`` built from the ``CR(pi)`` pulse.  Every angle needs a
    single-tone library pulse synthesized at ``cap``.
    """
    seq = compile_cz(d)
    exponent, durations = 0.0, []
    for pulse in seq.pulses:
        entry = library.for_angle(pulse.theta, cap)
        exponent += entry.decay_exponent(tau_ryd, pulse.n_tones)
        durations.append(entry.duration)
    f1 = math.exp(-library.for_angle(math.pi, cap).decay_exponent(tau_ryd))
    prediction = ScalingPrediction(
        d=d,
        product_infidelity=-math.expm1(-exponent),
        closed_form_infidelity=1 - f1 ** ((d - 1) ** 2),
        weighted_count=seq.tone_count,
        pulse_count=seq.pulse_count,
        mean_duration=math.fsum(durations) / len(durations) if durations else 0.0,
    )
    logger.debug(
        f'noise.predict.done d={d} product={prediction.product_infidelity:.4g} '
        f'closed_form={prediction.closed_form_infidelity:.4g} weighted={prediction.weighted_count}'
    )
    return prediction


def cz_angles(d_max):
    """Every non-trivial CR angle ``compile_cz(d)`` needs for ``d = 2..d_max``, plus ``pi``."""
    angles = [math.pi]
    for d in range(2, d_max + 1):
        for pulse in compile_cz(d).pulses:
            if not any(angles_equal(pulse.theta, seen) for seen in angles):
                angles.append(pulse.theta)
    return sorted(angles)


# ---------------------------------------------------------------------------
# Crosstalk re-optimisation
# ---------------------------------------------------------------------------

def reoptimize_with_crosstalk(delta, V, gates, cap, durations, rise_fall=None, d=3, omega0=None, K=None,
                              options=None, seed=0):
    """
    Re-synthesize CR pulses for a scheme with ``r_1 <-> |1>`` and ``r_2 <-> |2>``
    where each Rydberg tone also drives the other transition, detuned by
    ``delta``, at finite blockade ``V``.  Both Rydberg tones are driven in every
    pulse (Fourier series, raised-cosine ramps) so the second tone can cancel
    the leak of the first.

    ``gates`` is a sequence of ``(targets, theta)``; returns a PulseLibrary.
    """
    rise_fall = get_setting('RAMP_FRACTION') if rise_fall is None else rise_fall
    config = TwoAtomConfig(LevelScheme(d, (1, 2)), V, delta)
    options = options or OptimizerOptions()
    library = PulseLibrary()
    for (targets, theta), duration in zip(gates, durations):
        entry = synthesize_cr_entry(
            targets, theta, cap, duration,
            config=config,
            tones=[(1, RYDBERG), (2, RYDBERG)],
            free_phases=(1, 2),
            parametrization='fourier',
            ramp_fraction=rise_fall,
            omega0=omega0,
            K=K,
            seed=seed,
            options=options,
        )
        logger.info(
            f'noise.crosstalk.pulse targets={entry.targets} theta={entry.theta:.6g} fidelity={entry.fidelity:.6f}'
        )
        library = library.add(entry)
    return library
