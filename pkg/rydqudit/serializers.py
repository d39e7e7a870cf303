"""
JSON and CSV forms of every artifact the commands read or write.

Every JSON document carries ``schema_version``.  Units follow the lab
convention: Rabi caps and detunings in MHz (or kHz for the detuning
spread), durations in microseconds, phases in radians.  Internally
everything is SI with angular frequencies.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.core.serializers.json import DjangoJSONEncoder

from .models import (
    CRPulse,
    FourierParams,
    GateSequence,
    NoiseModel,
    PulseLibrary,
    PulseLibraryEntry,
    PulseSchedule,
    QuditGate,
    RunManifest,
    SimResult,
    SingleQuditGate,
    TimeGrid,
    TrajectoryConfig,
    VirtualPhase,
)
from .utils import KHZ, MHZ, MICROSECOND
from .validators import SCHEMA_VERSION, quantity, validate_artifact


def _versioned(**fields):
    return dict(schema_version=SCHEMA_VERSION, **fields)


def _inf_or(value, scale):
    return 'inf' if math.isinf(value) else value / scale


def dump_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w') as fh:
        json.dump(data, fh, indent=2, cls=DjangoJSONEncoder)
        fh.write('\n')
    return path


def load_json(path):
    with Path(path).open() as fh:
        return json.load(fh)


# Gates

def gate_to_dict(gate):
    entries = np.asarray(gate.entries, dtype=complex)
    return _versioned(
        dim=gate.dim,
        label=gate.label,
        entries=[[[float(z.real), float(z.imag)] for z in row] for row in entries],
    )


def gate_from_dict(data):
    validate_artifact(data, 'gate', ('dim', 'entries'))
    entries = np.array([[complex(re, im) for re, im in row] for row in data['entries']])
    gate = QuditGate(entries, label=data.get('label', ''))
    if gate.dim != data['dim']:
        raise ValidationError(f'gate dim {data["dim"]} does not match its {gate.dim}x{gate.dim} entries.', 'invalid')
    return gate


# Pulses

def schedule_to_dict(schedule):
    fractions = schedule.amplitude_fraction()
    phases = schedule.phases(unwrapped=True)
    data = _versioned(
        tones=[{'lower': lower, 'upper': upper, 'cap_MHz': schedule.cap / MHZ} for lower, upper in schedule.tones],
        grid={'T_us': schedule.grid.T / MICROSECOND, 'N': schedule.grid.N},
        samples=[
            {'amplitude_frac': fractions[j].tolist(), 'phase_rad': phases[j].tolist()}
            for j in range(len(schedule.tones))
        ],
        wraps=[list(points) for points in schedule.wrap_points()],
        chi=[[level, value] for level, value in schedule.chi],
        fourier=None,
        exact={
            'T_s': schedule.grid.T,
            'cap_rad_s': schedule.cap,
            'envelopes_re': schedule.envelopes.real.tolist(),
            'envelopes_im': schedule.envelopes.imag.tolist(),
        },
    )
    if schedule.fourier is not None:
        fourier = schedule.fourier
        data['fourier'] = {
            'omega0': fourier.omega0,
            'K': fourier.K,
            'a': fourier.a.tolist(),
            'b': fourier.b.tolist(),
        }
    return data


def _tone_cap(data):
    caps = {tone['cap_MHz'] for tone in data['tones']}
    if len(caps) != 1:
        raise ValidationError('All tones of a pulse must share one Rabi cap.', 'invalid')
    return quantity(caps.pop(), 'cap_MHz') * MHZ


def _sampled_envelopes(data, cap):
    grid = TimeGrid(quantity(data['grid']['T_us'], 'T_us') * MICROSECOND, data['grid']['N'])
    envelopes = np.array([
        cap * np.asarray(sample['amplitude_frac']) * np.exp(1j * np.asarray(sample['phase_rad']))
        for sample in data['samples']
    ])
    return grid, envelopes


def schedule_from_dict(data):
    """
    Rebuild a pulse.  The ``exact`` block, when present, holds the SI values
    bit for bit; otherwise the envelopes come back from the rounded samples.
    """
    validate_artifact(data, 'pulse', ('tones', 'grid', 'samples'))
    cap = _tone_cap(data)
    if data.get('exact'):
        exact = data['exact']
        cap = quantity(exact['cap_rad_s'], 'cap_rad_s')
        grid = TimeGrid(quantity(exact['T_s'], 'T_s'), data['grid']['N'])
        envelopes = np.asarray(exact['envelopes_re'], dtype=float) + 1j * np.asarray(exact['envelopes_im'])
    else:
        grid, envelopes = _sampled_envelopes(data, cap)
    fourier = None
    if data.get('fourier'):
        block = data['fourier']
        fourier = FourierParams(block['omega0'], block['K'], np.array(block['a']), np.array(block['b']))
    return PulseSchedule(
        tones=tuple((tone['lower'], tone['upper']) for tone in data['tones']),
        cap=cap,
        grid=grid,
        envelopes=envelopes,
        fourier=fourier,
        chi=tuple((level, value) for level, value in data.get('chi', [])),
    )


# Sequences

def _step_to_dict(step):
    if isinstance(step, SingleQuditGate):
        return {'type': 'single', 'payload': {'label': step.label, 'gate': gate_to_dict(step.gate)}}
    if isinstance(step, VirtualPhase):
        return {'type': 'virtual', 'payload': {'level': step.level, 'theta': step.theta}}
    return {
        'type': 'cr',
        'payload': {'targets': list(step.targets), 'theta': step.theta, 'chi': [list(c) for c in step.chi]},
    }


def _step_from_dict(data):
    kind, payload = data.get('type'), data.get('payload', {})
    if kind == 'single':
        return SingleQuditGate(gate_from_dict(payload['gate']), label=payload.get('label', ''))
    if kind == 'virtual':
        return VirtualPhase(payload['level'], payload['theta'])
    if kind == 'cr':
        return CRPulse(tuple(payload['targets']), payload['theta'], tuple(tuple(c) for c in payload.get('chi', [])))
    raise ValidationError(f'Unknown step type {kind!r}.', 'invalid')


def sequence_to_dict(seq):
    return _versioned(
        d=seq.d,
        pulse_count=seq.pulse_count,
        tone_count=seq.tone_count,
        steps=[_step_to_dict(step) for step in seq.steps],
    )


def sequence_from_dict(data):
    validate_artifact(data, 'sequence', ('d', 'steps'))
    return GateSequence(data['d'], tuple(_step_from_dict(step) for step in data['steps']))


# Noise

def noise_config_to_dict(model, config=None):
    data = _versioned(
        tau_ryd_us=_inf_or(model.tau_ryd, MICROSECOND),
        detuning_sigma_kHz=model.detuning_sigma / KHZ,
        intensity_rel_var=model.intensity_rel_var,
        V_MHz=_inf_or(model.blockade_V, MHZ),
        delta_MHz=None if model.crosstalk_delta is None else model.crosstalk_delta / MHZ,
        decay_target=model.decay_target,
    )
    if config is not None:
        data.update(
            n_traj=config.n_traj,
            seed=config.master_seed,
            dt_us=None if config.dt is None else config.dt / MICROSECOND,
        )
    return data


def noise_config_from_dict(data):
    """``(NoiseModel, TrajectoryConfig)`` from a noise config document."""
    validate_artifact(data, 'noise config', ('tau_ryd_us', 'detuning_sigma_kHz', 'intensity_rel_var', 'V_MHz'))
    delta = data.get('delta_MHz')
    model = NoiseModel(
        tau_ryd=quantity(data['tau_ryd_us'], 'tau_ryd_us', allow_inf=True) * MICROSECOND,
        detuning_sigma=quantity(data['detuning_sigma_kHz'], 'detuning_sigma_kHz', allow_zero=True) * KHZ,
        intensity_rel_var=quantity(data['intensity_rel_var'], 'intensity_rel_var', allow_zero=True),
        blockade_V=quantity(data['V_MHz'], 'V_MHz', allow_inf=True) * MHZ,
        crosstalk_delta=None if delta is None else quantity(delta, 'delta_MHz') * MHZ,
        decay_target=data.get('decay_target', 0),
    )
    kwargs = {}
    if 'n_traj' in data:
        kwargs['n_traj'] = data['n_traj']
    if data.get('dt_us') is not None:
        kwargs['dt'] = quantity(data['dt_us'], 'dt_us') * MICROSECOND
    config = TrajectoryConfig(master_seed=data.get('seed', 0), **kwargs)
    return model, config


def sim_result_to_dict(result):
    return _versioned(
        fidelity=result.fidelity_mean,
        stderr=result.fidelity_stderr,
        n_traj=result.n_traj,
        seed=result.master_seed,
        jumps={str(count): n for count, n in result.jump_histogram.items()},
        mean_jumps=result.mean_jumps,
        per_pulse=list(result.per_pulse),
    )


def sim_result_from_dict(data):
    validate_artifact(data, 'simulation result', ('fidelity', 'stderr', 'n_traj', 'jumps'))
    return SimResult(
        fidelity_mean=data['fidelity'],
        fidelity_stderr=data['stderr'],
        n_traj=data['n_traj'],
        jump_histogram={int(count): n for count, n in data['jumps'].items()},
        per_pulse=tuple(data.get('per_pulse', ())),
        master_seed=data.get('seed', 0),
    )


# Library

def library_to_dict(library):
    return _versioned(entries=[
        {
            'targets': list(entry.targets),
            'theta': entry.theta,
            'chi_ryd': entry.chi_ryd,
            'fidelity': entry.fidelity,
            'd': entry.d,
            'schedule': schedule_to_dict(entry.schedule),
        }
        for entry in library
    ])


def library_from_dict(data):
    validate_artifact(data, 'pulse library', ('entries',))
    entries = tuple(
        PulseLibraryEntry(
            targets=tuple(item['targets']),
            theta=item['theta'],
            schedule=schedule_from_dict(item['schedule']),
            chi_ryd=item['chi_ryd'],
            fidelity=item['fidelity'],
            d=item.get('d', 2),
        )
        for item in data['entries']
    )
    return PulseLibrary(entries)


# Manifests

def manifest_to_dict(manifest):
    return _versioned(
        command=manifest.command,
        options=manifest.options,
        seeds=manifest.seeds,
        version=manifest.version,
        started_at=manifest.started_at,
        finished_at=manifest.finished_at,
        outputs=list(manifest.outputs),
    )


def manifest_from_dict(data):
    validate_artifact(data, 'manifest', ('command', 'options'))
    return RunManifest(
        command=data['command'],
        options=dict(data['options']),
        seeds=dict(data.get('seeds', {})),
        version=data.get('version', ''),
        started_at=data.get('started_at', ''),
        finished_at=data.get('finished_at', ''),
        outputs=tuple(data.get('outputs', ())),
    )


# CSV

def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_pulse_csv(path, schedule):
    """``t_us`` at slice midpoints, then ``|Omega|/cap`` and unwrapped phase per tone."""
    fractions = schedule.amplitude_fraction()
    phases = schedule.phases(unwrapped=True)
    header = ['t_us']
    for lower, upper in schedule.tones:
        header += [f'amp_{lower}_{upper}', f'phase_{lower}_{upper}']
    times = schedule.grid.midpoints / MICROSECOND
    rows = []
    for r, t in enumerate(times):
        row = [t]
        for j in range(len(schedule.tones)):
            row += [fractions[j, r], phases[j, r]]
        rows.append(row)
    return _write_rows(path, header, rows)


def write_population_csv(path, trajectory, labels):
    populations = trajectory.populations()
    rows = [[t / MICROSECOND] + list(p) for t, p in zip(trajectory.times, populations)]
    return _write_rows(path, ['t_us'] + list(labels), rows)


def write_scan_csv(path, scan):
    rows = [
        [t / MICROSECOND, f, int(math.isclose(t, scan.t_opt))]
        for t, f in zip(scan.times, scan.fidelities)
    ]
    return _write_rows(path, ['T_us', 'fidelity', 't_opt'], rows)


def write_scaling_csv(path, predictions):
    rows = [
        [p.d, p.product_infidelity, p.closed_form_infidelity, p.weighted_count, p.pulse_count,
         p.mean_duration / MICROSECOND]
        for p in predictions
    ]
    header = ['d', 'infidelity', 'closed_form', 'weighted_pulses', 'pulses', 'mean_duration_us']
    return _write_rows(path, header, rows)
