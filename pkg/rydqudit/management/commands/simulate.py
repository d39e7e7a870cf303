"""
Management utility to benchmark a compiled gate sequence with quantum-jump
trajectories.
"""
import dataclasses

from rydqudit.management.base import RydquditCommand
from rydqudit.models import NoiseModel, TrajectoryConfig
from rydqudit.noise import benchmark_gate
from rydqudit.serializers import (
    library_from_dict,
    load_json,
    noise_config_from_dict,
    noise_config_to_dict,
    sequence_from_dict,
    sim_result_to_dict,
)
from rydqudit.utils import KHZ, MHZ, MICROSECOND
from rydqudit.validators import quantity


class Command(RydquditCommand):
    help = 'Run the quantum-jump benchmark of a gate sequence and write result.json.'

    def add_command_arguments(self, parser):
        parser.add_argument('--sequence', default=None, help='Sequence JSON written by compile_cz. Required.')
        parser.add_argument('--library', default=None, help='Pulse library JSON with every CR pulse. Required.')
        parser.add_argument('--noise-config', dest='noise_config', default=None, help='Noise config JSON.')
        parser.add_argument('--n-traj', dest='n_traj', type=int, default=None, help='Number of trajectories.')
        parser.add_argument(
            '--tau-ryd-us', dest='tau_ryd_us', type=float, default=None,
            help='Rydberg lifetime in microseconds, or inf.'
        )
        parser.add_argument(
            '--sigma-khz', dest='sigma_khz', type=float, default=None,
            help='Standard deviation of the shot-to-shot detuning, Delta/2pi in kHz.'
        )
        parser.add_argument('--var', type=float, default=None, help='Relative intensity variance.')
        parser.add_argument('--v-mhz', dest='v_mhz', type=float, default=None, help='Blockade V/2pi in MHz, or inf.')
        parser.add_argument('--delta-mhz', dest='delta_mhz', type=float, default=None, help='Crosstalk splitting.')
        parser.add_argument('--dt-us', dest='dt_us', type=float, default=None, help='Largest propagation step.')

    defaults = {
        'sequence': None, 'library': None, 'noise_config': None, 'n_traj': None, 'tau_ryd_us': None,
        'sigma_khz': None, 'var': None, 'v_mhz': None, 'delta_mhz': None, 'dt_us': None,
    }

    def noise(self, options):
        """The noise model and trajectory config: the config file, then the flags on top."""
        if options['noise_config']:
            model, config = noise_config_from_dict(load_json(options['noise_config']))
        else:
            model, config = NoiseModel(), TrajectoryConfig()
        changes = {}
        if options['tau_ryd_us'] is not None:
            changes['tau_ryd'] = quantity(options['tau_ryd_us'], 'tau_ryd_us', allow_inf=True) * MICROSECOND
        if options['sigma_khz'] is not None:
            changes['detuning_sigma'] = quantity(options['sigma_khz'], 'sigma_khz', allow_zero=True) * KHZ
        if options['var'] is not None:
            changes['intensity_rel_var'] = quantity(options['var'], 'var', allow_zero=True)
        if options['v_mhz'] is not None:
            changes['blockade_V'] = quantity(options['v_mhz'], 'v_mhz', allow_inf=True) * MHZ
        if options['delta_mhz'] is not None:
            changes['crosstalk_delta'] = quantity(options['delta_mhz'], 'delta_mhz') * MHZ
        model = dataclasses.replace(model, **changes)
        config = TrajectoryConfig(
            n_traj=options['n_traj'] or config.n_traj,
            master_seed=options['seed'] if 'seed' in self.explicit else config.master_seed,
            dt=config.dt if options['dt_us'] is None else quantity(options['dt_us'], 'dt_us') * MICROSECOND,
        )
        return model, config

    def run(self, **options):
        for name in ('sequence', 'library'):
            if not options[name]:
                raise ValueError(f'--{name} is required')
        seq = sequence_from_dict(load_json(options['sequence']))
        library = library_from_dict(load_json(options['library']))
        model, config = self.noise(options)
        result = benchmark_gate(seq, model, config, library, threads=options['threads'])
        data = sim_result_to_dict(result)
        data['noise'] = noise_config_to_dict(model, config)
        self.write_json('result.json', data)
        self.report(
            f'F = {result.fidelity_mean:.6f} +/- {result.fidelity_stderr:.2g} '
            f'({result.n_traj} trajectories, seed {result.master_seed}, mean jumps {result.mean_jumps:.4g})'
        )
