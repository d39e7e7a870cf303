"""
Management utility to compile a qudit CZ gate into CR pulses.
"""
from pathlib import Path

from rydqudit.compiler import (
    compile_cz,
    compile_cz_qutrit_single_rydberg,
    lower_to_two_rydberg_levels,
    minimize_pulse_count,
    verify_cz,
)
from rydqudit.exceptions import InvalidConfiguration
from rydqudit.management.base import RydquditCommand
from rydqudit.models import CRPulse
from rydqudit.serializers import library_from_dict, load_json, sequence_to_dict


class Command(RydquditCommand):
    help = 'Compile CZ for a qudit of dimension d into CR pulses and write sequence.json.'

    def add_command_arguments(self, parser):
        parser.add_argument('--d', type=int, default=None, help='Qudit dimension. Default is 3.')
        parser.add_argument(
            '--max-tones', dest='max_tones', type=int, default=None,
            help='Search for the fewest pulses driving at most this many Rydberg tones at once.'
        )
        parser.add_argument(
            '--lower', action='store_true', default=None,
            help='Route every pulse onto the physically coupled Rydberg levels (--coupled).'
        )
        parser.add_argument(
            '--coupled', type=int, nargs='+', default=None,
            help='Levels with a physical Rydberg partner, used by --lower. Default is 1 2.'
        )
        parser.add_argument(
            '--library', default=None,
            help='Pulse library JSON; with --lower, its local phases are cancelled by virtual phases.'
        )
        parser.add_argument(
            '--single-rydberg', dest='single_rydberg', action='store_true', default=None,
            help='Qutrit only: the three-pulse sequence that couples level 2 alone.'
        )

    defaults = {'d': 3, 'max_tones': None, 'lower': False, 'coupled': [1, 2], 'library': None,
                'single_rydberg': False}

    def build(self, options):
        d = options['d']
        if options['single_rydberg']:
            if d != 3:
                raise InvalidConfiguration(f'--single-rydberg needs d=3, got d={d}')
            return compile_cz_qutrit_single_rydberg()
        if options['max_tones'] is not None:
            return minimize_pulse_count(d, options['max_tones'])
        return compile_cz(d)

    def run(self, **options):
        seq = self.build(options)
        if options['lower']:
            library = None
            if options['library']:
                library = library_from_dict(load_json(Path(options['library'])))
            seq = lower_to_two_rydberg_levels(seq, tuple(options['coupled']), library)
        ok, deviation = verify_cz(seq)
        self.write_json('sequence.json', sequence_to_dict(seq))
        for step in seq.steps:
            if isinstance(step, CRPulse):
                self.report(f'  {step.label}')
        self.report(
            f'CZ d={seq.d}: {seq.pulse_count} pulses, {seq.tone_count} tones, '
            f'{len(seq) - seq.pulse_count} local steps, deviation={deviation:.2g}'
        )
        if not ok:
            raise InvalidConfiguration(f'compiled sequence is off CZ by {deviation:.3g}')
