"""
Plumbing shared by every rydqudit management command: the global flags,
JSON config files, run manifests and exit codes.
"""
import datetime
import logging
from pathlib import Path

from django.core import exceptions
from django.core.management.base import BaseCommand, CommandError

from rydqudit import __version__
from rydqudit.conf import get_setting
from rydqudit.exceptions import BracketError, ConvergenceError, MissingPulse, PulseBudgetExceeded, RydquditError
from rydqudit.models import PulseLibrary, RunManifest
from rydqudit.serializers import (
    dump_json,
    library_from_dict,
    library_to_dict,
    load_json,
    manifest_from_dict,
    manifest_to_dict,
)

logger = logging.getLogger('rydqudit')

# exit codes
VALIDATION_ERROR = 2
NOT_CONVERGED = 3

# BaseCommand's own options; never recorded or replayed
DJANGO_OPTIONS = (
    'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks', 'stdout', 'stderr',
    'config',
)


class RydquditCommand(BaseCommand):
    """
    Subclasses declare their options with ``default=None`` and put the real
    defaults in ``defaults``; that way an option given on the command line
    wins over the same option from ``--config``, which wins over the default.
    """

    requires_system_checks = []
    defaults = {}
    global_defaults = {'seed': 0}

    def add_arguments(self, parser):
        parser.add_argument(
            '--seed', type=int, default=None,
            help='Master seed for every random draw. Default is 0.'
        )
        parser.add_argument(
            '--threads', type=int, default=None,
            help='Worker count for multistarts, scans and trajectories. Default is RYDQUDIT_THREADS.'
        )
        parser.add_argument(
            '--out-dir', dest='out_dir', default=None,
            help='Directory for every file this command writes. Default is RYDQUDIT_OUT_DIR.'
        )
        parser.add_argument(
            '--config', default=None,
            help='JSON file of option values, or the manifest of an earlier run to replay.'
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def add_gate_arguments(self, parser):
        parser.add_argument('gate', nargs='?', default=None, help='x, h or cr.')
        parser.add_argument('--d', type=int, default=None, help='Qudit dimension. Default is 2.')
        parser.add_argument(
            '--targets', type=int, nargs='+', default=None,
            help='Rydberg-coupled target levels of a CR gate. Default is d-1.'
        )
        parser.add_argument('--theta', default=None, help='CR angle, e.g. 4pi/3. Default is pi.')
        parser.add_argument(
            '--omega-mhz', dest='omega_mhz', type=float, default=None,
            help='Rabi frequency cap in MHz (Omega/2pi). Default is 5.'
        )
        parser.add_argument(
            '--mode', choices=('phase', 'slice', 'fourier'), default=None,
            help='Pulse parametrization. Default is phase.'
        )
        parser.add_argument('--starts', type=int, default=None, help='Random restarts per duration.')
        parser.add_argument(
            '--ramp-fraction', dest='ramp_fraction', type=float, default=None,
            help='Raised-cosine rise and fall, as a fraction of the pulse. Default is 0.'
        )
        parser.add_argument(
            '--blockade-mhz', dest='blockade_mhz', default=None,
            help='Blockade shift V/2pi in MHz, or inf. Default is inf.'
        )
        parser.add_argument('--t-min-us', dest='t_min_us', type=float, default=None)
        parser.add_argument('--t-max-us', dest='t_max_us', type=float, default=None)
        parser.add_argument(
            '--points', type=int, default=None, help='Durations per scan. Default is RYDQUDIT_SCAN_POINTS.'
        )

    gate_defaults = {
        'gate': 'x', 'd': 2, 'targets': None, 'theta': 'pi', 'omega_mhz': 5.0, 'mode': 'phase',
        'starts': None, 'ramp_fraction': 0.0, 'blockade_mhz': 'inf', 't_min_us': None, 't_max_us': None,
        'points': None,
    }

    @property
    def command_name(self):
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def read_config(self, path):
        data = load_json(path)
        if 'command' in data and 'options' in data:
            return manifest_from_dict(data).options
        return {key.replace('-', '_'): value for key, value in data.items() if key != 'schema_version'}

    def resolve_options(self, options):
        given = {key: value for key, value in options.items() if value is not None and key not in DJANGO_OPTIONS}
        from_file = self.read_config(options['config']) if options.get('config') else {}
        self.explicit = set(from_file) | set(given)
        resolved = {
            'threads': get_setting('THREADS'),
            'out_dir': get_setting('OUT_DIR'),
            **self.global_defaults,
            **self.defaults,
            **from_file,
            **given,
        }
        resolved['verbosity'] = options.get('verbosity', 1)
        return resolved

    def write_json(self, name, data):
        path = dump_json(Path(self.out_dir) / name, data)
        self.outputs.append(str(path))
        return path

    def write_csv(self, writer, name, *args):
        path = writer(Path(self.out_dir) / name, *args)
        self.outputs.append(str(path))
        return path

    def library_path(self, options):
        """``--library`` as given, or library.json in the output directory."""
        return Path(options['library']) if options.get('library') else Path(self.out_dir) / 'library.json'

    def load_library(self, path):
        return library_from_dict(load_json(path)) if path.exists() else PulseLibrary()

    def save_library(self, path, library):
        self.outputs.append(str(dump_json(path, library_to_dict(library))))

    def report(self, message):
        if self.verbosity >= 1:
            self.stdout.write(message)

    def handle(self, *args, **options):
        try:
            options = self.resolve_options(options)
        except exceptions.ValidationError as e:
            raise CommandError('; '.join(e.messages), returncode=VALIDATION_ERROR)
        except (OSError, ValueError) as e:
            raise CommandError(f'cannot read --config: {e}', returncode=VALIDATION_ERROR)
        self.out_dir = options['out_dir']
        self.verbosity = options['verbosity']
        self.outputs = []
        recorded = {key: value for key, value in options.items() if key not in DJANGO_OPTIONS}
        manifest = RunManifest(
            command=self.command_name,
            options=recorded,
            seeds={'master': options['seed']},
            version=__version__,
            started_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        )
        logger.info(f'command.start command={self.command_name} seed={options["seed"]}')
        try:
            self.run(**options)
        except exceptions.ValidationError as e:
            raise CommandError('; '.join(e.messages), returncode=VALIDATION_ERROR)
        except (BracketError, PulseBudgetExceeded, MissingPulse, ConvergenceError) as e:
            logger.warning(f'command.failed command={self.command_name} error={e.__class__.__name__}')
            raise CommandError(str(e), returncode=NOT_CONVERGED)
        except (OSError, ValueError, RydquditError) as e:
            raise CommandError(str(e), returncode=VALIDATION_ERROR)
        finally:
            manifest.finished_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
            manifest.outputs = tuple(self.outputs)
            dump_json(Path(self.out_dir) / f'{self.command_name}.manifest.json', manifest_to_dict(manifest))
        logger.info(f'command.done command={self.command_name} outputs={len(self.outputs)}')

    def run(self, **options):
        raise NotImplementedError('subclasses of RydquditCommand must provide a run() method')

    def require_fidelity(self, fidelity, threshold, what):
        if fidelity < threshold:
            raise ConvergenceError(f'{what} reached F={fidelity:.6f}, below {threshold}')
