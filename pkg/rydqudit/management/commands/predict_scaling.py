"""
Management utility to predict the decay-limited CZ infidelity against the
qudit dimension.
"""
import math

from rydqudit.exceptions import BracketError, MissingPulse
from rydqudit.grape import cr_problem, find_optimal_time
from rydqudit.management import optimizer_options
from rydqudit.management.base import RydquditCommand
from rydqudit.models import LevelScheme, TwoAtomConfig
from rydqudit.noise import cz_angles, library_entry, predict_cz_infidelity
from rydqudit.serializers import write_scaling_csv
from rydqudit.utils import MHZ, MICROSECOND


class Command(RydquditCommand):
    help = 'Tabulate the predicted CZ infidelity for d = 2..d_max and write scaling.csv.'

    # bracket widenings before a missing pulse counts as unsynthesizable
    RETRIES = 3

    def add_command_arguments(self, parser):
        parser.add_argument('--d-max', dest='d_max', type=int, default=None, help='Largest dimension. Default is 7.')
        parser.add_argument(
            '--tau-us', dest='tau_us', type=float, default=None,
            help='Rydberg lifetime in microseconds. Default is 60.'
        )
        parser.add_argument(
            '--omega-mhz', dest='omega_mhz', type=float, default=None,
            help='Rabi frequency cap in MHz (Omega/2pi). Default is 5.'
        )
        parser.add_argument(
            '--library', default=None,
            help='Pulse library JSON; missing pulses are synthesized and added. Default is library.json in --out-dir.'
        )
        parser.add_argument('--starts', type=int, default=None, help='Random restarts per duration.')
        parser.add_argument('--points', type=int, default=None, help='Durations per scan.')

    defaults = {'d_max': 7, 'tau_us': 60.0, 'omega_mhz': 5.0, 'library': None, 'starts': None, 'points': None}

    def synthesize(self, theta, cap, options):
        """The optimal-time single-tone ``CR_1(theta)`` on a qubit."""
        config = TwoAtomConfig(LevelScheme(2, (1,)))

        def build(duration):
            return cr_problem((1,), theta, cap, duration, scheme=config.scheme)

        t_min, t_max = 0.25 * math.pi / cap, 8 * math.pi / cap
        for attempt in range(self.RETRIES + 1):
            try:
                scan = find_optimal_time(
                    build, (t_min, t_max), points=options['points'], options=optimizer_options(options),
                    seed=options['seed'], threads=options['threads'],
                )
                break
            except BracketError:
                if attempt == self.RETRIES:
                    raise
                t_min, t_max = t_min / 2, t_max * 2
        entry = library_entry((1,), theta, config, build(scan.t_opt), scan.best)
        self.report(f'synthesized CR_1({theta:.6g}): T={entry.duration / MICROSECOND:.6g} us F={entry.fidelity:.8f}')
        return entry

    def run(self, **options):
        cap = options['omega_mhz'] * MHZ
        tau = options['tau_us'] * MICROSECOND
        if options['d_max'] < 2:
            raise ValueError(f'--d-max must be at least 2, got {options["d_max"]}')
        path = self.library_path(options)
        library = self.load_library(path)
        added = 0
        for theta in cz_angles(options['d_max']):
            try:
                library.for_angle(theta, cap)
                continue
            except MissingPulse:
                pass
            library = library.add(self.synthesize(theta, cap, options))
            added += 1
        if added:
            self.save_library(path, library)
        predictions = [predict_cz_infidelity(d, cap, tau, library) for d in range(2, options['d_max'] + 1)]
        self.write_csv(write_scaling_csv, 'scaling.csv', predictions)
        for p in predictions:
            self.report(
                f'd={p.d}: 1-F={p.product_infidelity:.4g} (closed form {p.closed_form_infidelity:.4g}), '
                f'{p.weighted_count} weighted pulses, mean T={p.mean_duration / MICROSECOND:.4g} us'
            )
