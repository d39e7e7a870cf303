"""
Management utility to scan the best reachable fidelity against pulse
duration.
"""
from rydqudit.conf import get_setting
from rydqudit.grape import find_optimal_time
from rydqudit.management import gate_family, optimizer_options
from rydqudit.management.base import RydquditCommand
from rydqudit.serializers import write_scan_csv
from rydqudit.utils import MICROSECOND


class Command(RydquditCommand):
    help = 'Scan F(T) for x, h or cr and write scan.csv with the optimal duration marked.'

    def add_command_arguments(self, parser):
        self.add_gate_arguments(parser)
        parser.add_argument(
            '--threshold', type=float, default=None,
            help='Fidelity that defines the optimal duration. Default is RYDQUDIT_FIDELITY_THRESHOLD.'
        )

    @property
    def defaults(self):
        return dict(self.gate_defaults, threshold=None)

    def run(self, **options):
        family = gate_family(options)
        threshold = options['threshold'] or get_setting('FIDELITY_THRESHOLD')
        scan = find_optimal_time(
            family.build,
            family.bracket(options['t_min_us'], options['t_max_us']),
            threshold=threshold,
            points=options['points'],
            options=optimizer_options(options),
            seed=options['seed'],
            threads=options['threads'],
        )
        self.write_csv(write_scan_csv, 'scan.csv', scan)
        self.report(
            f'T_opt = {scan.t_opt / MICROSECOND:.6g} us '
            f'({scan.t_opt * family.cap:.6g}/Omega), F = {scan.best.fidelity:.8f}'
        )
