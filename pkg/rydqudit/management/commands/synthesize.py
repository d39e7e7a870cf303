"""
Management utility to synthesize an optimal-time pulse for a single-qudit
gate or a CR pulse.
"""
from rydqudit.conf import get_setting
from rydqudit.dynamics import evolve_state
from rydqudit.grape import find_optimal_time, optimize
from rydqudit.hamiltonian import two_atom_space
from rydqudit.management import gate_family, optimizer_options
from rydqudit.management.base import RydquditCommand
from rydqudit.models import StateVector
from rydqudit.noise import library_entry
from rydqudit.serializers import schedule_to_dict, write_population_csv, write_pulse_csv, write_scan_csv
from rydqudit.utils import MICROSECOND


def level_names(scheme):
    return [str(i) if i < scheme.d else f'r{scheme.coupled_level(i)}' for i in range(scheme.dim)]


class Command(RydquditCommand):
    help = 'Synthesize a pulse for x, h or cr: scan for the optimal duration, then write the pulse.'

    def add_command_arguments(self, parser):
        self.add_gate_arguments(parser)
        parser.add_argument(
            '--duration-us', dest='duration_us', type=float, default=None,
            help='Optimise at this duration instead of scanning for the optimal one.'
        )
        parser.add_argument(
            '--library', default=None,
            help='For cr: pulse library JSON to add the new pulse to. Default is library.json in --out-dir.'
        )

    @property
    def defaults(self):
        return dict(self.gate_defaults, duration_us=None, library=None)

    def run(self, **options):
        family = gate_family(options)
        threshold = get_setting('FIDELITY_THRESHOLD')
        solver = optimizer_options(options)
        if options['duration_us'] is not None:
            duration = options['duration_us'] * MICROSECOND
            result = optimize(family.build(duration), seed=options['seed'], options=solver)
        else:
            scan = find_optimal_time(
                family.build, family.bracket(options['t_min_us'], options['t_max_us']),
                threshold=threshold, points=options['points'], options=solver,
                seed=options['seed'], threads=options['threads'],
            )
            self.write_csv(write_scan_csv, 'scan.csv', scan)
            duration, result = scan.t_opt, scan.best
        problem = family.build(duration)
        pulse = result.pulse
        self.write_json('pulse.json', schedule_to_dict(pulse))
        self.write_csv(write_pulse_csv, 'pulse.csv', pulse)
        self.write_populations(family, problem, pulse)
        if family.gate == 'cr':
            entry = library_entry(family.targets, family.theta, family.config, problem, result)
            path = self.library_path(options)
            self.save_library(path, self.load_library(path).add(entry))
            self.report(f'chi_ryd={entry.chi_ryd:.6f} chi={dict(entry.chi)}')
        self.report(
            f'{problem.label}: T={duration / MICROSECOND:.6g} us, F={result.fidelity:.8f}, '
            f'iterations={result.iterations}, converged={result.converged}'
        )
        self.require_fidelity(result.fidelity, threshold, problem.label)

    def write_populations(self, family, problem, pulse):
        """Populations along the pulse from |0> (or from |t,t> for CR_S, t the lowest target)."""
        hamiltonians = problem.basis.hamiltonians(pulse.controls(), problem.grid.midpoints)
        if family.config is None:
            initial = StateVector.basis(problem.basis.dim, 0)
            labels = [str(j) for j in range(problem.basis.dim)]
        else:
            scheme = family.config.scheme
            space = two_atom_space(scheme, not family.config.perfect_blockade)
            level = family.targets[0]
            initial = StateVector.basis(space.dim, space.index[(level, level)])
            names = level_names(scheme)
            labels = [f'{names[a]}{names[b]}' for a, b in space.states]
        trajectory = evolve_state(initial, hamiltonians, problem.grid)
        self.write_csv(write_population_csv, 'populations.csv', trajectory, labels)
